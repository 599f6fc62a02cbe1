"""Nested-subspace diagnostics behind the multiplicity theory.

On the eigenbasis of the decoupled linear operator, the head spans Y_k
and tail spans Z_k carry two computable quantities: the largest p-norm
beta_k on the unit sphere of Z_k (which must decay to zero) and the
radius rho_k at which the energy on the Y_k sphere turns nonpositive.
Together they quantify the mountain-pass geometry that produces an
unbounded sequence of critical values.
"""

from nehari import eigenbasis, fountain_diagnostics
from nehari.cli import default_bounded_spec

spec = default_bounded_spec()

print("lowest eigenvalues of the decoupled operator (u and v blocks interleave):")
for j, (lam, _) in enumerate(eigenbasis(spec, 8)):
    print(f"  {j}: {lam:12.6f}")

report = fountain_diagnostics(spec, k_max=20)
print(f"\n{'k':>3s} {'beta_k':>10s} {'r_k':>10s} {'b_lower_k':>12s} {'rho_k':>8s} {'a_max':>10s}")
for k in range(report.k_max):
    rho, amax = report.a_check[k]
    print(f"{k + 1:3d} {report.beta[k]:10.5f} {report.r[k]:10.4f} "
          f"{report.b_lower[k]:12.4f} {rho:8.1f} {amax:10.3f}")

print(f"\nbeta decays: beta_20 / beta_1 = {report.beta[-1] / report.beta[0]:.4f}")
print("b_lower grows once beta_k < 1, matching the energy blow-up of the "
      "higher critical levels")
