"""Eigenbasis, Fountain diagnostics, orbit distances, deflation."""

import numpy as np
import pytest

from nehari.grid import DomainSpec, shift
from nehari.energy import State, e_inner, norm_E
from nehari.solver import SolveConfig, find_ground_state
from nehari.multiplicity import (
    SolutionSet,
    deflated_search,
    eigenbasis,
    find_distinct_solutions,
    fountain_diagnostics,
    orbit_distance,
)
from conftest import make_spec, random_state


def test_eigenbasis_dirichlet_formula(small_bounded_spec):
    """Block eigenvalues follow the stencil formula; pairs come doubled."""
    spec = small_bounded_spec
    n = spec.domain.shape[0]
    h = spec.domain.spacing[0]
    pairs = eigenbasis(spec, 8)
    exact = [4.0 / h ** 2 * np.sin(j * np.pi * h / 2.0) ** 2 + 1.0 for j in (1, 2, 3, 4)]
    for j, lam in enumerate(exact):
        # identical u- and v-blocks produce each eigenvalue twice
        assert abs(pairs[2 * j][0] - lam) <= 1e-9 * lam
        assert abs(pairs[2 * j + 1][0] - lam) <= 1e-9 * lam
    vals = [lam for lam, _ in pairs]
    assert vals == sorted(vals)


def test_eigenbasis_orthonormal(bounded_2d_spec):
    pairs = eigenbasis(bounded_2d_spec, 12)
    G = np.array([[e_inner(bounded_2d_spec, si, sj) for _, sj in pairs]
                  for _, si in pairs])
    assert np.max(np.abs(G - np.eye(12))) <= 1e-10


def test_eigenbasis_guards(small_bounded_spec):
    with pytest.raises(ValueError):
        eigenbasis(small_bounded_spec, 1000)   # more than 2n pairs
    big = make_spec(DomainSpec.dirichlet_box((1.0, 1.0), (128, 128)))
    with pytest.raises(ValueError):
        eigenbasis(big, 4)


def test_orbit_distance_quotients(periodic_spec_1d):
    rng = np.random.default_rng(0)
    spec = periodic_spec_1d
    s = random_state(spec, rng)
    assert orbit_distance(spec, s, State(shift(s.u, (3,)), shift(s.v, (3,)))) \
        <= 1e-7 * norm_E(spec, s)
    assert orbit_distance(spec, s, s.scaled(-1.0)) <= 1e-7 * norm_E(spec, s)


def test_orbit_distance_pseudometric(periodic_spec_1d, small_bounded_spec):
    rng = np.random.default_rng(1)
    for spec in (periodic_spec_1d, small_bounded_spec):
        for _ in range(5):
            a, b, c = (random_state(spec, rng) for _ in range(3))
            dab = orbit_distance(spec, a, b)
            dba = orbit_distance(spec, b, a)
            assert abs(dab - dba) <= 1e-9 * (dab + 1.0)
            assert orbit_distance(spec, a, c) <= dab + orbit_distance(spec, b, c) + 1e-9


def test_orbit_distance_bounded_sign_quotient(small_bounded_spec):
    rng = np.random.default_rng(2)
    s = random_state(small_bounded_spec, rng)
    assert orbit_distance(small_bounded_spec, s, s.scaled(-1.0)) == 0.0
    t = random_state(small_bounded_spec, rng)
    direct = min(
        norm_E(small_bounded_spec, State.from_values(
            s.domain, s.u.values - t.u.values, s.v.values - t.v.values)),
        norm_E(small_bounded_spec, State.from_values(
            s.domain, s.u.values + t.u.values, s.v.values + t.v.values)),
    )
    assert abs(orbit_distance(small_bounded_spec, s, t) - direct) <= 1e-9 * direct


def test_fountain_diagnostics_small(small_bounded_spec):
    spec = small_bounded_spec
    rep = fountain_diagnostics(spec, 10, buffer=6, restarts=8, seed=0)
    assert len(rep.beta) == 10
    assert all(b2 <= b1 for b1, b2 in zip(rep.beta, rep.beta[1:]))
    assert rep.beta[-1] < rep.beta[0]
    assert all(a <= 0.0 for _, a in rep.a_check)
    assert all(rho >= 1.0 for rho, _ in rep.a_check)

    # independent recomputation of the closed formulas from beta
    p = spec.p_max
    delta = spec.effective_delta()
    c_tilde = max(sum(a for a, _ in nl.terms) for nl in (spec.f1, spec.f2))
    vol_omega = float(np.prod(spec.domain.lengths))
    for b, r, bl in zip(rep.beta, rep.r, rep.b_lower):
        base = 2.0 * c_tilde * (p / (1.0 - delta)) * b ** p
        assert np.isclose(r, base ** (1.0 / (2.0 - p)), rtol=1e-12)
        expected = (1.0 - delta) * (0.5 - 1.0 / p) * base ** (2.0 / (2.0 - p)) \
            - 2.0 * c_tilde * vol_omega
        assert np.isclose(bl, expected, rtol=1e-12)

    text = rep.format_text()
    assert text.splitlines()[0] == "k,beta,r,b_lower,rho,a_max"


def test_fountain_b_lower_trend(small_bounded_spec):
    rep = fountain_diagnostics(small_bounded_spec, 12, buffer=8, restarts=8, seed=1)
    tail = rep.b_lower[-4:]
    assert all(b2 >= b1 for b1, b2 in zip(tail, tail[1:]))


def test_deflated_search_empty_equals_ground(small_bounded_spec):
    cfg = SolveConfig(seed=3, starts=3)
    rep_g, s_g = find_ground_state(small_bounded_spec, cfg)
    rep_d, s_d = deflated_search(small_bounded_spec, cfg, SolutionSet(small_bounded_spec))
    assert rep_d == rep_g
    assert np.array_equal(s_d.u.values, s_g.u.values)


def test_solution_set_bookkeeping(small_bounded_spec):
    spec = small_bounded_spec
    cfg = SolveConfig(seed=4, starts=3)
    rep, s = find_ground_state(spec, cfg)
    sols = SolutionSet(spec)
    assert sols.add(s, rep) == "added"
    assert sols.add(s, rep) == "known"
    swapped = State(s.v, s.u)
    assert sols.add(swapped, rep) == "twin"     # distinct orbit, same level
    assert len(sols) == 1 and len(sols.twin_orbits) == 1


def test_second_solution_above_ground(small_bounded_spec):
    cfg = SolveConfig(seed=5, starts=3)
    sols = find_distinct_solutions(small_bounded_spec, cfg, target_count=2)
    assert len(sols) >= 2
    energies = [r.energy for _, r in sols.entries]
    assert energies[1] > energies[0]
    assert all(r.grad_residual <= cfg.grad_tol for _, r in sols.entries)


def test_find_distinct_solutions_full(bounded_spec):
    cfg = SolveConfig(seed=6, starts=4)
    sols = find_distinct_solutions(bounded_spec, cfg, target_count=3)
    assert len(sols) >= 3
    energies = [r.energy for _, r in sols.entries]
    scale = abs(energies[0])
    assert all(e2 - e1 > 1e-6 * scale for e1, e2 in zip(energies, energies[1:]))
    n = len(sols)
    for i in range(n):
        for j in range(i + 1, n):
            si, sj = sols.entries[i][0], sols.entries[j][0]
            thresh = 1e-4 * max(norm_E(bounded_spec, si), norm_E(bounded_spec, sj))
            assert sols.pairwise_distances[i, j] > thresh
    # every entry satisfies the manifold invariants
    for s, r in sols.entries:
        assert r.xi_residual <= 1e-10 * r.norm ** 2
    manifest = sols.format_manifest()
    assert manifest.startswith("index,energy")


def test_collapse_budget_terminates(small_bounded_spec):
    cfg = SolveConfig(seed=7, starts=2, max_iters=300)
    sols = find_distinct_solutions(small_bounded_spec, cfg,
                                   target_count=50, collapse_budget=2)
    assert len(sols) < 50   # budget exhausted without hanging
