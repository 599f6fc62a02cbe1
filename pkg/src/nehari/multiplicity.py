"""Multiple solutions: deflation, orbit distances, and Fountain diagnostics.

Distinct solutions are found by minimizing a deflated energy

    J(s) * prod_k (1 + sigma / dist(s, s_k)^2)

over the (unchanged) Nehari manifold, where ``dist`` quotients out the
pair sign flip and, on periodic domains, integer translations.  Every
candidate is re-polished on the plain energy and accepted only when its
orbit stays away from all known ones.

The Fountain quantities are computed on the eigenbasis of the decoupled
linear operator: ``beta_k`` estimates the largest p-norm on the unit
sphere of the tail span ``Z_k`` (a lower estimate from multistart ascent,
nonincreasing by construction), ``r_k`` and the lower bound for ``b_k``
follow closed formulas, and ``rho_k`` is found by scanning radii until
the sampled energy maximum on the ``Y_k`` sphere turns nonpositive.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse
import scipy.sparse.linalg
from scipy.linalg import eigh

from .grid import DomainSpec, shift, _laplacian_values
from .model import ProblemSpec
from .energy import (
    State,
    _ray_data,
    e_inner,
    energy,
    grad_l2,
    nehari_xi,
    norm_E,
)
from .solver import (
    SolveConfig,
    SolveReport,
    _descend,
    _EnergyObjective,
    find_ground_state,
    initial_states,
)

__all__ = [
    "SolutionSet",
    "FountainReport",
    "eigenbasis",
    "fountain_diagnostics",
    "orbit_distance",
    "deflated_search",
    "find_distinct_solutions",
]

_MAX_COMPONENT_UNKNOWNS = 10_000
_DISTINCT_FACTOR = 1e-4       # orbit-distance threshold relative to state norms
_LEVEL_GAP_FACTOR = 1e-6      # minimal relative gap between stored energy levels
_DEFLATION_SIGMA = 1.0


# ---------------------------------------------------------------------------
# eigenbasis of the block-diagonal linear operator
# ---------------------------------------------------------------------------


def _operator_matrix(domain: DomainSpec, V: np.ndarray) -> scipy.sparse.spmatrix:
    """Sparse ``-lap_h + V`` on the flattened grid."""
    mats = []
    for a in range(domain.dimension):
        n = domain.shape[a]
        h2 = domain.spacing[a] ** 2
        diag = np.full(n, 2.0 / h2)
        off = np.full(n - 1, -1.0 / h2)
        m = scipy.sparse.diags([off, diag, off], [-1, 0, 1], format="lil")
        if domain.periodic:
            m[0, n - 1] += -1.0 / h2
            m[n - 1, 0] += -1.0 / h2
        mats.append(m.tocsr())
    lap = mats[0]
    for m in mats[1:]:
        lap = scipy.sparse.kron(lap, scipy.sparse.eye(m.shape[0]), format="csr") \
            + scipy.sparse.kron(scipy.sparse.eye(lap.shape[0]), m, format="csr")
    return lap + scipy.sparse.diags(V.ravel())


def _block_eigenpairs(domain: DomainSpec, V: np.ndarray, k: int):
    A = _operator_matrix(domain, V)
    n = A.shape[0]
    if n <= 2500:
        vals, vecs = eigh(A.toarray())
        return vals[:k], vecs[:, :k]
    vals, vecs = scipy.sparse.linalg.eigsh(A, k=k, sigma=0.0, which="LM")
    order = np.argsort(vals)
    return vals[order], vecs[:, order]


def eigenbasis(spec: ProblemSpec, k: int) -> list[tuple[float, State]]:
    """First ``k`` eigenpairs of ``(-lap_h + V1) (+) (-lap_h + V2)``.

    Pairs are orthonormal in the block inner product and sorted by ascending
    eigenvalue; ties resolve u-block first.  Limited to grids with at most
    10^4 unknowns per component.
    """
    dom = spec.domain
    n = dom.size
    if n > _MAX_COMPONENT_UNKNOWNS:
        raise ValueError(f"grid too large for the eigensolver ({n} unknowns per component)")
    if k < 1 or k > 2 * n:
        raise ValueError(f"k={k} exceeds the dimension of the discrete space ({2 * n})")
    per_block = min(k, n)
    vol = dom.cell_volume
    zeros = np.zeros(dom.shape)

    pairs = []
    for block, V in enumerate((spec.V1.values, spec.V2.values)):
        vals, vecs = _block_eigenpairs(dom, V, per_block)
        for j in range(len(vals)):
            lam = float(vals[j])
            e = vecs[:, j].reshape(dom.shape)
            # E-normalization: ||(e,0)||^2 = lam * |e|_2h^2 for an eigenvector
            scale = 1.0 / np.sqrt(lam * vol * float(np.sum(e * e)))
            e = e * scale
            state = State.from_values(dom, e, zeros) if block == 0 \
                else State.from_values(dom, zeros, e)
            pairs.append((lam, block, j, state))
    pairs.sort(key=lambda t: (t[0], t[1], t[2]))
    return [(lam, state) for lam, _, _, state in pairs[:k]]


# ---------------------------------------------------------------------------
# Fountain diagnostics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FountainReport:
    k_max: int
    beta: list[float]
    r: list[float]
    b_lower: list[float]
    a_check: list[tuple[float, float]]   # (rho_k, max sampled energy at rho_k)

    def format_text(self) -> str:
        lines = ["k,beta,r,b_lower,rho,a_max"]
        for i in range(self.k_max):
            rho, amax = self.a_check[i]
            lines.append(
                f"{i + 1},{self.beta[i]:.17g},{self.r[i]:.17g},"
                f"{self.b_lower[i]:.17g},{rho:.17g},{amax:.17g}"
            )
        return "\n".join(lines) + "\n"


def _growth_constant(spec: ProblemSpec) -> float:
    """Constant with ``|F_i(s)| <= C (1 + |s|^p)``, sample-verified."""
    c = 0.0
    for nl in (spec.f1, spec.f2):
        c = max(c, sum(a / p for a, p in nl.terms), sum(a for a, p in nl.terms))
    s = np.geomspace(1e-8, 1e8, 200)
    p = spec.p_max
    for nl in (spec.f1, spec.f2):
        if not np.all(np.abs(nl.F(s)) <= c * (1.0 + s ** p)):
            raise RuntimeError("growth constant verification failed")
    return c


def _pnorm_and_grad(x, Bu, Bv, p, vol):
    """|u|_p + |v|_p and its gradient in basis coordinates."""
    total = 0.0
    grad = np.zeros_like(x)
    for B in (Bu, Bv):
        w = x @ B
        mp = float(np.sum(np.abs(w) ** p)) * vol
        if mp > 0.0:
            norm = mp ** (1.0 / p)
            total += norm
            grad += (norm / mp) * (B @ (np.abs(w) ** (p - 1.0) * np.sign(w))) * vol
    return total, grad


def _sphere_ascent(x0, Bu, Bv, p, vol, iters=200):
    x = x0 / np.linalg.norm(x0)
    val, g = _pnorm_and_grad(x, Bu, Bv, p, vol)
    step = 1.0
    for _ in range(iters):
        while step > 1e-12:
            y = x + step * g
            y /= np.linalg.norm(y)
            val_y, g_y = _pnorm_and_grad(y, Bu, Bv, p, vol)
            if val_y > val:
                break
            step *= 0.5
        else:
            break
        if val_y - val < 1e-12 * (1.0 + val):
            x, val, g = y, val_y, g_y
            break
        x, val, g = y, val_y, g_y
        step *= 1.5
    return x, val


def fountain_diagnostics(spec: ProblemSpec, k_max: int, buffer: int = 10,
                         restarts: int = 20, seed: int = 0,
                         n_ray_dirs: int = 20) -> FountainReport:
    """Compute the nested-subspace quantities on the eigenbasis.

    ``beta_k`` is the best of ``restarts`` projected ascents over the unit
    sphere of the tail span (a lower estimate); the maximizer of level
    ``k+1`` seeds level ``k``, which makes the reported sequence
    nonincreasing by construction.  ``rho_k`` doubles the radius until the
    sampled energy maximum over the head-span sphere is nonpositive.
    """
    basis = eigenbasis(spec, k_max + buffer)
    K = len(basis)
    if K < k_max:
        raise ValueError("not enough eigenpairs for the requested k_max")
    dom = spec.domain
    vol = dom.cell_volume
    p = spec.p_max
    delta = spec.effective_delta()
    c_growth = _growth_constant(spec)
    volume_omega = float(np.prod(dom.lengths))
    rng = np.random.default_rng(seed)

    all_u = np.stack([st.u.values.ravel() for _, st in basis])
    all_v = np.stack([st.v.values.ravel() for _, st in basis])

    # beta_k from the tail down, cascading each maximizer into the next level;
    # since the spans are nested, the previous estimate is itself a valid
    # lower bound, which makes the reported sequence exactly nonincreasing
    beta = [0.0] * (k_max + 1)
    carry = None
    prev = 0.0
    for k in range(k_max, 0, -1):
        Bu, Bv = all_u[k - 1:], all_v[k - 1:]
        dim = K - (k - 1)
        best_val, best_x = -np.inf, None
        seeds = [rng.standard_normal(dim) for _ in range(restarts)]
        if carry is not None:
            seeds.append(np.concatenate([[0.0], carry]))
        for x0 in seeds:
            x, val = _sphere_ascent(x0, Bu, Bv, p, vol)
            if val > best_val:
                best_val, best_x = val, x
        beta[k] = max(best_val, prev)
        prev = beta[k]
        carry = best_x
    beta = beta[1:]

    r = [(2.0 * c_growth * (p / (1.0 - delta)) * b ** p) ** (1.0 / (2.0 - p)) for b in beta]
    b_lower = [
        (1.0 - delta) * (0.5 - 1.0 / p)
        * (2.0 * c_growth * (p / (1.0 - delta)) * b ** p) ** (2.0 / (2.0 - p))
        - 2.0 * c_growth * volume_omega
        for b in beta
    ]

    # rho_k: scan radii over sampled directions of the head span Y_k
    a_check = []
    for k in range(1, k_max + 1):
        dirs = [np.eye(k)[j] for j in range(k)]
        dirs += [rng.standard_normal(k) for _ in range(n_ray_dirs)]
        rays = []
        for x in dirs:
            x = x / np.linalg.norm(x)
            u = (x @ all_u[:k]).reshape(dom.shape)
            v = (x @ all_v[:k]).reshape(dom.shape)
            rays.append(_ray_data(spec, u, v))
        rho = 1.0
        while True:
            amax = max(rd.phi(rho) for rd in rays)
            if amax <= 0.0:
                break
            rho *= 2.0
            if rho > 2.0 ** 40:
                raise RuntimeError("no radius with nonpositive sampled energy (growth violated)")
        a_check.append((rho, amax))

    rep = FountainReport(k_max, beta, r, b_lower, a_check)
    if any(b2 > b1 for b1, b2 in zip(beta, beta[1:])):
        raise RuntimeError("beta sequence failed to be nonincreasing")
    if not beta[-1] < beta[0]:
        raise RuntimeError("beta sequence did not decrease overall")
    return rep


# ---------------------------------------------------------------------------
# orbit distance and deflation
# ---------------------------------------------------------------------------


def _apply_block(spec: ProblemSpec, s: State) -> State:
    """Block operator ``(-lap+V1, -lap+V2)`` applied to a state."""
    dom = spec.domain
    return State.from_values(
        dom,
        _laplacian_values(s.u.values, dom) + spec.V1.values * s.u.values,
        _laplacian_values(s.v.values, dom) + spec.V2.values * s.v.values,
    )


def _orbit_realizer(spec: ProblemSpec, s1: State, s2: State):
    """Distance, realizing sign and cell shift of the orbit of ``s2``.

    All three quadratic terms of ``||s1 -+ tau_z s2||^2`` go through the same
    operator route and accumulate in one fixed order, so quotiented copies
    (pure sign flips) give exactly zero.
    """
    dom = spec.domain
    vol = dom.cell_volume

    def pair_inner(a: State, b: State) -> float:
        return (float(np.sum(a.u.values * b.u.values))
                + float(np.sum(a.v.values * b.v.values))) * vol

    q1 = _apply_block(spec, s1)
    q2 = _apply_block(spec, s2)
    n1 = pair_inner(q1, s1)
    n2 = pair_inner(q2, s2)
    if not dom.periodic:
        ip = pair_inner(q2, s1)
        sign = 1.0 if ip >= 0 else -1.0
        dist_sq = max(n1 + n2 - 2.0 * abs(ip), 0.0)
        return float(np.sqrt(dist_sq)), sign, None

    ppc = dom.points_per_cell
    periods = tuple(int(p) for p in dom.lengths)
    best_ip, best_z = 0.0, tuple([0] * dom.dimension)
    axes = tuple(range(dom.dimension))
    for z in np.ndindex(periods):
        nodes = tuple(zi * m for zi, m in zip(z, ppc))
        ip = (
            float(np.sum(np.roll(q2.u.values, nodes, axis=axes) * s1.u.values))
            + float(np.sum(np.roll(q2.v.values, nodes, axis=axes) * s1.v.values))
        ) * vol
        if abs(ip) > abs(best_ip):
            best_ip, best_z = ip, z
    sign = 1.0 if best_ip >= 0 else -1.0
    dist_sq = max(n1 + n2 - 2.0 * abs(best_ip), 0.0)
    return float(np.sqrt(dist_sq)), sign, best_z


def orbit_distance(spec: ProblemSpec, s1: State, s2: State) -> float:
    """Distance between translation-and-sign orbits in the block norm.

    On periodic domains minimizes ``||s1 - (+-) tau_z s2||`` over all integer
    cell shifts ``z`` and the joint sign flip; on bounded domains only the
    sign flip is quotiented.
    """
    if s1.domain != s2.domain:
        raise ValueError("states live on different domains")
    dist, _, _ = _orbit_realizer(spec, s1, s2)
    return dist


def _distinct_threshold(spec: ProblemSpec, s1: State, s2: State) -> float:
    return _DISTINCT_FACTOR * max(norm_E(spec, s1), norm_E(spec, s2))


@dataclass
class SolutionSet:
    """Distinct solutions sorted by energy with their pairwise orbit distances.

    Stored entries sit at strictly separated energy levels.  Distinct orbits
    that share a level with a stored entry (symmetry twins, e.g. the swapped
    pair on a symmetric problem) are kept separately so deflation can still
    suppress them.
    """

    spec: ProblemSpec
    entries: list[tuple[State, SolveReport]] = field(default_factory=list)
    pairwise_distances: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))
    twin_orbits: list[State] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.entries)

    def states(self) -> list[State]:
        return [s for s, _ in self.entries]

    def deflation_states(self) -> list[State]:
        return self.states() + self.twin_orbits

    def is_new_orbit(self, s: State) -> bool:
        return all(
            orbit_distance(self.spec, s, sk) > _distinct_threshold(self.spec, s, sk)
            for sk in self.deflation_states()
        )

    def has_new_level(self, e: float) -> bool:
        if not self.entries:
            return True
        scale = abs(self.entries[0][1].energy)
        return all(abs(e - r.energy) > _LEVEL_GAP_FACTOR * scale for _, r in self.entries)

    def add(self, s: State, report: SolveReport) -> str:
        """Insert a candidate; returns ``added``, ``twin`` or ``known``."""
        if not self.is_new_orbit(s):
            return "known"
        if not self.has_new_level(report.energy):
            self.twin_orbits.append(s)
            return "twin"
        self.entries.append((s, report))
        self.entries.sort(key=lambda e: e[1].energy)
        n = len(self.entries)
        d = np.zeros((n, n))
        for i in range(n):
            for j in range(i + 1, n):
                d[i, j] = d[j, i] = orbit_distance(
                    self.spec, self.entries[i][0], self.entries[j][0]
                )
        self.pairwise_distances = d
        return "added"

    def format_manifest(self, file_names: list[str] | None = None) -> str:
        lines = ["index,energy,grad_residual,xi_residual,norm,files"]
        for i, (_, rep) in enumerate(self.entries):
            name = file_names[i] if file_names else f"solution_{i:02d}"
            lines.append(
                f"{i},{rep.energy:.17g},{rep.grad_residual:.17g},"
                f"{rep.xi_residual:.17g},{rep.norm:.17g},{name}"
            )
        lines.append("pairwise orbit distances:")
        for i in range(len(self.entries)):
            row = " ".join(f"{self.pairwise_distances[i, j]:.10g}"
                           for j in range(len(self.entries)))
            lines.append(f"  {i}: {row}")
        return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# exact discrete symmetries: restricting search directions to a bit-exactly
# invariant subspace turns the corresponding constrained minimizers (which
# are saddles of the full problem) into reachable targets; by the symmetric
# criticality principle their full gradient still vanishes, which is what
# the reported residual certifies.
# ---------------------------------------------------------------------------


def _swap_symmetric(spec: ProblemSpec) -> bool:
    return (np.array_equal(spec.V1.values, spec.V2.values)
            and spec.f1.terms == spec.f2.terms)


def _mirror_axes(spec: ProblemSpec) -> list[int]:
    if spec.domain.periodic:
        return []
    axes = []
    for a in range(spec.domain.dimension):
        if all(np.array_equal(f.values, np.flip(f.values, axis=a))
               for f in (spec.V1, spec.V2, spec.lam)):
            axes.append(a)
    return axes


def _swap_sym_filter(s: State) -> State:
    m = 0.5 * (s.u.values + s.v.values)
    return State.from_values(s.domain, m, m.copy())


def _swap_anti_filter(s: State) -> State:
    m = 0.5 * (s.u.values - s.v.values)
    return State.from_values(s.domain, m, -m)


def _odd_reflection_filter(axis: int):
    def filt(s: State) -> State:
        u = 0.5 * (s.u.values - np.flip(s.u.values, axis=axis))
        v = 0.5 * (s.v.values - np.flip(s.v.values, axis=axis))
        return State.from_values(s.domain, u, v)

    return filt


def _symmetry_filters(spec: ProblemSpec) -> list:
    filters = []
    if _swap_symmetric(spec):
        filters.append(_swap_sym_filter)
        filters.append(_swap_anti_filter)
    for a in _mirror_axes(spec):
        filters.append(_odd_reflection_filter(a))
    return filters


class _DeflatedObjective:
    """Energy times shifted deflation factors centered at known orbits."""

    def __init__(self, spec: ProblemSpec, known: list[State], sigma: float = _DEFLATION_SIGMA):
        self.spec = spec
        self.known = known
        self.sigma = sigma

    def _factors(self, s: State):
        dists, realizers = [], []
        for sk in self.known:
            dist, sign, z = _orbit_realizer(self.spec, s, sk)
            dists.append(max(dist, 1e-150))
            realizers.append((sign, z, sk))
        factors = [1.0 + self.sigma / d ** 2 for d in dists]
        return dists, realizers, factors

    def value(self, s: State) -> float:
        _, _, factors = self._factors(s)
        return energy(self.spec, s).total * float(np.prod(factors))

    def grad(self, s: State) -> State:
        dom = self.spec.domain
        dists, realizers, factors = self._factors(s)
        pi = float(np.prod(factors))
        J = energy(self.spec, s).total
        g = grad_l2(self.spec, s)
        gu = pi * g.u.values
        gv = pi * g.v.values
        for dk, (sign, z, sk), fk in zip(dists, realizers, factors):
            w = self._realized(sign, z, sk)
            coef = J * (pi / fk) * (-self.sigma / dk ** 4)
            diff = State.from_values(dom, s.u.values - w.u.values, s.v.values - w.v.values)
            a_diff = _apply_block(self.spec, diff)
            gu += coef * 2.0 * a_diff.u.values
            gv += coef * 2.0 * a_diff.v.values
        return State.from_values(dom, gu, gv)

    def radial_derivative(self, s: State) -> float:
        dists, realizers, factors = self._factors(s)
        pi = float(np.prod(factors))
        J = energy(self.spec, s).total
        total = pi * nehari_xi(self.spec, s)
        nsq = norm_E(self.spec, s) ** 2
        for dk, (sign, z, sk), fk in zip(dists, realizers, factors):
            w = self._realized(sign, z, sk)
            ip = e_inner(self.spec, s, w)
            total += J * (pi / fk) * (-self.sigma / dk ** 4) * 2.0 * (nsq - ip)
        return total

    def _realized(self, sign, z, sk: State) -> State:
        if z is None:
            return sk.scaled(sign)
        return State(shift(sk.u, z), shift(sk.v, z)).scaled(sign)


def deflated_search(spec: ProblemSpec, config: SolveConfig,
                    known: SolutionSet) -> tuple[SolveReport, State]:
    """Search for one solution away from the known orbits.

    With no known solutions this is exactly the ground-state search.
    Otherwise each start minimizes the deflated energy on the manifold,
    polishes the result on the plain energy, and keeps it only when its
    orbit stays clear of every known one; a candidate that slides back is
    reported with status ``collapsed`` rather than as an error.

    Every non-ground solution is a saddle of the constrained energy, so
    unrestricted polishing escapes it.  When the problem carries an exact
    discrete symmetry (swap of the components, mirror reflection) the
    search therefore adds subspace-restricted starts, whose limits are
    honest full-residual critical points.
    """
    if len(known) == 0:
        return find_ground_state(spec, config)

    objective = _DeflatedObjective(spec, known.deflation_states())
    deflate_cfg = SolveConfig(
        max_iters=config.max_iters,
        grad_tol=max(config.grad_tol, 1e-6),
        armijo=config.armijo,
        starts=config.starts,
        seed=config.seed,
        recenter_every=0,
    )
    inits = initial_states(spec, config)
    runs = [(filt(inits[0]), filt) for filt in _symmetry_filters(spec)]
    runs += [(init, None) for init in inits]

    candidates = []
    fallback = None
    for i, (init, filt) in enumerate(runs):
        if init.is_zero():
            continue
        _, rough = _descend(spec, deflate_cfg, init, objective, i, direction_filter=filt)
        rep, polished = _descend(spec, config, rough, _EnergyObjective(spec), i,
                                 direction_filter=filt)
        if rep.status != "converged":
            continue
        if known.is_new_orbit(polished):
            candidates.append((rep, polished))
        elif fallback is None:
            fallback = (rep, polished)
    if candidates:
        return min(candidates, key=lambda rs: (rs[0].energy, rs[0].start_index))
    if fallback is not None:
        rep, s = fallback
        return replace(rep, status="collapsed"), s
    raise RuntimeError("deflated search: no start converged under polishing")


def find_distinct_solutions(spec: ProblemSpec, config: SolveConfig,
                            target_count: int,
                            collapse_budget: int = 6) -> SolutionSet:
    """Collect distinct solutions by repeated deflation.

    Starts from the ground state and keeps deflating until ``target_count``
    solutions are stored or ``collapse_budget`` fruitless attempts occur.
    Finding a same-level twin orbit counts as progress (it joins the
    deflation set), not as a collapse.  Each attempt draws fresh starts
    from a derived seed, deterministically.
    """
    solutions = SolutionSet(spec)
    rep, state = find_ground_state(spec, config)
    solutions.add(state, rep)
    collapses = 0
    attempt = 0
    max_attempts = collapse_budget + 2 * target_count + 4
    while len(solutions) < target_count and collapses < collapse_budget \
            and attempt < max_attempts:
        attempt += 1
        cfg = SolveConfig(
            max_iters=config.max_iters,
            grad_tol=config.grad_tol,
            armijo=config.armijo,
            starts=config.starts,
            seed=config.seed + 1000003 * attempt,
            recenter_every=config.recenter_every,
        )
        try:
            rep, state = deflated_search(spec, cfg, solutions)
        except RuntimeError:
            collapses += 1
            continue
        if rep.status != "converged" or solutions.add(state, rep) == "known":
            collapses += 1
    return solutions
