"""Structured grids, discrete operators and norms.

Two domain kinds are supported:

* ``dirichlet_box`` -- a box with homogeneous Dirichlet boundary values.
  Only interior nodes are stored; with ``n`` points per axis on a side of
  length ``L`` the spacing is ``h = L/(n+1)`` and the boundary layers act
  as ghost zeros.
* ``periodic_torus`` -- a torus with integer period per axis.  The spacing
  is ``1/m`` for an integer ``m >= 2`` of points per unit cell, so unit
  integer translations are exact grid shifts.

The discrete Laplacian is the standard second-order stencil and the
Dirichlet energy uses forward differences (including the boundary
interval on Dirichlet domains).  This pairing is summation-by-parts
exact:  ``<-lap(f), f>_h  ==  sum |D+ f|^2 h^N``  holds up to roundoff,
which the variational solver relies on.  All quadrature is the rectangle
rule with weight ``h^N``; the scalar reductions behind the norms and
inner products accumulate in a canonical (sorted) order, so they are
bitwise invariant under any permutation of the nodes, in particular
under periodic shifts.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

__all__ = [
    "DomainSpec",
    "GridFunction",
    "laplacian_apply",
    "schrodinger_apply",
    "h_norm_sq",
    "h_inner",
    "l2_inner",
    "l2_norm_sq",
    "lp_norm",
    "shift",
    "local_mass_sup",
    "save_grid_function",
    "load_grid_function",
    "grid_function_to_csv",
]

_KINDS = ("dirichlet_box", "periodic_torus")


@dataclass(frozen=True)
class DomainSpec:
    """Discretized domain: dimension, kind, points per axis and extents.

    ``lengths`` holds the side lengths for a Dirichlet box and the integer
    periods for a torus.  ``shape`` is the number of stored points per axis
    (interior points for Dirichlet).
    """

    dimension: int
    kind: str
    shape: tuple[int, ...]
    lengths: tuple[float, ...]

    def __post_init__(self):
        if self.dimension not in (1, 2, 3):
            raise ValueError(f"dimension must be 1, 2 or 3, got {self.dimension}")
        if self.kind not in _KINDS:
            raise ValueError(f"kind must be one of {_KINDS}, got {self.kind!r}")
        object.__setattr__(self, "shape", tuple(int(n) for n in self.shape))
        object.__setattr__(self, "lengths", tuple(float(l) for l in self.lengths))
        if len(self.shape) != self.dimension or len(self.lengths) != self.dimension:
            raise ValueError("shape and lengths must have one entry per axis")
        if any(n < 1 for n in self.shape):
            raise ValueError("resolution must be positive")
        if any(l <= 0 for l in self.lengths):
            raise ValueError("lengths must be positive")
        if self.kind == "periodic_torus":
            for n, p in zip(self.shape, self.lengths):
                if p != int(p):
                    raise ValueError("torus periods must be integers")
                m, r = divmod(n, int(p))
                if r != 0 or m < 2:
                    raise ValueError(
                        "periodic resolution must be an integer multiple m >= 2 "
                        f"of the period (got {n} points for period {int(p)})"
                    )

    @staticmethod
    def dirichlet_box(lengths, shape) -> "DomainSpec":
        lengths = tuple(np.atleast_1d(lengths).astype(float))
        shape = tuple(np.atleast_1d(shape).astype(int))
        return DomainSpec(len(shape), "dirichlet_box", shape, lengths)

    @staticmethod
    def periodic_torus(periods, points_per_cell) -> "DomainSpec":
        periods = tuple(int(p) for p in np.atleast_1d(periods))
        ppc = np.atleast_1d(points_per_cell).astype(int)
        if ppc.size == 1:
            ppc = np.repeat(ppc, len(periods))
        shape = tuple(int(p * m) for p, m in zip(periods, ppc))
        return DomainSpec(len(shape), "periodic_torus", shape, tuple(float(p) for p in periods))

    @property
    def periodic(self) -> bool:
        return self.kind == "periodic_torus"

    @property
    def spacing(self) -> tuple[float, ...]:
        if self.periodic:
            return tuple(p / n for p, n in zip(self.lengths, self.shape))
        return tuple(l / (n + 1) for l, n in zip(self.lengths, self.shape))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    @property
    def points_per_cell(self) -> tuple[int, ...]:
        if not self.periodic:
            raise ValueError("points_per_cell is defined for periodic domains only")
        return tuple(n // int(p) for n, p in zip(self.shape, self.lengths))

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    def axis_coordinates(self, axis: int) -> np.ndarray:
        """Node coordinates along one axis (interior nodes for Dirichlet)."""
        h = self.spacing[axis]
        if self.periodic:
            return np.arange(self.shape[axis]) * h
        return (np.arange(self.shape[axis]) + 1) * h

    def meshgrid(self) -> list[np.ndarray]:
        axes = [self.axis_coordinates(a) for a in range(self.dimension)]
        return list(np.meshgrid(*axes, indexing="ij"))


class GridFunction:
    """A scalar field sampled on a :class:`DomainSpec`.

    Values are stored row-major over interior (Dirichlet) or all (periodic)
    nodes and are immutable once constructed.  Two grid functions combine
    only when their domains are identical.
    """

    __slots__ = ("domain", "values")

    def __init__(self, domain: DomainSpec, values):
        arr = np.ascontiguousarray(values, dtype=float)
        if arr.shape != domain.shape:
            raise ValueError(f"values shape {arr.shape} does not match domain shape {domain.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("grid function values must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "domain", domain)
        object.__setattr__(self, "values", arr)

    def __setattr__(self, name, value):
        raise AttributeError("GridFunction is immutable")

    @staticmethod
    def constant(domain: DomainSpec, value: float) -> "GridFunction":
        return GridFunction(domain, np.full(domain.shape, float(value)))

    @staticmethod
    def from_callable(domain: DomainSpec, fn, tile_unit_cell: bool = True) -> "GridFunction":
        """Sample ``fn(x1, ..., xd)`` on the grid.

        On periodic domains the function is by default sampled on one unit
        cell and tiled, so the stored field repeats bit-exactly across cells
        (the right thing for potentials; pass ``tile_unit_cell=False`` for
        data that is not cell-periodic, like localized initial guesses).
        """
        if domain.periodic and tile_unit_cell:
            m = domain.points_per_cell
            cell_axes = [np.arange(mi) * domain.spacing[a] for a, mi in enumerate(m)]
            mesh = np.meshgrid(*cell_axes, indexing="ij")
            cell = np.asarray(fn(*mesh), dtype=float)
            cell = np.broadcast_to(cell, tuple(m))
            reps = tuple(int(p) for p in domain.lengths)
            return GridFunction(domain, np.tile(cell, reps))
        mesh = domain.meshgrid()
        vals = np.broadcast_to(np.asarray(fn(*mesh), dtype=float), domain.shape)
        return GridFunction(domain, vals.copy())

    def __repr__(self):
        return f"GridFunction({self.domain.kind}, shape={self.domain.shape})"


def _require_same_domain(*fs: GridFunction) -> DomainSpec:
    d = fs[0].domain
    for f in fs[1:]:
        if f.domain != d:
            raise ValueError("grid functions live on different domains")
    return d


def _csum(arr: np.ndarray) -> float:
    """Permutation-invariant reduction: sum in sorted order."""
    return float(np.sum(np.sort(arr, axis=None)))


def _neighbor_sum(a: np.ndarray, axis: int, periodic: bool) -> np.ndarray:
    """Sum of the two axis neighbors, with zero ghosts on Dirichlet domains."""
    if periodic:
        return np.roll(a, 1, axis=axis) + np.roll(a, -1, axis=axis)
    out = np.zeros_like(a)
    src_lo = [slice(None)] * a.ndim
    src_hi = [slice(None)] * a.ndim
    dst_lo = [slice(None)] * a.ndim
    dst_hi = [slice(None)] * a.ndim
    src_lo[axis] = slice(1, None)
    dst_lo[axis] = slice(None, -1)
    src_hi[axis] = slice(None, -1)
    dst_hi[axis] = slice(1, None)
    out[tuple(dst_lo)] += a[tuple(src_lo)]
    out[tuple(dst_hi)] += a[tuple(src_hi)]
    return out


def _laplacian_values(a: np.ndarray, domain: DomainSpec) -> np.ndarray:
    out = np.zeros_like(a)
    for axis in range(domain.dimension):
        h2 = domain.spacing[axis] ** 2
        out += (2.0 * a - _neighbor_sum(a, axis, domain.periodic)) / h2
    return out


def laplacian_apply(f: GridFunction) -> GridFunction:
    """Apply the negative discrete Laplacian ``-lap_h`` to ``f``.

    Three/five/seven-point stencil in 1/2/3 dimensions; ghost values are
    zero on Dirichlet domains and indices wrap on periodic ones.
    """
    return GridFunction(f.domain, _laplacian_values(f.values, f.domain))


def _potential_values(V, domain: DomainSpec) -> np.ndarray:
    if V is None:
        return np.zeros(domain.shape)
    if isinstance(V, GridFunction):
        if V.domain != domain:
            raise ValueError("potential lives on a different domain")
        return V.values
    return np.full(domain.shape, float(V))


def schrodinger_apply(f: GridFunction, V) -> GridFunction:
    """Apply ``-lap_h + V`` to ``f`` (``V`` a grid function, scalar or None)."""
    Va = _potential_values(V, f.domain)
    return GridFunction(f.domain, _laplacian_values(f.values, f.domain) + Va * f.values)


def _gradient_energy(a: np.ndarray, domain: DomainSpec, exact: bool = False) -> float:
    """``sum |D+ a|^2 h^N`` with the boundary intervals included on Dirichlet domains."""
    vol = domain.cell_volume
    reduce = _csum if exact else lambda x: float(np.sum(x))
    total = 0.0
    for axis in range(domain.dimension):
        h = domain.spacing[axis]
        if domain.periodic:
            d = np.roll(a, -1, axis=axis) - a
        else:
            d = np.diff(a, axis=axis, prepend=0.0, append=0.0)
        total += reduce(d * d) * vol / (h * h)
    return total


def _gradient_inner(a: np.ndarray, b: np.ndarray, domain: DomainSpec) -> float:
    vol = domain.cell_volume
    total = 0.0
    for axis in range(domain.dimension):
        h = domain.spacing[axis]
        if domain.periodic:
            da = np.roll(a, -1, axis=axis) - a
            db = np.roll(b, -1, axis=axis) - b
        else:
            da = np.diff(a, axis=axis, prepend=0.0, append=0.0)
            db = np.diff(b, axis=axis, prepend=0.0, append=0.0)
        total += _csum(da * db) * vol / (h * h)
    return total


def h_norm_sq(f: GridFunction, V) -> float:
    """Discrete ``||f||_V^2 = sum |D+ f|^2 h^N + sum V f^2 h^N``.

    ``V`` must be nonnegative; negative entries are rejected.
    """
    Va = _potential_values(V, f.domain)
    if np.any(Va < 0):
        raise ValueError("potential must be nonnegative")
    vol = f.domain.cell_volume
    return _gradient_energy(f.values, f.domain, exact=True) \
        + _csum(Va * f.values * f.values) * vol


def h_inner(f: GridFunction, g: GridFunction, V) -> float:
    """Inner product of the ``h_norm_sq`` quadratic form."""
    d = _require_same_domain(f, g)
    Va = _potential_values(V, d)
    vol = d.cell_volume
    return _gradient_inner(f.values, g.values, d) + _csum(Va * f.values * g.values) * vol


def l2_inner(f: GridFunction, g: GridFunction) -> float:
    d = _require_same_domain(f, g)
    return _csum(f.values * g.values) * d.cell_volume


def l2_norm_sq(f: GridFunction) -> float:
    return _csum(f.values * f.values) * f.domain.cell_volume


def lp_norm(f: GridFunction, p: float) -> float:
    """``(sum |f|^p h^N)^(1/p)`` for ``p >= 1``."""
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    return (_csum(np.abs(f.values) ** p) * f.domain.cell_volume) ** (1.0 / p)


def shift(f: GridFunction, z) -> GridFunction:
    """Translate a periodic field by the integer vector ``z`` (in unit cells).

    The shift is an exact circular permutation of node values, hence
    invertible and norm-preserving bit for bit.
    """
    d = f.domain
    if not d.periodic:
        raise ValueError("shift requires a periodic domain")
    z = np.atleast_1d(np.asarray(z, dtype=int))
    if z.size != d.dimension:
        raise ValueError("shift vector must have one entry per axis")
    nodes = tuple(int(zi) * m for zi, m in zip(z, d.points_per_cell))
    return GridFunction(d, np.roll(f.values, nodes, axis=tuple(range(d.dimension))))


def _ball_offsets(domain: DomainSpec, r: float) -> list[tuple[int, ...]]:
    h = domain.spacing
    ranges = [np.arange(-int(np.floor(r / h[a])), int(np.floor(r / h[a])) + 1)
              for a in range(domain.dimension)]
    mesh = np.meshgrid(*ranges, indexing="ij")
    dist2 = sum((m * hi) ** 2 for m, hi in zip(mesh, h))
    mask = dist2 <= r * r + 1e-12 * r * r
    return [tuple(int(m[idx]) for m in mesh) for idx in zip(*np.nonzero(mask))]


def local_mass_sup(u: GridFunction, v: GridFunction, r: float) -> tuple[float, tuple[int, ...]]:
    """Largest mass ``sum_{|x-y|<=r} (u^2+v^2) h^N`` over ball centers ``y``.

    Ball membership is by node centers in the periodic Euclidean distance.
    Returns the maximum and an attaining center (node multi-index, first in
    row-major order on ties).  Implemented as a sum of circular shifts so the
    result field is exactly equivariant under grid translations.
    """
    d = _require_same_domain(u, v)
    if not d.periodic:
        raise ValueError("local_mass_sup requires a periodic domain")
    if r <= 0:
        raise ValueError("radius must be positive")
    if r > min(d.lengths) / 2:
        raise ValueError("radius exceeds half the torus period")
    w = u.values * u.values + v.values * v.values
    mass = np.zeros_like(w)
    axes = tuple(range(d.dimension))
    for off in _ball_offsets(d, r):
        mass += np.roll(w, tuple(-o for o in off), axis=axes)
    # ties (e.g. a single spike with r >= h) resolve toward the densest node,
    # then first in row-major order; both rules are shift-equivariant
    peak = mass == mass.max()
    flat_candidates = np.flatnonzero(peak.ravel())
    best = flat_candidates[int(np.argmax(w.ravel()[flat_candidates]))]
    center = tuple(int(i) for i in np.unravel_index(int(best), d.shape))
    return float(mass[center] * d.cell_volume), center


# ---------------------------------------------------------------------------
# file format:  one ASCII header line, then little-endian float64, row-major
# ---------------------------------------------------------------------------

_MAGIC = "nehari-grid v1"


def _format_length(l: float, periodic: bool) -> str:
    if periodic:
        return str(int(l))
    return format(l, ".17g")


def save_grid_function(f: GridFunction, path) -> None:
    """Write ``f`` in the nehari-grid v1 format (header line + raw floats)."""
    d = f.domain
    kind = "periodic" if d.periodic else "dirichlet"
    header = (
        f"{_MAGIC}; dim={d.dimension}; kind={kind}; "
        f"shape={','.join(str(n) for n in d.shape)}; "
        f"lengths={','.join(_format_length(l, d.periodic) for l in d.lengths)}\n"
    )
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        fh.write(np.ascontiguousarray(f.values, dtype="<f8").tobytes())


def load_grid_function(path) -> GridFunction:
    with open(path, "rb") as fh:
        header = fh.readline().decode("ascii").strip()
        raw = fh.read()
    fields = [part.strip() for part in header.split(";")]
    if fields[0] != _MAGIC:
        raise ValueError(f"not a nehari-grid file: header starts with {fields[0]!r}")
    meta = dict(part.split("=", 1) for part in fields[1:])
    dim = int(meta["dim"])
    kind = "periodic_torus" if meta["kind"] == "periodic" else "dirichlet_box"
    shape = tuple(int(s) for s in meta["shape"].split(","))
    lengths = tuple(float(s) for s in meta["lengths"].split(","))
    domain = DomainSpec(dim, kind, shape, lengths)
    values = np.frombuffer(raw, dtype="<f8", count=domain.size).reshape(shape)
    return GridFunction(domain, values)


def grid_function_to_csv(f: GridFunction) -> str:
    """CSV export: one row per node with index coordinates, positions and value."""
    d = f.domain
    out = io.StringIO()
    idx_cols = [f"i{a + 1}" for a in range(d.dimension)]
    pos_cols = [f"x{a + 1}" for a in range(d.dimension)]
    out.write(",".join(idx_cols + pos_cols + ["value"]) + "\n")
    axes = [d.axis_coordinates(a) for a in range(d.dimension)]
    for idx in np.ndindex(d.shape):
        pos = [format(axes[a][idx[a]], ".17g") for a in range(d.dimension)]
        out.write(",".join([str(i) for i in idx] + pos + [format(f.values[idx], ".17g")]) + "\n")
    return out.getvalue()
