"""Command line front end: config parsing, orchestration, artifact output.

Config files are flat ``key = value`` text under ``[problem]``, ``[solve]``
and ``[output]`` headers; potential and initial-guess fields hold quoted
expressions in the closed-form language of :mod:`nehari.expressions`.
Emitting a parsed config reproduces it canonically, and identical configs
with identical seeds produce byte-identical artifacts.

Commands:

* ``validate``      -- hypothesis report (exit 2 on failure)
* ``ground``        -- ground-state solve; solution files plus reports
* ``multiplicity``  -- deflated search for distinct solutions; manifest
* ``fountain``      -- nested-subspace diagnostic table
* ``fibering``      -- samples of the ray map and its slope as CSV
* ``decay``         -- periodic solve, recentering and decay fit

Exit codes: 0 success, 2 validation failure, 3 solver stall.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .grid import DomainSpec, GridFunction, grid_function_to_csv, save_grid_function
from .model import Nonlinearity, ProblemSpec, ValidationError, validate_problem
from .energy import State, energy, fibering_project, fibering_slope, fibering_value
from .solver import SolveConfig, SolverStallError, decay_fit, find_ground_state, \
    initial_states, recenter
from .multiplicity import find_distinct_solutions, fountain_diagnostics
from .expressions import eval_expr, expr_to_text, parse_expr

__all__ = [
    "RunConfig",
    "ConfigError",
    "parse_config",
    "emit_config",
    "build_domain",
    "build_problem",
    "default_config",
    "default_bounded_spec",
    "default_periodic_spec",
    "run",
    "main",
]

COMMANDS = ("validate", "ground", "multiplicity", "fountain", "fibering", "decay")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    command: str = "validate"
    # [problem]
    kind: str = "dirichlet_box"
    lengths: tuple[float, ...] = (1.0,)
    resolution: tuple[int, ...] = (256,)
    q: float = 3.0
    delta: float = 0.3
    f1: tuple[tuple[float, float], ...] = ((1.0, 4.0),)
    f2: tuple[tuple[float, float], ...] = ((1.0, 4.0),)
    v1: str = "1.0"
    v2: str = "1.0"
    lam: str = "0.3"
    init_u: str | None = None
    init_v: str | None = None
    # [solve]
    max_iters: int = 500
    grad_tol: float = 1e-8
    armijo_c1: float = 1e-4
    armijo_backtrack: float = 0.5
    starts: int = 5
    seed: int = 0
    recenter_every: int = 0
    target_count: int = 3
    collapse_budget: int = 6
    k_max: int = 30
    # [output]
    out_dir: str = "out"
    label: str = "run"

    def solve_config(self) -> SolveConfig:
        return SolveConfig(
            max_iters=self.max_iters,
            grad_tol=self.grad_tol,
            armijo=(self.armijo_c1, self.armijo_backtrack),
            starts=self.starts,
            seed=self.seed,
            recenter_every=self.recenter_every,
        )


def default_config(kind: str = "dirichlet_box") -> RunConfig:
    """Smallest configurations exercising the bounded and periodic settings."""
    if kind == "dirichlet_box":
        return RunConfig()
    if kind == "periodic_torus":
        return RunConfig(kind="periodic_torus", lengths=(16.0, 16.0),
                         resolution=(256, 256), starts=3)
    raise ConfigError(f"unknown domain kind {kind!r}")


# ---------------------------------------------------------------------------
# config text format
# ---------------------------------------------------------------------------


def _parse_terms(text: str) -> tuple[tuple[float, float], ...]:
    terms = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        try:
            a, p = part.split(":")
            terms.append((float(a), float(p)))
        except ValueError:
            raise ConfigError(f"bad nonlinearity term {part!r}, expected 'a:p'") from None
    if not terms:
        raise ConfigError("nonlinearity needs at least one 'a:p' term")
    return tuple(terms)


def _emit_terms(terms) -> str:
    return ", ".join(f"{repr(a)}:{repr(p)}" for a, p in terms)


def _unquote(value: str) -> str:
    value = value.strip()
    if len(value) >= 2 and value[0] == '"' and value[-1] == '"':
        return value[1:-1]
    return value


def parse_config(text: str, command: str = "validate") -> RunConfig:
    """Parse the sectioned key=value format into a RunConfig."""
    sections: dict[str, dict[str, str]] = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip()
            if current not in ("problem", "solve", "output"):
                raise ConfigError(f"line {lineno}: unknown section [{current}]")
            sections.setdefault(current, {})
            continue
        if current is None or "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value' inside a section")
        key, value = line.split("=", 1)
        sections[current][key.strip()] = value.strip()

    cfg = default_config(sections.get("problem", {}).get("kind", "dirichlet_box"))
    cfg = replace(cfg, command=command)

    def take(section, key, conv, attr=None):
        nonlocal cfg
        if section in sections and key in sections[section]:
            value = sections[section].pop(key)
            cfg = replace(cfg, **{attr or key: conv(value)})

    as_floats = lambda v: tuple(float(x) for x in v.split(","))
    as_ints = lambda v: tuple(int(x) for x in v.split(","))
    expr = lambda v: expr_to_text(parse_expr(_unquote(v)))

    take("problem", "kind", str)
    take("problem", "lengths", as_floats)
    take("problem", "resolution", as_ints)
    take("problem", "q", float)
    take("problem", "delta", float)
    take("problem", "f1", _parse_terms)
    take("problem", "f2", _parse_terms)
    take("problem", "v1", expr)
    take("problem", "v2", expr)
    take("problem", "lambda", expr, attr="lam")
    take("problem", "init_u", expr)
    take("problem", "init_v", expr)
    take("solve", "max_iters", int)
    take("solve", "grad_tol", float)
    take("solve", "armijo_c1", float)
    take("solve", "armijo_backtrack", float)
    take("solve", "starts", int)
    take("solve", "seed", int)
    take("solve", "recenter_every", int)
    take("solve", "target_count", int)
    take("solve", "collapse_budget", int)
    take("solve", "k_max", int)
    take("output", "out_dir", str)
    take("output", "label", str)

    for section, entries in sections.items():
        if entries:
            raise ConfigError(f"unknown key {next(iter(entries))!r} in section [{section}]")
    if len(cfg.lengths) != len(cfg.resolution):
        raise ConfigError("lengths and resolution must have the same number of axes")
    return cfg


def emit_config(cfg: RunConfig) -> str:
    """Canonical text form; parsing it back is semantically identical."""
    lines = ["[problem]"]
    lines.append(f"kind = {cfg.kind}")
    lines.append("lengths = " + ",".join(repr(l) for l in cfg.lengths))
    lines.append("resolution = " + ",".join(str(n) for n in cfg.resolution))
    lines.append(f"q = {repr(cfg.q)}")
    lines.append(f"delta = {repr(cfg.delta)}")
    lines.append(f"f1 = {_emit_terms(cfg.f1)}")
    lines.append(f"f2 = {_emit_terms(cfg.f2)}")
    lines.append(f'v1 = "{cfg.v1}"')
    lines.append(f'v2 = "{cfg.v2}"')
    lines.append(f'lambda = "{cfg.lam}"')
    if cfg.init_u is not None:
        lines.append(f'init_u = "{cfg.init_u}"')
    if cfg.init_v is not None:
        lines.append(f'init_v = "{cfg.init_v}"')
    lines.append("")
    lines.append("[solve]")
    lines.append(f"max_iters = {cfg.max_iters}")
    lines.append(f"grad_tol = {repr(cfg.grad_tol)}")
    lines.append(f"armijo_c1 = {repr(cfg.armijo_c1)}")
    lines.append(f"armijo_backtrack = {repr(cfg.armijo_backtrack)}")
    lines.append(f"starts = {cfg.starts}")
    lines.append(f"seed = {cfg.seed}")
    lines.append(f"recenter_every = {cfg.recenter_every}")
    lines.append(f"target_count = {cfg.target_count}")
    lines.append(f"collapse_budget = {cfg.collapse_budget}")
    lines.append(f"k_max = {cfg.k_max}")
    lines.append("")
    lines.append("[output]")
    lines.append(f"out_dir = {cfg.out_dir}")
    lines.append(f"label = {cfg.label}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# building problem data from a config
# ---------------------------------------------------------------------------


def build_domain(cfg: RunConfig) -> DomainSpec:
    return DomainSpec(len(cfg.lengths), cfg.kind, cfg.resolution, cfg.lengths)


def _sample_expression(domain: DomainSpec, text: str, name: str,
                       require_periodic: bool, tile: bool) -> GridFunction:
    ast = parse_expr(text)

    def fn(*mesh):
        env = {f"x{a + 1}": mesh[a] for a in range(len(mesh))}
        return np.broadcast_to(np.asarray(eval_expr(ast, env), dtype=float),
                               mesh[0].shape).copy()

    if require_periodic and domain.periodic:
        rng = np.random.default_rng(12345)
        pts = [rng.uniform(0.0, p, size=64) for p in domain.lengths]
        env = {f"x{a + 1}": pts[a] for a in range(domain.dimension)}
        base = np.asarray(eval_expr(ast, env), dtype=float)
        scale = 1.0 + float(np.max(np.abs(base)))
        for a in range(domain.dimension):
            env_a = dict(env)
            env_a[f"x{a + 1}"] = pts[a] + 1.0
            shifted = np.asarray(eval_expr(ast, env_a), dtype=float)
            if np.max(np.abs(shifted - base)) > 1e-9 * scale:
                raise ValidationError(
                    f"expression for {name} is not 1-periodic in x{a + 1} "
                    "(required on periodic domains)"
                )
    return GridFunction.from_callable(domain, fn, tile_unit_cell=tile)


def build_problem(cfg: RunConfig) -> ProblemSpec:
    domain = build_domain(cfg)
    v1 = _sample_expression(domain, cfg.v1, "v1", True, True)
    v2 = _sample_expression(domain, cfg.v2, "v2", True, True)
    lam = _sample_expression(domain, cfg.lam, "lambda", True, True)
    return ProblemSpec(
        domain=domain, q=cfg.q,
        f1=Nonlinearity(cfg.f1), f2=Nonlinearity(cfg.f2),
        V1=v1, V2=v2, lam=lam, delta=cfg.delta,
    )


def default_bounded_spec() -> ProblemSpec:
    return build_problem(default_config("dirichlet_box"))


def default_periodic_spec() -> ProblemSpec:
    return build_problem(default_config("periodic_torus"))


def _initial_state(cfg: RunConfig, spec: ProblemSpec) -> State:
    if cfg.init_u is not None or cfg.init_v is not None:
        dom = spec.domain
        u = _sample_expression(dom, cfg.init_u or "0", "init_u", False, False)
        v = _sample_expression(dom, cfg.init_v or "0", "init_v", False, False)
        return State(u, v)
    return initial_states(spec, cfg.solve_config())[0]


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def _write(path: Path, text: str) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(text)


def _write_state(out: Path, label: str, s: State) -> list[str]:
    names = [f"{label}_u.grid", f"{label}_v.grid"]
    save_grid_function(s.u, out / names[0])
    save_grid_function(s.v, out / names[1])
    _write(out / f"{label}_u.csv", grid_function_to_csv(s.u))
    _write(out / f"{label}_v.csv", grid_function_to_csv(s.v))
    return names


def _cmd_validate(cfg, spec, out: Path) -> int:
    report = validate_problem(spec)
    _write(out / f"{cfg.label}_validate.txt", report.format_text())
    print(report.format_text(), end="")
    return 0 if report.passed else 2


def _cmd_ground(cfg, spec, out: Path) -> int:
    report, s = find_ground_state(spec, cfg.solve_config())
    label = f"{cfg.label}_s{report.start_index:02d}"   # winning start in the name
    _write_state(out, label, s)
    _write(out / f"{label}_report.txt", report.format_text())
    _write(out / f"{label}_energy.txt", energy(spec, s).format_text())
    print(f"ground state: energy = {report.energy:.12g}, "
          f"residual = {report.grad_residual:.3e}, iterations = {report.iterations}")
    return 0


def _cmd_multiplicity(cfg, spec, out: Path) -> int:
    sols = find_distinct_solutions(spec, cfg.solve_config(), cfg.target_count,
                                   cfg.collapse_budget)
    names = []
    for i, (s, rep) in enumerate(sols.entries):
        label = f"{cfg.label}_sol{i:02d}"
        _write_state(out, label, s)
        _write(out / f"{label}_report.txt", rep.format_text())
        names.append(label)
    _write(out / f"{cfg.label}_manifest.txt", sols.format_manifest(names))
    print(f"found {len(sols)} distinct solutions "
          f"(energies: {', '.join(f'{r.energy:.6g}' for _, r in sols.entries)})")
    return 0


def _cmd_fountain(cfg, spec, out: Path) -> int:
    report = fountain_diagnostics(spec, cfg.k_max, seed=cfg.seed)
    _write(out / f"{cfg.label}_fountain.csv", report.format_text())
    print(f"fountain diagnostics: beta_1 = {report.beta[0]:.6g}, "
          f"beta_{cfg.k_max} = {report.beta[-1]:.6g}")
    return 0


def _cmd_fibering(cfg, spec, out: Path) -> int:
    s = _initial_state(cfg, spec)
    rep, _ = fibering_project(spec, s)
    ts = rep.t_star * np.geomspace(0.01, 4.0, 200)
    lines = ["t,phi,dphi"]
    for t in ts:
        lines.append(f"{t:.17g},{fibering_value(spec, s, t):.17g},"
                     f"{fibering_slope(spec, s, t):.17g}")
    _write(out / f"{cfg.label}_fibering.csv", "\n".join(lines) + "\n")
    _write(out / f"{cfg.label}_fibering.txt",
           f"t_star         = {rep.t_star:.17g}\n"
           f"phi_at_t       = {rep.phi_at_t:.17g}\n"
           f"bracket        = [{rep.bracket[0]:.17g}, {rep.bracket[1]:.17g}]\n"
           f"iterations     = {rep.iterations}\n"
           f"slope_residual = {rep.slope_residual:.17g}\n")
    print(f"fibering: t* = {rep.t_star:.12g}, phi(t*) = {rep.phi_at_t:.12g}")
    return 0


def _cmd_decay(cfg, spec, out: Path) -> int:
    if not spec.domain.periodic:
        raise ValidationError("the decay command requires a periodic domain")
    report, s = find_ground_state(spec, cfg.solve_config())
    s, z = recenter(s)
    fit = decay_fit(s)
    _write_state(out, cfg.label, s)
    _write(out / f"{cfg.label}_report.txt", report.format_text())
    _write(out / f"{cfg.label}_decay.txt", fit.format_text())

    dom = spec.domain
    w = np.abs(s.u.values) + np.abs(s.v.values)
    center = np.unravel_index(int(np.argmax(w)), dom.shape)
    dist2 = np.zeros(dom.shape)
    for a in range(dom.dimension):
        n, h = dom.shape[a], dom.spacing[a]
        half = n // 2
        wrapped = (np.arange(n) - center[a] + half) % n - half
        shape = [1] * dom.dimension
        shape[a] = n
        dist2 = dist2 + (wrapped * h).reshape(shape) ** 2
    mask = (w >= fit.window[0]) & (w <= fit.window[1]) & (w > 0)
    d = np.sqrt(dist2)[mask]
    amp = w[mask]
    order = np.argsort(d, kind="stable")
    lines = ["distance,amplitude"]
    for i in order:
        lines.append(f"{d[i]:.17g},{amp[i]:.17g}")
    _write(out / f"{cfg.label}_decay.csv", "\n".join(lines) + "\n")
    print(f"decay fit: alpha = {fit.alpha:.6g}, r^2 = {fit.r_squared:.6g} "
          f"({fit.n_samples} samples)")
    return 0


_DISPATCH = {
    "validate": _cmd_validate,
    "ground": _cmd_ground,
    "multiplicity": _cmd_multiplicity,
    "fountain": _cmd_fountain,
    "fibering": _cmd_fibering,
    "decay": _cmd_decay,
}


def run(cfg: RunConfig) -> int:
    """Execute one command; returns the process exit code."""
    try:
        spec = build_problem(cfg)
        if cfg.command != "validate":
            validate_problem(spec).require()
        out = Path(cfg.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        return _DISPATCH[cfg.command](cfg, spec, out)
    except (ConfigError, ValidationError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SolverStallError as exc:
        print(f"solver stalled: {exc}", file=sys.stderr)
        return 3


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="nehari",
        description="Ground states and bound states of coupled Schrodinger "
                    "systems by Nehari-manifold minimization.",
    )
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", help="config file (defaults to the built-in "
                        "bounded problem; periodic for 'decay')")
    parser.add_argument("--out", help="output directory override")
    parser.add_argument("--seed", type=int, help="seed override")
    parser.add_argument("--label", help="run label override")
    args = parser.parse_args(argv)

    try:
        if args.config is not None:
            cfg = parse_config(Path(args.config).read_text(), args.command)
        else:
            kind = "periodic_torus" if args.command == "decay" else "dirichlet_box"
            cfg = replace(default_config(kind), command=args.command)
    except (OSError, ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    if args.out is not None:
        cfg = replace(cfg, out_dir=args.out)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    if args.label is not None:
        cfg = replace(cfg, label=args.label)
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
