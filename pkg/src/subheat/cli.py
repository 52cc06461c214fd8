"""Command-line driver: sectioned key=value configs, experiment orchestration, CSV output.

Commands
--------
kernels   write heat_t*.csv / frac_t*.csv kernel tables
verify    run the estimate registry, write certificates.csv
spaces    norm table (Campanato, Lipschitz, g, area) for the standard suite
equiv     the five-functional equivalence table
selftest  the full invariant battery, one pass/fail line per check

Exit codes: 0 all pass, 1 numerical failure, 2 config error. Given the same
config and seed the CSV outputs are byte-identical.
"""

import argparse
import configparser
import io
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import potentials
from .estimates import (DEFAULT_PARAMS, ESTIMATE_IDS, EstimateParams, build_backend,
                        certify)
from .grid import build_grid, grid_function
from .potentials import PotentialSpec
from .spaces import (BmoParams, area_function, bmo_norm, equivalence_experiment,
                     g_constant, g_function, lipschitz_norm,
                     make_equivalence_suite, reproducing_check)
from .spectral import (assemble, compose, eigendecompose,
                       fractional_heat_kernel, heat_kernel)
from .subordinator import (density_selftest, laplace_transform, subordinate_kernel)

COMMANDS = ("kernels", "verify", "spaces", "equiv", "selftest")

_GRID_KEYS = {"n", "l", "m", "bc"}
_POTENTIAL_KEYS = {"kind", "c", "sigma", "height", "width", "center", "q", "scale"}
_FRACTIONAL_KEYS = {"alpha", "beta", "gamma", "n_list", "delta"}
_RUN_KEYS = {"command", "out", "seed", "times"}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    n: int = 1
    half_width: float = 16.0
    points_per_axis: int = 256
    bc: str = "dirichlet"
    potential: PotentialSpec = field(default_factory=lambda: potentials.constant(1.0))
    potential_label: str = "constant c=1"
    q: float | None = None
    alpha: float = 0.5
    beta: float = 1.0
    gamma: float = 0.25
    n_list: tuple = (0.0, 1.0)
    delta_prime: float | None = None
    command: str = "selftest"
    out: str = "out"
    seed: int = 0
    times: tuple = (0.25, 1.0, 4.0)

    def describe(self) -> str:
        return (f"n={self.n} L={self.half_width} M={self.points_per_axis} bc={self.bc} "
                f"V={self.potential_label} alpha={self.alpha} beta={self.beta} "
                f"gamma={self.gamma} N={list(self.n_list)} command={self.command} "
                f"seed={self.seed}")


def _build_potential(section) -> tuple[PotentialSpec, str]:
    kind = section.get("kind", "constant")
    scale = float(section.get("scale", 1.0))
    if kind == "zero":
        return potentials.zero(), "zero"
    if kind == "constant":
        c = float(section.get("c", 1.0))
        spec = potentials.constant(c)
        label = f"constant c={c:g}"
    elif kind == "power":
        sigma = float(section.get("sigma", 2.0))
        spec = potentials.power(sigma)
        label = f"power sigma={sigma:g}"
    elif kind == "well":
        height = float(section.get("height", 1.0))
        width = float(section.get("width", 1.0))
        center = float(section.get("center", 0.0))
        spec = potentials.well(height, width, center)
        label = f"well v={height:g} w={width:g}"
    else:
        raise ConfigError(f"potential kind {kind!r} not in catalog")
    if scale != 1.0:
        spec = potentials.scaled(spec, scale)
        label += f" x{scale:g}"
    return spec, label


def parse_config(text: str) -> RunConfig:
    parser = configparser.ConfigParser()
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    if "grid" not in parser:
        raise ConfigError("missing [grid] section")
    for section, allowed in (("grid", _GRID_KEYS), ("potential", _POTENTIAL_KEYS),
                             ("fractional", _FRACTIONAL_KEYS), ("run", _RUN_KEYS)):
        if section in parser:
            unknown = set(parser[section]) - allowed
            if unknown:
                raise ConfigError(f"unknown keys in [{section}]: {sorted(unknown)}")
    extra = set(parser.sections()) - {"grid", "potential", "fractional", "run"}
    if extra:
        raise ConfigError(f"unknown sections: {sorted(extra)}")

    g = parser["grid"]
    n = g.getint("n", 1)
    L = g.getfloat("l", 16.0)
    M = g.getint("m", 256)
    bc = g.get("bc", "dirichlet")

    pot_section = parser["potential"] if "potential" in parser else {}
    try:
        pot, label = _build_potential(pot_section)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    q = float(pot_section.get("q")) if "q" in pot_section else None

    f = parser["fractional"] if "fractional" in parser else {}
    alpha = float(f.get("alpha", 0.5))
    beta = float(f.get("beta", 1.0))
    gamma = float(f.get("gamma", 0.25))
    delta = float(f.get("delta")) if "delta" in f else None
    n_list = tuple(float(v) for v in f.get("n_list", "0,1").split(","))

    r = parser["run"] if "run" in parser else {}
    command = r.get("command", "selftest")
    out = r.get("out", "out")
    seed = int(r.get("seed", 0))
    times = tuple(float(v) for v in r.get("times", "0.25,1,4").split(","))

    if command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}")
    if not 0.0 < alpha < 1.0:
        raise ConfigError(f"alpha must lie in (0,1), got {alpha}")
    if beta <= 0.0:
        raise ConfigError(f"beta must be positive, got {beta}")
    if not 0.0 < gamma <= 1.0:
        raise ConfigError(f"gamma must lie in (0,1], got {gamma}")
    if command == "equiv" and not gamma < min(2.0 * alpha, 2.0 * alpha * beta):
        raise ConfigError(
            f"equiv needs gamma < min(2 alpha, 2 alpha beta) = "
            f"{min(2 * alpha, 2 * alpha * beta):g}, got gamma={gamma}")
    try:
        build_grid(n, L, M, bc)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return RunConfig(n, L, M, bc, pot, label, q, alpha, beta, gamma, n_list, delta,
                     command, out, seed, times)


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def _write_csv(path: Path, config: RunConfig, header: list[str], rows) -> None:
    buf = io.StringIO()
    buf.write(f"# config: {config.describe()}\n")
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(_fmt(v) for v in row) + "\n")
    path.write_text(buf.getvalue(), encoding="utf-8")


def _kernel_rows(table: np.ndarray):
    N = table.shape[0]
    for i in range(N):
        for j in range(N):
            yield (i, j, table[i, j])


def _cmd_kernels(cfg: RunConfig, out: Path) -> dict:
    grid = build_grid(cfg.n, cfg.half_width, cfg.points_per_axis, cfg.bc)
    dec = eigendecompose(assemble(grid, cfg.potential))
    paths = []
    for t in cfg.times:
        heat = heat_kernel(dec, t)
        frac = fractional_heat_kernel(dec, cfg.alpha, t)
        for tag, K in (("heat", heat), ("frac", frac)):
            path = out / f"{tag}_t{t:g}.csv"
            _write_csv(path, cfg, ["x_index", "y_index", "value"],
                       _kernel_rows(K.table))
            paths.append(str(path))
    return {"pass": True, "outputs": paths}


def _cmd_verify(cfg: RunConfig, out: Path) -> dict:
    coarse = build_backend(cfg.n, cfg.half_width, cfg.points_per_axis // 2, cfg.bc,
                           cfg.potential)
    fine = build_backend(cfg.n, cfg.half_width, cfg.points_per_axis, cfg.bc,
                         cfg.potential)
    rows, all_pass = [], True
    for eid in ESTIMATE_IDS:
        for N in cfg.n_list:
            base = DEFAULT_PARAMS[eid]
            params = EstimateParams(alpha=cfg.alpha if eid != "E8" else base.alpha,
                                    beta=cfg.beta, m=base.m, N=N,
                                    q=cfg.q, delta_prime=cfg.delta_prime,
                                    member=base.member)
            try:
                cert = certify(eid, params, [coarse, fine])
            except ValueError as exc:
                rows.append((eid, params.alpha, params.beta, N, "", "", "", "", "",
                             "", f"skipped: {exc}"))
                continue
            resolved = cert.params
            rows.append((eid, resolved.alpha, resolved.beta, N, resolved.delta_prime,
                         cert.c_meas, cert.argmax[0], cert.argmax[1], cert.argmax[2],
                         cert.refine_ratio, cert.passed))
            all_pass &= cert.passed
    path = out / "certificates.csv"
    _write_csv(path, cfg, ["id", "alpha", "beta", "N", "delta", "C_meas", "argmax_x",
                           "argmax_y", "argmax_t", "refine_ratio", "pass"], rows)
    return {"pass": all_pass, "outputs": [str(path)]}


def _space_context(cfg: RunConfig):
    grid = build_grid(cfg.n, cfg.half_width, cfg.points_per_axis, cfg.bc)
    dec = eigendecompose(assemble(grid, cfg.potential))
    aux = potentials.compute_aux_function(cfg.potential, grid)
    return grid, dec, aux.rho


def _cmd_spaces(cfg: RunConfig, out: Path) -> dict:
    grid, dec, rho = _space_context(cfg)
    suite = make_equivalence_suite(dec, rho, cfg.gamma, seed=cfg.seed)
    params = BmoParams(cfg.gamma)
    rows = []
    for i, f in enumerate(suite):
        nb = bmo_norm(f, params, rho)
        nl = lipschitz_norm(f, cfg.gamma, rho)
        ng = g_function(dec, cfg.alpha, cfg.beta, f).l2_norm()
        ns = area_function(dec, cfg.alpha, cfg.beta, f).l2_norm()
        rows.append((i, nb, nl, ng, ns, f.l2_norm()))
    path = out / "space_norms.csv"
    _write_csv(path, cfg, ["member", "bmo", "lipschitz", "g_l2", "area_l2", "l2"],
               rows)
    return {"pass": True, "outputs": [str(path)]}


def _cmd_equiv(cfg: RunConfig, out: Path) -> dict:
    grid, dec, rho = _space_context(cfg)
    suite = make_equivalence_suite(dec, rho, cfg.gamma, seed=cfg.seed)
    report = equivalence_experiment(suite, dec, cfg.alpha, cfg.beta, cfg.gamma, rho)
    rows = [(i, row["N1"], row["N2"], row["N3"], row["N4"], row["N5"])
            for i, row in enumerate(report["rows"])]
    path = out / "equivalence.csv"
    _write_csv(path, cfg, ["member", "N1_bmo", "N2_sup", "N3_carleson", "N4_gradient",
                           "N5_nu_carleson"], rows)
    summary = out / "equivalence_summary.csv"
    _write_csv(summary, cfg, ["ratio_min", "ratio_max", "c_star"],
               [(report["ratio_min"], report["ratio_max"], report["c_star"])])
    ok = report["c_star"] <= 100.0
    return {"pass": ok, "outputs": [str(path), str(summary)],
            "c_star": report["c_star"]}


def _cmd_selftest(cfg: RunConfig, out: Path) -> dict:
    checks = []

    def check(name, value):
        checks.append((name, bool(value)))

    grid = build_grid(cfg.n, cfg.half_width, cfg.points_per_axis, cfg.bc)
    dec = eigendecompose(assemble(grid, cfg.potential))

    heat = heat_kernel(dec, 1.0)
    check("heat kernel positivity", heat.table.min() >= -1e-10)
    check("heat kernel symmetry",
          np.max(np.abs(heat.table - heat.table.T)) <= 1e-8)
    comp = compose(heat_kernel(dec, 0.5), heat_kernel(dec, 0.5))
    check("chapman-kolmogorov",
          np.max(np.abs(comp.table - heat.table)) <= 1e-6)
    if cfg.bc == "dirichlet":
        check("mass bound", heat.row_masses().max() <= 1.0 + 1e-8)

    rep = density_selftest(cfg.alpha)
    check("subordinator normalization", rep["normalization_defect"] <= 1e-8)
    check("subordinator laplace",
          abs(laplace_transform(cfg.alpha, 1.0) - np.exp(-1.0)) <= 1e-6)

    sub = subordinate_kernel(dec, cfg.alpha, 1.0)
    spec = fractional_heat_kernel(dec, cfg.alpha, 1.0)
    check("two-route fractional kernel",
          np.max(np.abs(sub.table - spec.table)) <= 1e-5 * spec.max_abs())

    rng = np.random.default_rng(cfg.seed)
    vals = rng.standard_normal(grid.size)
    if dec.has_zero_mode:
        vals -= vals.mean()
    f = grid_function(grid, vals)
    check("reproducing formula",
          reproducing_check(dec, cfg.alpha, cfg.beta, f) <= 1e-4)
    gv = g_function(dec, cfg.alpha, cfg.beta, f)
    target = g_constant(cfg.beta)
    if not dec.has_zero_mode:
        check("g-function isometry",
              abs(gv.l2_norm() / f.l2_norm() - target) <= 1e-6)

    all_pass = all(ok for _, ok in checks)
    lines = [f"{name}: {'PASS' if ok else 'FAIL'}" for name, ok in checks]
    path = out / "selftest.txt"
    path.write_text(f"# config: {cfg.describe()}\n" + "\n".join(lines) + "\n",
                    encoding="utf-8")
    for line in lines:
        print(line)
    return {"pass": all_pass, "outputs": [str(path)]}


_RUNNERS = {"kernels": _cmd_kernels, "verify": _cmd_verify, "spaces": _cmd_spaces,
            "equiv": _cmd_equiv, "selftest": _cmd_selftest}


def run(cfg: RunConfig) -> dict:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    report = _RUNNERS[cfg.command](cfg, out)
    report["command"] = cfg.command
    return report


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="subheat",
        description="fractional heat semigroup toolkit: kernels, certificates, norms")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, help="path to the key=value config")
    parser.add_argument("--out", default=None, help="output directory override")
    parser.add_argument("--seed", type=int, default=None, help="seed override")
    args = parser.parse_args(argv)
    try:
        text = Path(args.config).read_text(encoding="utf-8")
        cfg = parse_config(text)
        updates = {"command": args.command}
        if args.out is not None:
            updates["out"] = args.out
        if args.seed is not None:
            updates["seed"] = args.seed
        from dataclasses import replace
        cfg = replace(cfg, **updates)
        if cfg.command == "equiv" and not cfg.gamma < min(2 * cfg.alpha,
                                                          2 * cfg.alpha * cfg.beta):
            raise ConfigError("equiv needs gamma < min(2 alpha, 2 alpha beta)")
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        report = run(cfg)
    except Exception as exc:  # structured diagnostic, nonzero exit
        print(f"numerical failure in {args.command}: {exc}", file=sys.stderr)
        return 1
    print(f"{args.command}: {'PASS' if report['pass'] else 'FAIL'}; "
          f"outputs: {', '.join(report['outputs'])}")
    return 0 if report["pass"] else 1


if __name__ == "__main__":
    sys.exit(main())
