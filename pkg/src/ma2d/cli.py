"""Experiment driver: JSON configs, subcommands, machine-readable reports.

Every experiment writes ``report.json`` plus CSV and gnuplot-ready ``.dat``
tables to the output directory.  Reports are byte-identical across runs with
the same config and seed; the "work" block carries deterministic counters
(iterations, evaluations), never wall-clock times.  Exit codes: 0 all
verdicts pass, 1 verdict failure, 2 config error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from dataclasses import asdict, dataclass, field

import numpy as np

from . import analysis, ma_measure, oracle, sections, solver
from .errors import ConfigInvalid, ToolkitError
from .grid import Domain2D, RhsField, save

EXPERIMENTS = (
    "oracle",
    "solve",
    "sections",
    "growth",
    "cascade",
    "doubling",
    "verify-dual",
    "verify-translator",
)

SOURCES = ("oracle-dual", "oracle-primal", "separable", "quadratic", "solve")


@dataclass
class ExperimentConfig:
    experiment: str
    alpha: float = 0.125
    eta: float = 1.0
    rhs: str = "constant"
    source: str = "oracle-dual"
    domain: str = "disk"
    radius: float = 8.0
    h: float = 0.125
    rmin: float = 16.0
    rmax: float = 256.0
    n_circles: int = 5
    levels: list = field(default_factory=lambda: [float(2**k) for k in range(8)])
    n_samples: int = 1000
    seed: int | None = None
    tol: float = 1e-8
    slope_tolerance: float = 0.02
    error_tolerance: float = 0.02
    identity_tolerance: float = 0.05
    outdir: str = "out"

    def validate(self) -> list:
        bad = []
        if self.experiment not in EXPERIMENTS:
            bad.append(f"/experiment: must be one of {', '.join(EXPERIMENTS)}")
        if not (np.isfinite(self.alpha) and 0.0 < self.alpha < 0.25):
            bad.append("/alpha: alpha must be < 0.25 and > 0")
        if not 0.0 <= self.eta <= 1.0:
            bad.append("/eta: must lie in [0, 1]")
        if self.rhs not in ("constant", "dual_translator", "degenerate"):
            bad.append("/rhs: must be constant, dual_translator, or degenerate")
        if self.source not in SOURCES:
            bad.append(f"/source: must be one of {', '.join(SOURCES)}")
        if self.domain not in ("disk", "square"):
            bad.append("/domain: must be disk or square")
        if not self.radius > 0:
            bad.append("/radius: must be positive")
        if not self.h > 0:
            bad.append("/h: must be positive")
        if not 0 < self.rmin < self.rmax:
            bad.append("/rmin: need 0 < rmin < rmax")
        if self.n_circles < 4:
            bad.append("/n_circles: need at least 4")
        if len(self.levels) < 2 or any(t <= 0 for t in self.levels) or any(
            b <= a for a, b in zip(self.levels, self.levels[1:])
        ):
            bad.append("/levels: must be positive and increasing, length >= 2")
        if self.n_samples < 100:
            bad.append("/n_samples: need at least 100")
        if self.experiment == "doubling" and self.seed is None:
            bad.append("/seed: required for the doubling experiment")
        if not self.tol > 0:
            bad.append("/tol: must be positive")
        for name in ("slope_tolerance", "error_tolerance", "identity_tolerance"):
            if not getattr(self, name) > 0:
                bad.append(f"/{name}: must be positive")
        return bad


def load_config(path, overrides=None) -> ExperimentConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigInvalid([f"/: invalid JSON ({exc})"])
    if not isinstance(raw, dict):
        raise ConfigInvalid(["/: config must be a JSON object"])
    known = set(ExperimentConfig.__dataclass_fields__)
    unknown = [k for k in raw if k not in known]
    if unknown:
        raise ConfigInvalid([f"/{k}: unknown field" for k in sorted(unknown)])
    if "experiment" not in raw:
        raise ConfigInvalid(["/experiment: required"])
    merged = dict(raw)
    if overrides:
        merged.update({k: v for k, v in overrides.items() if v is not None})
    try:
        cfg = ExperimentConfig(**merged)
    except TypeError as exc:
        raise ConfigInvalid([f"/: {exc}"])
    bad = cfg.validate()
    if bad:
        raise ConfigInvalid(bad)
    return cfg


def validate_config(path) -> list:
    """List of schema violations (empty iff run would accept the file)."""
    try:
        load_config(path)
    except ConfigInvalid as exc:
        return list(exc.violations)
    return []


# ---------------------------------------------------------------------------
# experiment implementations
# ---------------------------------------------------------------------------

def _verdict(name, measured, expected, tolerance, passed):
    return {
        "name": name,
        "measured": float(measured),
        "expected": float(expected),
        "tolerance": float(tolerance),
        "pass": bool(passed),
    }


def _source_function(cfg: ExperimentConfig):
    if cfg.source == "oracle-dual":
        return oracle.RadialProfile(alpha=cfg.alpha, kind="dual_translator", eta=cfg.eta)
    if cfg.source == "oracle-primal":
        return oracle.RadialProfile(alpha=cfg.alpha, kind="primal_translator")
    if cfg.source == "separable":
        return oracle.SeparableSolution(alpha=cfg.alpha, a=1.0)
    if cfg.source == "quadratic":
        return lambda p: 0.5 * (p[:, 0] ** 2 + p[:, 1] ** 2)
    raise ConfigInvalid(["/source: 'solve' source is only valid for cascade/sections"])


def _rhs_field(cfg: ExperimentConfig) -> RhsField:
    if cfg.rhs == "constant":
        return RhsField("constant")
    if cfg.rhs == "dual_translator":
        return RhsField("dual_translator", alpha=cfg.alpha, eta=cfg.eta)
    return RhsField("degenerate", alpha=cfg.alpha)


def _domain(cfg: ExperimentConfig) -> Domain2D:
    if cfg.domain == "disk":
        return Domain2D.disk(cfg.radius)
    return Domain2D.square(cfg.radius)


def _run_oracle(cfg, out):
    prof = _source_function(cfg)
    if not isinstance(prof, oracle.RadialProfile):
        raise ConfigInvalid(["/source: oracle experiment needs oracle-dual or oracle-primal"])
    radii = np.geomspace(max(cfg.rmin, 1e-3) / 16.0, cfg.rmax, 64)
    rows = [(float(r), float(prof.slope(r)), float(prof.value(r)[0])) for r in radii]
    _write_table(out, "profile", ["r", "slope", "value"], rows)
    return {"radii": [r[0] for r in rows]}, []


def _run_growth(cfg, out):
    fn = _source_function(cfg)
    theory = (
        1.0 / (2.0 * cfg.alpha)
        if cfg.source == "oracle-dual"
        else 1.0 / (1.0 - 2.0 * cfg.alpha)
        if cfg.source == "oracle-primal"
        else 2.0
    )
    fit = analysis.growth_exponent(
        fn, cfg.rmin, cfg.rmax, cfg.n_circles, slope_theory=theory
    )
    rows = list(
        zip(fit.radii.tolist(), fit.min_values.tolist(), fit.max_values.tolist())
    )
    _write_table(out, "growth", ["r", "min_value", "max_value"], rows)
    rel = abs(fit.slope - theory) / theory
    verdicts = [_verdict("slope_matches_theory", fit.slope, theory, cfg.slope_tolerance,
                         rel <= cfg.slope_tolerance)]
    outputs = {
        "slope": fit.slope,
        "slope_theory": theory,
        "ratio_proxy": fit.ratio_proxy,
        "levels": fit.radii.tolist(),
    }
    return outputs, verdicts


def _run_solve(cfg, out):
    dom = _domain(cfg)
    rhs = _rhs_field(cfg)
    if cfg.rhs == "constant":
        boundary = lambda p: 0.5 * (p[:, 0] ** 2 + p[:, 1] ** 2)
        exact = boundary
    elif cfg.rhs == "degenerate":
        sep = oracle.SeparableSolution(alpha=cfg.alpha, a=1.0)
        boundary = sep
        exact = sep
    else:
        prof = oracle.RadialProfile(alpha=cfg.alpha, kind="dual_translator", eta=cfg.eta)
        boundary = prof
        exact = prof
    problem = solver.build_problem(dom, cfg.h, rhs, boundary)
    report = solver.solve(problem, tol=cfg.tol)
    save(report.grid, os.path.join(out, "solution.gfn"))
    check = solver.residual(report.function, problem)
    ex = np.asarray(exact(problem.grid.nodes), dtype=float)
    sup_err = float(np.max(np.abs(report.grid.values - ex)) / max(np.abs(ex).max(), 1e-30))
    verdicts = [
        _verdict("mass_residual", check, 0.0, cfg.tol, check <= cfg.tol),
        _verdict("nodal_relative_error", sup_err, 0.0, cfg.error_tolerance,
                 sup_err <= cfg.error_tolerance),
    ]
    outputs = {
        "iterations": report.iterations,
        "max_residual": report.max_residual,
        "h": cfg.h,
        "alpha": cfg.alpha if cfg.rhs != "constant" else None,
        "nodal_relative_error": sup_err,
    }
    return outputs, verdicts


def _solve_for_sections(cfg):
    prof = oracle.RadialProfile(alpha=cfg.alpha, kind="dual_translator", eta=cfg.eta)
    dom = Domain2D.disk(cfg.radius)
    rhs = RhsField("dual_translator", alpha=cfg.alpha, eta=cfg.eta)
    problem = solver.build_problem(dom, cfg.h, rhs, prof)
    report = solver.solve(problem, tol=max(cfg.tol, 1e-3))
    return report.grid, rhs


def _run_sections(cfg, out):
    if cfg.source == "solve":
        v, rhs = _solve_for_sections(cfg)
        density = rhs
        x0 = v.nodes[v.argmin_node()]
    else:
        v = _source_function(cfg)
        density = (
            RhsField("degenerate", alpha=cfg.alpha)
            if cfg.source == "separable"
            else RhsField("dual_translator", alpha=cfg.alpha, eta=cfg.eta)
            if cfg.source == "oracle-dual"
            else RhsField("constant")
        )
        x0 = np.zeros(2)
    rows = []
    for t in cfg.levels:
        sec, fit = sections.section_balance(v, density, x0, np.zeros(2), float(t))
        A = fit.normalized
        rows.append(
            (
                float(t),
                sec.area,
                sec.mass(density),
                fit.r,
                sections.eccentricity(fit),
                fit.k0,
                A[0, 0],
                A[0, 1],
                A[1, 0],
                A[1, 1],
            )
        )
    _write_table(
        out,
        "sections",
        ["t", "area", "mass", "r", "ecc", "k0", "A11", "A12", "A21", "A22"],
        rows,
    )
    k0s = [r[5] for r in rows]
    spread = max(k0s) / min(k0s)
    verdicts = [_verdict("k0_spread_below_3", spread, 1.0, 3.0, spread < 3.0)]
    return {"levels": list(map(float, cfg.levels)), "k0": k0s}, verdicts


def _run_cascade(cfg, out):
    if cfg.source == "solve":
        v, _ = _solve_for_sections(cfg)
        x0 = v.nodes[v.argmin_node()]
    else:
        v = _source_function(cfg)
        x0 = np.zeros(2)
    series = analysis.eccentricity_cascade(v, x0, np.zeros(2), cfg.levels)
    rows = list(zip(series.levels.tolist(), series.norms.tolist()))
    _write_table(out, "cascade", ["t", "ecc"], rows)
    verdicts = []
    if cfg.source == "separable":
        theory = oracle.SeparableSolution(alpha=cfg.alpha, a=1.0).eccentricity_slope()
        rel = abs(series.slope - theory) / theory
        verdicts.append(
            _verdict("cascade_slope", series.slope, theory, 0.05, rel <= 0.05)
        )
    elif cfg.source == "oracle-dual":
        verdicts.append(
            _verdict("cascade_slope_flat", series.slope, 0.0, 0.02,
                     abs(series.slope) <= 0.02)
        )
    outputs = {"levels": series.levels.tolist(), "ecc": series.norms.tolist(),
               "slope": series.slope}
    return outputs, verdicts


def _run_doubling(cfg, out):
    f = _rhs_field(cfg)
    region = Domain2D.disk(cfg.radius)
    est = sections.doubling_constant(f, region, cfg.n_samples, rng_seed=cfg.seed)
    rows = [(cfg.n_samples, est)]
    _write_table(out, "doubling", ["n_samples", "estimate"], rows)
    verdicts = []
    if cfg.rhs == "constant":
        verdicts.append(_verdict("constant_doubling_is_4", est, 4.0, 1e-6,
                                 abs(est - 4.0) <= 1e-6))
    else:
        verdicts.append(_verdict("doubling_finite", est, 0.0, np.inf, np.isfinite(est)))
    return {"estimate": est, "seed": cfg.seed}, verdicts


def _run_verify_dual(cfg, out):
    prof = oracle.RadialProfile(alpha=cfg.alpha, kind="dual_translator", eta=cfg.eta)
    dom = Domain2D.disk(cfg.radius)
    rhs = RhsField("dual_translator", alpha=cfg.alpha, eta=cfg.eta)
    problem = solver.build_problem(dom, cfg.h, rhs, prof)
    report = solver.solve(problem, tol=max(cfg.tol, 1e-6))
    save(report.grid, os.path.join(out, "solution.gfn"))
    ex = prof(problem.grid.nodes)
    sup_err = float(np.max(np.abs(report.grid.values - ex)) / np.abs(ex).max())

    cells = ma_measure.subgradient_cells(report.function)
    weight = lambda y: (1.0 + y[:, 0] ** 2 + y[:, 1] ** 2) ** (
        2.0 - 1.0 / (2.0 * cfg.alpha)
    )
    radii = np.hypot(report.grid.nodes[:, 0], report.grid.nodes[:, 1])
    annuli = [(0.15, 0.35), (0.35, 0.55), (0.55, 0.75)]
    id_rows = []
    worst = 0.0
    for lo_f, hi_f in annuli:
        lo, hi = lo_f * cfg.radius, hi_f * cfg.radius
        chosen = [c for c in cells if lo <= radii[c.site_index] <= hi]
        weighted = ma_measure.site_weighted_mass(report.function, chosen, weight)
        lebesgue = len(chosen) * cfg.h * cfg.h
        dev = abs(weighted / lebesgue - 1.0)
        worst = max(worst, dev)
        id_rows.append((lo, hi, weighted, lebesgue, dev))
    _write_table(
        out, "dual_identity", ["r_lo", "r_hi", "weighted_mass", "area", "deviation"], id_rows
    )
    verdicts = [
        _verdict("nodal_relative_error", sup_err, 0.0, cfg.error_tolerance,
                 sup_err <= cfg.error_tolerance),
        _verdict("dual_identity", worst, 0.0, cfg.identity_tolerance,
                 worst <= cfg.identity_tolerance),
    ]
    outputs = {
        "iterations": report.iterations,
        "max_residual": report.max_residual,
        "nodal_relative_error": sup_err,
        "identity_deviation": worst,
    }
    return outputs, verdicts


def _run_verify_translator(cfg, out):
    from .grid import sample

    prof = oracle.RadialProfile(alpha=cfg.alpha, kind="primal_translator")
    dom = Domain2D.disk(cfg.radius)
    gf = sample(prof, dom, cfg.h)
    pl = ma_measure.lower_envelope(gf.nodes, gf.values)
    radii = np.hypot(gf.nodes[:, 0], gf.nodes[:, 1])
    lo, hi = 0.3 * cfg.radius, 0.7 * cfg.radius
    subset = np.flatnonzero((radii >= lo) & (radii <= hi) & pl.hull_interior)
    rep = ma_measure.check_translator_identity(pl, cfg.alpha, subset)
    cells = ma_measure.subgradient_cells(pl)
    gauss_total = ma_measure.gauss_map_mass(cells)
    rows = [(lo, hi, rep.measure_side, rep.integral_side, rep.relative_residual)]
    _write_table(
        out,
        "translator_identity",
        ["r_lo", "r_hi", "measure_side", "integral_side", "relative_residual"],
        rows,
    )
    verdicts = [
        _verdict("translator_identity", rep.relative_residual, 0.0, 0.03,
                 rep.relative_residual <= 0.03),
        _verdict("gauss_mass_hemisphere_bound", gauss_total, 2 * np.pi, 2 * np.pi,
                 gauss_total <= 2 * np.pi),
    ]
    outputs = {
        "relative_residual": rep.relative_residual,
        "gauss_mass": gauss_total,
    }
    return outputs, verdicts


_RUNNERS = {
    "oracle": _run_oracle,
    "growth": _run_growth,
    "solve": _run_solve,
    "sections": _run_sections,
    "cascade": _run_cascade,
    "doubling": _run_doubling,
    "verify-dual": _run_verify_dual,
    "verify-translator": _run_verify_translator,
}


def run(cfg: ExperimentConfig) -> dict:
    """Run one experiment; returns the report dict after writing all files."""
    bad = cfg.validate()
    if bad:
        raise ConfigInvalid(bad)
    os.makedirs(cfg.outdir, exist_ok=True)
    outputs, verdicts = _RUNNERS[cfg.experiment](cfg, cfg.outdir)
    report = {
        "config": asdict(cfg),
        "outputs": outputs,
        "verdicts": verdicts,
        "pass": all(v["pass"] for v in verdicts),
        "work": {"experiment": cfg.experiment},
    }
    _atomic_write(
        os.path.join(cfg.outdir, "report.json"),
        json.dumps(report, sort_keys=True, indent=2) + "\n",
    )
    return report


def _write_table(outdir, name, header, rows):
    """One CSV plus a gnuplot .dat with identical numbers."""
    csv_lines = [",".join(header)]
    dat_lines = ["# " + " ".join(header)]
    for row in rows:
        csv_lines.append(",".join(repr(float(x)) for x in row))
        dat_lines.append(" ".join(repr(float(x)) for x in row))
    _atomic_write(os.path.join(outdir, f"{name}.csv"), "\n".join(csv_lines) + "\n")
    _atomic_write(os.path.join(outdir, f"{name}.dat"), "\n".join(dat_lines) + "\n")


def read_table(path):
    """Re-parse a CSV written by _write_table: (header, float rows)."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln for ln in fh.read().splitlines() if ln.strip()]
    header = lines[0].split(",")
    rows = [tuple(float(t) for t in ln.split(",")) for ln in lines[1:]]
    return header, rows


def _atomic_write(path, text):
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)


# ---------------------------------------------------------------------------
# command line
# ---------------------------------------------------------------------------

def _add_common(p):
    p.add_argument("--config", default=None, help="JSON config file; flags override")
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--eta", type=float, default=None)
    p.add_argument("--rhs", default=None)
    p.add_argument("--source", default=None)
    p.add_argument("--domain", default=None)
    p.add_argument("--radius", type=float, default=None)
    p.add_argument("--h", type=float, default=None)
    p.add_argument("--rmin", type=float, default=None)
    p.add_argument("--rmax", type=float, default=None)
    p.add_argument("--n-circles", type=int, default=None, dest="n_circles")
    p.add_argument("--levels", type=float, nargs="+", default=None)
    p.add_argument("--n-samples", type=int, default=None, dest="n_samples")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--outdir", default=None)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="ma2d", description="Monge-Ampere section-geometry experiments"
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in EXPERIMENTS:
        _add_common(sub.add_parser(name))
    vp = sub.add_parser("validate")
    vp.add_argument("config_path")
    args = parser.parse_args(argv)

    if args.command == "validate":
        violations = validate_config(args.config_path)
        for v in violations:
            print(v)
        return 0 if not violations else 2

    overrides = {
        k: getattr(args, k)
        for k in ExperimentConfig.__dataclass_fields__
        if hasattr(args, k)
    }
    try:
        if args.config:
            cfg = load_config(args.config, overrides)
        else:
            overrides = {k: v for k, v in overrides.items() if v is not None}
            cfg = ExperimentConfig(experiment=args.command, **overrides)
            bad = cfg.validate()
            if bad:
                raise ConfigInvalid(bad)
        if cfg.experiment != args.command:
            raise ConfigInvalid(
                [f"/experiment: config says {cfg.experiment!r}, command is {args.command!r}"]
            )
    except ConfigInvalid as exc:
        for v in exc.violations:
            print(v, file=sys.stderr)
        return 2

    try:
        report = run(cfg)
    except ConfigInvalid as exc:
        for v in exc.violations:
            print(v, file=sys.stderr)
        return 2
    except ToolkitError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    for v in report["verdicts"]:
        status = "pass" if v["pass"] else "FAIL"
        print(
            f"[{status}] {v['name']}: measured {v['measured']:.6g} "
            f"expected {v['expected']:.6g} tolerance {v['tolerance']:.3g}"
        )
    return 0 if report["pass"] else 1


if __name__ == "__main__":
    raise SystemExit(main())
