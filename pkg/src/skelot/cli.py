"""Config-driven experiment runner with machine-readable outputs.

One JSON config describes a family, a discretization, solver settings and
diagnostic toggles; `solve` executes the pipeline and writes result.json,
phi.csv, phic.csv, plan.csv and diagnostics.json into the output directory.
Reruns with the same config and seed are byte-identical.  Column layouts
are documented in docs/csv_schema.md.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import random
import sys
from fractions import Fraction
from typing import Optional

from . import cost as co
from . import diagnostics as dg
from . import families as fm
from . import transport as tp
from . import tropical as tr
from .errors import (
    AssertionFailed,
    ConfigError,
    IncompleteRun,
    SkelotError,
    SolverNotConverged,
)
from .polyhedral import DiscreteMeasure, Face, format_fraction

F = Fraction


# -- config ------------------------------------------------------------------------


def _fraction(value, name: str) -> Fraction:
    try:
        if isinstance(value, float):
            raise TypeError
        return F(value)
    except (ValueError, TypeError, ZeroDivisionError):
        raise ConfigError(f"{name} must be an exact rational like '1/8'")


class ExperimentConfig:
    """Validated view of one experiment description."""

    def __init__(self, raw: dict, seed_override: Optional[int] = None):
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        self.raw = raw
        self.family = raw.get("family")
        if not isinstance(self.family, dict) or "kind" not in self.family:
            raise ConfigError("config needs a family block with a kind")
        solver = raw.get("solver", {})
        self.method = solver.get("method", "auto")
        if self.method not in ("auto", "ascent", "exact"):
            raise ConfigError(f"unknown solver method {self.method!r}")
        self.tol = float(solver.get("tol", 1e-9))
        self.max_iter = int(solver.get("max_iter", 60))
        self.damping = float(solver.get("damping", 0.5))
        if self.tol <= 0 or self.max_iter <= 0 or not 0 < self.damping <= 1:
            raise ConfigError("solver tolerances must be positive")
        self.oracle = bool(raw.get("oracle", False))
        self.diagnostics = raw.get("diagnostics", {})
        self.output_dir = raw.get("output_dir", "run")
        self.seed = int(seed_override if seed_override is not None
                        else raw.get("seed", 0))

    def resolution(self) -> Fraction:
        return _fraction(self.family.get("resolution", "1/8"), "resolution")


def load_config(path: str, seed_override=None) -> ExperimentConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config: {exc}")
    return ExperimentConfig(raw, seed_override)


def _mumford_data(block: dict) -> co.MumfordData:
    axes = block.get("axes", [{}])
    return co.MumfordData(tuple(
        co.PhiAxis(base_slope=int(a.get("base_slope", 1)),
                   quad=int(a.get("quad", 1)),
                   period=int(a.get("period", 1)))
        for a in axes))


def build_problem(cfg: ExperimentConfig):
    """TransportProblem plus family-specific extras from the config block."""
    blk = cfg.family
    kind = blk["kind"]
    try:
        if kind == "toric":
            pair, problem = fm.toric_pair(blk["delta"], resolution=cfg.resolution(),
                                          ln_norm=blk.get("ln_norm"))
            return problem, {"pair": pair}
        if kind == "intermediate":
            data = fm.IntermediateData(
                n=int(blk["n"]), m=int(blk["m"]), d=tuple(blk["d"]),
                hilbert_M=tuple(blk["hilbert_M"]),
                ln_norm=float(blk.get("ln_norm", 1.0)))
            return fm.intermediate_family(data, resolution=cfg.resolution()), \
                {"data": data}
        if kind == "abelian":
            data = _mumford_data(blk)
            levels = [int(l) for l in blk.get("levels", [1, 2])]
            family, problem = fm.mumford_family(data, levels,
                                                resolution=cfg.resolution())
            return problem, {"data": data, "family": family, "levels": levels}
        if kind == "zero":
            pts = ((F(0),), (F(1),))
            mu = DiscreteMeasure(pts, (0.5, 0.5), (0, 0), 1.0)
            zero = co.CostFunction(None, None, lambda x, p: F(0), lipschitz_x=0.0)
            return tp.TransportProblem(zero, mu, mu), {}
    except KeyError as exc:
        raise ConfigError(f"family block is missing {exc}")
    except (SkelotError, ValueError) as exc:
        raise ConfigError(f"family block invalid: {exc}")
    raise ConfigError(f"unknown family kind {kind!r}")


# -- output helpers ----------------------------------------------------------------


def _write_json(path: str, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_field_csv(path: str, field: tp.PotentialField) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        dim = len(field.points[0])
        w.writerow([f"x{k}" for k in range(dim)] + ["value"])
        for p, v in zip(field.points, field.values):
            w.writerow([format_fraction(c) for c in p] + [repr(float(v))])


def _write_plan_csv(path: str, plan) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["source_index", "target_index", "mass"])
        n, m = plan.shape
        for i in range(n):
            for j in range(m):
                if plan[i, j] > 0:
                    w.writerow([i, j, repr(float(plan[i, j]))])


def _assertion(name, expected, observed, tolerance, ok) -> dict:
    return {"name": name, "expected": expected, "observed": observed,
            "tolerance": tolerance, "pass": bool(ok)}


# -- solve pipeline ----------------------------------------------------------------


def run(config_path: str, seed_override=None,
        allow_nonconverged: bool = False) -> int:
    cfg = load_config(config_path, seed_override)
    problem, extras = build_problem(cfg)
    result = tp.minimize_kontorovich(problem, max_iter=cfg.max_iter,
                                     tol=cfg.tol, method=cfg.method,
                                     damping=cfg.damping)
    if not result.converged and not allow_nonconverged:
        raise SolverNotConverged(f"gap {result.gap} above tolerance")

    assertions = [
        _assertion("gap_nonnegative", ">= -1e-9", result.gap, 1e-9,
                   result.gap >= -1e-9),
    ]
    lp_value = None
    if cfg.oracle:
        lp = tp.lp_oracle(problem)
        lp_value = lp.primal_value
        tol = 1e-6 * (1 + abs(result.value))
        assertions.append(_assertion(
            "strong_duality", lp.primal_value, result.value, tol,
            abs(result.value - lp.primal_value) <= tol))

    diag_out = {}
    rng = random.Random(cfg.seed)
    if cfg.diagnostics.get("pushforward", False):
        diag_out["pushforward"] = dg.pushforward_residual(result, problem)
    if cfg.diagnostics.get("cost_bounds", False) and "family" in extras:
        family = extras["family"]
        levels = extras["levels"]
        samples = []
        for _ in range(int(cfg.diagnostics.get("cost_bound_samples", 200))):
            l = rng.choice(levels)
            x = rng.choice(problem.mu0.points)
            p = rng.choice(family.labels(l))
            samples.append((x, p, l))
        report = co.verify_cost_bounds(family, problem.cost, samples)
        diag_out["cost_bounds"] = {
            "lower_bound_checks": report.n_lower_bound_checks,
            "subadditivity_checks": report.n_subadditivity_checks,
            "violations": len(report.violations)}
        assertions.append(_assertion("cost_bounds", 0,
                                     len(report.violations), 0,
                                     not report.violations))

    os.makedirs(cfg.output_dir, exist_ok=True)
    out = cfg.output_dir
    _write_json(os.path.join(out, "config.json"),
                {**cfg.raw, "seed": cfg.seed})
    _write_json(os.path.join(out, "result.json"), {
        "value": result.value, "gap": result.gap,
        "iterations": result.iterations, "converged": result.converged,
        "lp_value": lp_value, "seed": cfg.seed,
        "resolution": format_fraction(cfg.resolution()),
    })
    _write_field_csv(os.path.join(out, "phi.csv"), result.phi)
    _write_field_csv(os.path.join(out, "phic.csv"), result.psi)
    if result.plan is not None:
        _write_plan_csv(os.path.join(out, "plan.csv"), result.plan)
    _write_json(os.path.join(out, "diagnostics.json"), {
        "assertions": assertions, "diagnostics": diag_out, "seed": cfg.seed})

    if not all(a["pass"] for a in assertions):
        raise AssertionFailed("an enabled assertion failed; see diagnostics.json")
    return 0


# -- other subcommands ----------------------------------------------------------------


def check_independence(path: str) -> int:
    with open(path, "r", encoding="utf-8") as fh:
        spec = json.load(fh)
    secs = []
    for s in spec["sections"]:
        terms = tuple(tr.MonomialTerm(tuple(t["exponent"]), int(t.get("t_order", 0)),
                                      t["coeff_id"]) for t in s["terms"])
        secs.append(tr.TropicalSection(terms, level=int(s.get("level", 1))))
    face_spec = spec["face"]
    face = Face(tuple(tuple(F(c) for c in v) for v in face_spec["vertices"]),
                multiplicities=tuple(face_spec["multiplicities"])
                if face_spec.get("multiplicities") else None)
    coeffs = {k: tuple(F(c) for c in v)
              for k, v in spec["coefficients"].items()}
    verdict = tr.check_valuative_independence(secs, face, coeffs)
    payload = {"independent": verdict.independent}
    if verdict.witness is not None:
        payload["witness"] = {
            "class_sections": list(verdict.witness.class_sections),
            "kernel": [format_fraction(k) for k in verdict.witness.kernel]}
    print(json.dumps(payload, sort_keys=True))
    return 0 if verdict.independent else 1


def count_sections(config_path: str) -> int:
    cfg = load_config(config_path)
    blk = cfg.family
    if blk["kind"] != "intermediate":
        raise ConfigError("count-sections needs an intermediate family")
    data = fm.IntermediateData(n=int(blk["n"]), m=int(blk["m"]),
                               d=tuple(blk["d"]),
                               hilbert_M=tuple(blk["hilbert_M"]))
    rows = {}
    ok = True
    for l in cfg.raw.get("levels", list(range(9))):
        counts = fm.section_count(data, int(l))
        rows[str(l)] = counts
        ok = ok and counts["enumerated"] == counts["series"]
    print(json.dumps(rows, sort_keys=True))
    if not ok:
        raise AssertionFailed("enumerated and series counts disagree")
    return 0


def hybrid(config_path: str) -> int:
    cfg = load_config(config_path)
    blk = cfg.family
    if blk["kind"] != "abelian":
        raise ConfigError("hybrid needs an abelian family")
    data = _mumford_data(blk)
    level = int(cfg.raw.get("level", 1))
    schedule = [float(t) for t in cfg.raw.get("t_schedule", [1e-2, 1e-4, 1e-8])]
    steps = int(cfg.raw.get("grid_steps", 16))
    grid = [(F(j, steps),) for j in range(steps)]
    labels = [(F(j, level),) for j in range(level * data.axes[0].period)]
    out = dg.hybrid_potential_curve(data, level, schedule, grid, labels)
    print(json.dumps(out, sort_keys=True))
    errs = out["sup_error"]
    if cfg.raw.get("assert_decreasing", True) and \
            any(b >= a for a, b in zip(errs, errs[1:])):
        raise AssertionFailed("hybrid errors are not strictly decreasing")
    return 0


def _load_run_field(run_dir: str, name: str) -> tp.PotentialField:
    path = os.path.join(run_dir, name)
    if not os.path.exists(path):
        raise IncompleteRun(f"{name} missing from {run_dir}")
    pts, vals = [], []
    with open(path, "r", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        dim = len(header) - 1
        for row in reader:
            pts.append(tuple(F(c) for c in row[:dim]))
            vals.append(F(float(row[dim])))
    return tp.PotentialField(tuple(pts), tuple(vals))


def diagnose_ma(run_dir: str) -> int:
    phi = _load_run_field(run_dir, "phi.csv")
    result_path = os.path.join(run_dir, "result.json")
    if not os.path.exists(result_path):
        raise IncompleteRun("result.json missing")
    with open(result_path, "r", encoding="utf-8") as fh:
        meta = json.load(fh)
    h = _fraction(meta["resolution"], "resolution")
    field = dg.ma_residual(phi, h)
    payload = {"max_residual": field.max_residual,
               "constant": field.constant,
               "degenerate_cells": sum(field.degenerate)}
    _write_json(os.path.join(run_dir, "ma.json"), payload)
    print(json.dumps(payload, sort_keys=True))
    return 0


def diagnose_duality(run_dir: str) -> int:
    config_path = os.path.join(run_dir, "config.json")
    if not os.path.exists(config_path):
        raise IncompleteRun("config.json missing")
    cfg = load_config(config_path)
    problem, _ = build_problem(cfg)
    result = tp.minimize_kontorovich(problem, max_iter=cfg.max_iter,
                                     tol=cfg.tol, method=cfg.method)
    dual = tp.TransportProblem(problem.cost.transpose(), problem.nu0,
                               problem.mu0, ln_norm=problem.ln_norm)
    dual_result = tp.minimize_kontorovich(dual, max_iter=cfg.max_iter,
                                          tol=cfg.tol, method=cfg.method)
    out = dg.duality_check(problem, dual, result, dual_result)
    _write_json(os.path.join(run_dir, "duality.json"), out)
    print(json.dumps(out, sort_keys=True))
    return 0


def report(run_dir: str, fmt: str = "json") -> int:
    path = os.path.join(run_dir, "diagnostics.json")
    if not os.path.exists(path):
        raise IncompleteRun(f"diagnostics.json missing from {run_dir}")
    with open(path, "r", encoding="utf-8") as fh:
        diag = json.load(fh)
    rows = diag["assertions"]
    if fmt == "json":
        print(json.dumps(rows, sort_keys=True))
    elif fmt == "csv":
        w = csv.writer(sys.stdout)
        w.writerow(["name", "expected", "observed", "tolerance", "pass"])
        for r in rows:
            w.writerow([r["name"], r["expected"], r["observed"],
                        r["tolerance"], r["pass"]])
    else:
        raise ConfigError(f"unknown report format {fmt!r}")
    return 0


# -- entry point --------------------------------------------------------------------


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="skelot",
        description="optimal-transport potentials on polyhedral skeletons")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="run one experiment config")
    p.add_argument("config")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--allow-nonconverged", action="store_true")

    p = sub.add_parser("check-independence", help="verify a section basis")
    p.add_argument("sections_file")

    p = sub.add_parser("count-sections", help="basis counts vs the series")
    p.add_argument("config")

    p = sub.add_parser("hybrid", help="finite-t convergence curve")
    p.add_argument("config")

    p = sub.add_parser("diagnose-ma", help="Monge-Ampere residual of a run")
    p.add_argument("run_dir")

    p = sub.add_parser("diagnose-duality", help="mirror comparison of a run")
    p.add_argument("run_dir")

    p = sub.add_parser("report", help="assertion summary of a run")
    p.add_argument("run_dir")
    p.add_argument("--format", choices=["json", "csv"], default="json")

    args = parser.parse_args(argv)
    threads = os.environ.get("SKELOT_THREADS")
    if threads:
        # best effort: honored by BLAS backends loaded after this point
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS",
                    "MKL_NUM_THREADS"):
            os.environ.setdefault(var, threads)
    try:
        if args.command == "solve":
            return run(args.config, seed_override=args.seed,
                       allow_nonconverged=args.allow_nonconverged)
        if args.command == "check-independence":
            return check_independence(args.sections_file)
        if args.command == "count-sections":
            return count_sections(args.config)
        if args.command == "hybrid":
            return hybrid(args.config)
        if args.command == "diagnose-ma":
            return diagnose_ma(args.run_dir)
        if args.command == "diagnose-duality":
            return diagnose_duality(args.run_dir)
        if args.command == "report":
            return report(args.run_dir, args.format)
    except (ConfigError, IncompleteRun) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SolverNotConverged as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except AssertionFailed as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except SkelotError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    raise AssertionError("unreachable")


if __name__ == "__main__":
    sys.exit(main())
