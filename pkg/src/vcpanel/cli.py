"""Command-line entry point: ``vcpanel fit | select | simulate``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np
import yaml

from .bootstrap import bootstrap_bands
from .config import RunConfig, default_parallelism, load_config_dict
from .design import coefficient_curves
from .exceptions import ConfigError, VcPanelError
from .ife import FitOptions, Init, fit_ife
from .io import (CURVE_COLUMNS, SCHEMA_VERSION, curve_rows, load_long_csv,
                 write_csv_atomic, write_json_atomic)
from .lsdv import fit_lsdv
from .montecarlo import TABLE_GRID, McSpec, run_monte_carlo, table_rows
from .selection import bic_factor_number, common_bases, select_knots

EXIT_CODES = {"parse": 2, "numerical": 3, "config": 4}


def _floats(a) -> list:
    return [float(v) for v in np.asarray(a).ravel()]


def _cv_json(res):
    return {"candidate_l": list(res.candidate_l), "scores": list(res.scores),
            "best_l": res.best_l}


def _bic_json(res):
    return {"candidate_r": list(res.candidate_r), "scores": list(res.scores),
            "v_values": list(res.v_values), "exact_fit": list(res.exact_fit),
            "best_r": res.best_r, "penalty": res.penalty}


def _select(panel, cfg: RunConfig) -> tuple[int, int, dict]:
    """Knots first (at the configured r), then r at the chosen knots."""
    report = {}
    l = cfg.l
    if cfg.knot_mode == "cv":
        cv = select_knots(panel, cfg.knot_grid, cfg.r, cfg.fit, degree=cfg.degree)
        l = cv.best_l
        report["cv"] = _cv_json(cv)
    r = cfg.r
    if cfg.factor_mode == "bic":
        bic = bic_factor_number(panel, common_bases(panel, l, cfg.degree), cfg.r_max,
                                cfg.fit)
        r = bic.best_r
        report["bic"] = _bic_json(bic)
    return l, r, report


def output_grid(support, size: int) -> np.ndarray:
    return np.linspace(support.u_min, support.u_max, size)


def cmd_fit(cfg: RunConfig, data_path, out_dir) -> dict:
    """Fit the configured model; write ``summary.json`` and ``curves.csv``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    panel, meta = load_long_csv(data_path, cfg.schema)
    l, r, selection = _select(panel, cfg)
    bases = common_bases(panel, l, cfg.degree)
    grid = output_grid(panel.support, cfg.grid_size)

    summary = {
        "schema_version": SCHEMA_VERSION,
        "seed": cfg.seed,
        "config": cfg.as_dict(),
        "data": {"path": str(data_path), "n_subjects": panel.n_subjects,
                 "n_periods": panel.n_periods, "regressors": meta["regressors"],
                 "support": [panel.support.u_min, panel.support.u_max]},
        "spline": {"degree": cfg.degree, "interior_knots": l,
                   "knots": [_floats(b.knots) for b in bases]},
        "selection": selection,
    }
    bands = None
    if cfg.model == "lsdv":
        fit = fit_lsdv(panel, bases)
        summary["fit"] = {"model": "lsdv", "gamma": _floats(fit.gamma),
                          "mu": _floats(fit.mu), "xi": _floats(fit.xi),
                          "objective": fit.objective}
    else:
        fit = fit_ife(panel, bases, r, cfg.fit)
        summary["fit"] = {"model": "ife", "gamma": _floats(fit.gamma), "r": r,
                          "converged": fit.converged, "iterations": fit.iterations,
                          "objective": fit.objective, "v_nt": _floats(fit.v_nt)}
        if cfg.bootstrap is not None:
            bands = bootstrap_bands(panel, fit, bases, cfg.bootstrap, grid, cfg.fit,
                                    n_jobs=cfg.parallelism)
            summary["bootstrap"] = {
                "n_draws": cfg.bootstrap.n_draws, "draws_used": bands.draws_used,
                "failed": bands.n_failed, "nonconverged": bands.n_nonconverged,
                "block_length": bands.block_length, "alpha": cfg.bootstrap.alpha,
                "z": bands.z}
    estimates = coefficient_curves(bases, fit.gamma, grid)
    write_csv_atomic(out_dir / "curves.csv", CURVE_COLUMNS,
                     curve_rows(grid, estimates, bands))
    write_json_atomic(out_dir / "summary.json", summary)
    return summary


def cmd_select(cfg: RunConfig, data_path, out_dir) -> dict:
    if cfg.knot_mode != "cv" and cfg.factor_mode != "bic":
        raise ConfigError("nothing to select: set knots.mode=cv and/or factors.mode=bic")
    if cfg.model != "ife":
        raise ConfigError("selection is defined for the ife model")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    panel, _ = load_long_csv(data_path, cfg.schema)
    l, r, report = _select(panel, cfg)
    payload = {"schema_version": SCHEMA_VERSION, "seed": cfg.seed,
               "selected": {"interior_knots": l, "r": r}, **report}
    write_json_atomic(out_dir / "selection.json", payload)
    return payload


SIM_KEYS = {"dgp", "sizes", "estimators", "replications", "base_seed", "r", "knots",
            "knot_grid", "degree", "noise_sd", "fit", "parallelism"}


def load_sim_spec(path, overrides: dict | None = None) -> tuple[McSpec, int]:
    try:
        with open(path, encoding="utf-8") as fh:
            raw = yaml.safe_load(fh) or {}
    except OSError as exc:
        raise ConfigError(f"cannot read spec {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML in {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("simulation spec must be a mapping")
    raw.update({k: v for k, v in (overrides or {}).items() if v is not None})
    unknown = set(raw) - SIM_KEYS
    if unknown:
        raise ConfigError(f"unknown simulation keys {sorted(unknown)}")
    par = raw.pop("parallelism", None)
    if raw.get("sizes") == "table":
        raw["sizes"] = TABLE_GRID
    fit = raw.pop("fit", None) or {}
    try:
        opts = FitOptions(max_iterations=int(fit.get("max_iterations", 500)),
                          tolerance=float(fit.get("tolerance", 1e-8)),
                          init=Init(fit.get("init", "pca")))
        if "sizes" in raw:
            raw["sizes"] = tuple(tuple(s) for s in raw["sizes"])
        if "estimators" in raw:
            raw["estimators"] = tuple(raw["estimators"])
        if "knot_grid" in raw:
            raw["knot_grid"] = tuple(int(v) for v in raw["knot_grid"])
        spec = McSpec(fit_options=opts, **raw)
    except ConfigError:
        raise
    except (VcPanelError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid simulation spec: {exc}") from exc
    return spec, (default_parallelism() if par is None else max(1, int(par)))


def cmd_simulate(spec: McSpec, out_dir, n_jobs: int = 1) -> list:
    """Run the Monte Carlo and write ``amse_table.csv`` and ``amse_report.json``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    reports = run_monte_carlo(spec, n_jobs=n_jobs)
    rows = table_rows(reports)
    header = list(rows[0])
    write_json_atomic(out_dir / "amse_report.json", {
        "schema_version": SCHEMA_VERSION,
        "dgp": spec.dgp, "base_seed": spec.base_seed, "r": spec.r,
        "knots": spec.knots, "degree": spec.degree,
        "replications": spec.replications,
        "reports": [{
            "estimator": rep.estimator,
            "sizes": [list(s) for s in rep.sizes],
            "mean_amse": rep.mean_amse.tolist(),
            "std_error": rep.std_error.tolist(),
            "replications_used": list(rep.replications),
            "failures": list(rep.failures),
            "nonconverged": list(rep.nonconverged),
            "flagged": list(rep.flagged),
        } for rep in reports]})
    write_csv_atomic(out_dir / "amse_table.csv", header,
                     [[row[h] if h in ("N", "T") else repr(row[h]) for h in header]
                      for row in rows])
    return reports


# -- argument parsing --------------------------------------------------------

FIT_FLAGS = [
    # (flag, dotted config key, type)
    ("--model", "model", str),
    ("--factors", "factors.mode", str),
    ("--r", "factors.r", int),
    ("--r-max", "factors.r_max", int),
    ("--knots", "knots.mode", str),
    ("--l", "knots.l", int),
    ("--knot-grid", "knots.grid", lambda s: [int(v) for v in s.split(",") if v]),
    ("--degree", "degree", int),
    ("--grid-size", "grid_size", int),
    ("--seed", "seed", int),
    ("--parallelism", "parallelism", int),
    ("--draws", "bootstrap.n_draws", int),
    ("--alpha", "bootstrap.alpha", float),
    ("--block-constant", "bootstrap.block_constant", float),
    ("--block-length", "bootstrap.block_length", int),
    ("--max-iterations", "fit.max_iterations", int),
    ("--tolerance", "fit.tolerance", float),
    ("--init", "fit.init", str),
]


def _add_fit_flags(p):
    p.add_argument("--config", help="YAML configuration file")
    p.add_argument("--data", required=True, help="long-format CSV")
    p.add_argument("--out", required=True, help="output directory")
    for flag, key, typ in FIT_FLAGS:
        p.add_argument(flag, dest=key, type=typ, default=None, help=f"overrides {key}")
    p.add_argument("--bootstrap", dest="bootstrap.enabled", action="store_const",
                   const=True, default=None, help="enable bootstrap bands")
    p.add_argument("--no-bootstrap", dest="bootstrap.enabled", action="store_const",
                   const=False)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vcpanel",
        description="Varying-coefficient panel models with interactive fixed effects.")
    sub = parser.add_subparsers(dest="command", required=True)
    _add_fit_flags(sub.add_parser("fit", help="estimate coefficient curves"))
    _add_fit_flags(sub.add_parser("select", help="choose knots and/or factor count"))
    sim = sub.add_parser("simulate", help="Monte Carlo AMSE tables")
    sim.add_argument("--spec", required=True, help="YAML simulation spec")
    sim.add_argument("--out", required=True, help="output directory")
    sim.add_argument("--replications", type=int, default=None)
    sim.add_argument("--seed", dest="base_seed", type=int, default=None)
    sim.add_argument("--parallelism", type=int, default=None)
    return parser


def _overrides(ns) -> dict:
    return {k: v for k, v in vars(ns).items()
            if v is not None and ("." in k or k in {key for _, key, _ in FIT_FLAGS})}


def _fail(exc: Exception) -> int:
    category = getattr(exc, "category", "numerical")
    json.dump({"error": type(exc).__name__, "category": category,
               "message": str(exc)}, sys.stderr)
    sys.stderr.write("\n")
    return EXIT_CODES.get(category, 3)


def main(argv=None) -> int:
    ns = build_parser().parse_args(argv)
    try:
        if ns.command == "simulate":
            spec, jobs = load_sim_spec(ns.spec, {"replications": ns.replications,
                                                 "base_seed": ns.base_seed,
                                                 "parallelism": ns.parallelism})
            cmd_simulate(spec, ns.out, jobs)
            return 0
        cfg = RunConfig.from_dict(load_config_dict(ns.config, _overrides(ns)))
        if ns.command == "fit":
            cmd_fit(cfg, ns.data, ns.out)
        else:
            cmd_select(cfg, ns.data, ns.out)
        return 0
    except VcPanelError as exc:
        return _fail(exc)


if __name__ == "__main__":
    sys.exit(main())
