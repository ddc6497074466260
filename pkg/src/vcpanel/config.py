"""Run configuration read from YAML, with command-line overrides."""

from __future__ import annotations

import copy
import os
from dataclasses import dataclass

import yaml

from .bootstrap import BootstrapConfig
from .exceptions import ConfigError, InvalidSpec
from .ife import FitOptions, Init
from .io import LongCsvSchema

PARALLELISM_ENV = "VCPANEL_JOBS"

DEFAULTS = {
    "model": "ife",
    "factors": {"mode": "fixed", "r": 2, "r_max": 8},
    "knots": {"mode": "fixed", "l": 4, "grid": [1, 2, 3, 4, 5, 6]},
    "degree": 3,
    "grid_size": 201,
    "seed": 0,
    "parallelism": None,
    "bootstrap": {"enabled": False, "n_draws": 200, "alpha": 0.05,
                  "block_constant": 1.0, "block_length": None},
    "fit": {"max_iterations": 500, "tolerance": 1e-8, "init": "pca"},
    "schema": {"id": "id", "time": "t", "u": "u", "y": "y", "x": None,
               "delimiter": ","},
}


def default_parallelism() -> int:
    env = os.environ.get(PARALLELISM_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise ConfigError(f"{PARALLELISM_ENV}={env!r} is not an integer") from exc
    return os.cpu_count() or 1


def _merge(base: dict, extra: dict, path="") -> dict:
    out = copy.deepcopy(base)
    for key, val in extra.items():
        if key not in base:
            raise ConfigError(f"unknown config key {path + key!r}")
        if isinstance(base[key], dict):
            if not isinstance(val, dict):
                raise ConfigError(f"config key {path + key!r} must be a mapping")
            out[key] = _merge(base[key], val, path + key + ".")
        else:
            out[key] = val
    return out


def set_dotted(d: dict, dotted: str, value) -> None:
    parts = dotted.split(".")
    node = d
    for p in parts[:-1]:
        node = node.setdefault(p, {})
    node[parts[-1]] = value


def load_config_dict(path=None, overrides: dict | None = None) -> dict:
    raw = {}
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                raw = yaml.safe_load(fh) or {}
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except yaml.YAMLError as exc:
            raise ConfigError(f"invalid YAML in {path}: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError("config file must hold a mapping")
    for key, val in (overrides or {}).items():
        set_dotted(raw, key, val)
    return _merge(DEFAULTS, raw)


@dataclass(frozen=True)
class RunConfig:
    model: str
    factor_mode: str
    r: int
    r_max: int
    knot_mode: str
    l: int
    knot_grid: tuple[int, ...]
    degree: int
    grid_size: int
    seed: int
    parallelism: int
    bootstrap: BootstrapConfig | None
    fit: FitOptions
    schema: LongCsvSchema

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        try:
            model = str(d["model"])
            if model not in ("ife", "lsdv"):
                raise ConfigError(f"model must be 'ife' or 'lsdv', got {model!r}")
            fac, kn, bs = d["factors"], d["knots"], d["bootstrap"]
            if fac["mode"] not in ("fixed", "bic"):
                raise ConfigError("factors.mode must be 'fixed' or 'bic'")
            if kn["mode"] not in ("fixed", "cv"):
                raise ConfigError("knots.mode must be 'fixed' or 'cv'")
            if model == "lsdv" and (fac["mode"] == "bic" or kn["mode"] == "cv"
                                    or bs["enabled"]):
                raise ConfigError("lsdv supports fixed knots only, without "
                                  "factor selection or bootstrap")
            grid = tuple(int(v) for v in kn["grid"])
            if kn["mode"] == "cv" and not grid:
                raise ConfigError("knots.grid is empty")
            seed = int(d["seed"])
            boot = None
            if bs["enabled"]:
                boot = BootstrapConfig(
                    n_draws=int(bs["n_draws"]), alpha=float(bs["alpha"]),
                    block_constant=float(bs["block_constant"]), seed=seed,
                    block_length=None if bs["block_length"] is None
                    else int(bs["block_length"]))
            par = d["parallelism"]
            par = default_parallelism() if par is None else int(par)
            sc = d["schema"]
            schema = LongCsvSchema(
                id=str(sc["id"]), time=str(sc["time"]), u=str(sc["u"]),
                y=str(sc["y"]),
                x=None if sc["x"] is None else tuple(str(c) for c in sc["x"]),
                delimiter=str(sc["delimiter"]))
            fit = FitOptions(max_iterations=int(d["fit"]["max_iterations"]),
                             tolerance=float(d["fit"]["tolerance"]),
                             init=Init(d["fit"]["init"]))
            cfg = cls(model=model, factor_mode=fac["mode"], r=int(fac["r"]),
                      r_max=int(fac["r_max"]), knot_mode=kn["mode"], l=int(kn["l"]),
                      knot_grid=grid, degree=int(d["degree"]),
                      grid_size=int(d["grid_size"]), seed=seed,
                      parallelism=max(1, par), bootstrap=boot, fit=fit,
                      schema=schema)
        except ConfigError:
            raise
        except (InvalidSpec, KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"invalid configuration: {exc}") from exc
        if cfg.r < 0 or cfg.r_max < 0 or cfg.l < 0 or cfg.degree < 0:
            raise ConfigError("r, r_max, l and degree must be nonnegative")
        if cfg.grid_size < 2:
            raise ConfigError("grid_size must be >= 2")
        return cfg

    def as_dict(self) -> dict:
        """Echo of the effective settings for the summary file."""
        return {
            "model": self.model,
            "factors": {"mode": self.factor_mode, "r": self.r, "r_max": self.r_max},
            "knots": {"mode": self.knot_mode, "l": self.l, "grid": list(self.knot_grid)},
            "degree": self.degree,
            "grid_size": self.grid_size,
            "seed": self.seed,
            "bootstrap": None if self.bootstrap is None else {
                "n_draws": self.bootstrap.n_draws, "alpha": self.bootstrap.alpha,
                "block_constant": self.bootstrap.block_constant,
                "block_length": self.bootstrap.block_length},
            "fit": {"max_iterations": self.fit.max_iterations,
                    "tolerance": self.fit.tolerance, "init": self.fit.init.value},
        }
