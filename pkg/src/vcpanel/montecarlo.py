"""Replication harness comparing the IE, IFE and LSDVE estimators."""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .design import build_design
from .dgp import amse, gen_additive_dgp, gen_interactive_dgp
from .exceptions import ConfigError, VcPanelError
from .ife import FitOptions, fit_ife, fit_infeasible
from .lsdv import fit_lsdv
from .selection import common_bases, select_knots

log = logging.getLogger(__name__)

ESTIMATORS = ("IE", "IFE", "LSDVE")
DGPS = {"interactive": gen_interactive_dgp, "additive": gen_additive_dgp}
FAILURE_FLAG_SHARE = 0.02
TABLE_GRID = ((100, 15), (100, 30), (100, 60), (100, 100), (60, 100), (30, 100),
              (15, 100))


@dataclass(frozen=True)
class McSpec:
    dgp: str = "interactive"
    sizes: tuple = ((100, 15),)
    estimators: tuple = ESTIMATORS
    replications: int = 200
    base_seed: int = 20190101
    r: int = 2
    knots: int | str = 4
    knot_grid: tuple = (0, 1, 2, 3, 4, 5, 6)
    degree: int = 3
    noise_sd: float = 2.0
    fit_options: FitOptions = field(default_factory=FitOptions)

    def __post_init__(self):
        if self.dgp not in DGPS:
            raise ConfigError(f"unknown dgp {self.dgp!r}; expected one of {sorted(DGPS)}")
        bad = set(self.estimators) - set(ESTIMATORS)
        if bad or not self.estimators:
            raise ConfigError(f"unknown estimators {sorted(bad)}")
        if self.replications < 1:
            raise ConfigError("replications must be >= 1")
        if self.knots != "cv" and (not isinstance(self.knots, int) or self.knots < 0):
            raise ConfigError("knots must be a nonnegative integer or 'cv'")
        sizes = tuple((int(n), int(t)) for n, t in self.sizes)
        if not sizes or any(n < 2 or t < 2 for n, t in sizes):
            raise ConfigError("every (N, T) needs N >= 2 and T >= 2")
        object.__setattr__(self, "sizes", sizes)
        object.__setattr__(self, "estimators", tuple(self.estimators))


@dataclass(frozen=True)
class McReport:
    """Mean AMSE per coefficient and panel size for one estimator."""

    estimator: str
    dgp: str
    sizes: tuple
    mean_amse: np.ndarray        # (n_sizes, p)
    std_error: np.ndarray        # Monte Carlo standard errors, same shape
    replications: tuple          # successful replications per size
    failures: tuple
    nonconverged: tuple
    base_seed: int

    @property
    def flagged(self) -> tuple:
        total = [s + f for s, f in zip(self.replications, self.failures)]
        return tuple(f > FAILURE_FLAG_SHARE * tot for f, tot in zip(self.failures, total))

    def cell(self, n: int, t: int) -> np.ndarray:
        return self.mean_amse[self.sizes.index((n, t))]


def replication_seed(base_seed: int, n: int, t: int, rep: int) -> np.random.SeedSequence:
    """Seed for one replication; independent of the order sizes are listed."""
    return np.random.SeedSequence(base_seed, spawn_key=(n, t, rep))


def _true_factors(truth, t):
    if truth.f is not None:
        return truth.f, False
    return np.column_stack([np.ones(t), truth.xi]), True


def run_replication(spec: McSpec, n: int, t: int, rep: int) -> dict:
    """Simulate one panel and fit the requested estimators.

    Returns ``{label: (amse array or None, converged flag, error text)}``.
    """
    rng = np.random.default_rng(replication_seed(spec.base_seed, n, t, rep))
    panel, truth = DGPS[spec.dgp](n, t, rng, noise_sd=spec.noise_sd)
    out = {}
    try:
        if spec.knots == "cv":
            l = select_knots(panel, spec.knot_grid, spec.r, spec.fit_options,
                             degree=spec.degree).best_l
        else:
            l = spec.knots
        bases = common_bases(panel, l, spec.degree)
        design = build_design(panel, bases)
    except VcPanelError as exc:
        return {est: (None, False, repr(exc)) for est in spec.estimators}
    for est in spec.estimators:
        try:
            if est == "IE":
                f_true, additive = _true_factors(truth, t)
                fit = fit_infeasible(panel, bases, f_true, design=design,
                                     constant_sum_zero=additive)
                ok = True
            elif est == "IFE":
                fit = fit_ife(panel, bases, spec.r, spec.fit_options, design=design)
                ok = fit.converged
            else:
                fit = fit_lsdv(panel, bases, design=design)
                ok = True
            out[est] = (amse(fit.curves, truth, panel), ok, None)
        except VcPanelError as exc:
            out[est] = (None, False, repr(exc))
    return out


def _task(args):
    spec, n, t, rep = args
    return run_replication(spec, n, t, rep)


def run_monte_carlo(spec: McSpec, *, n_jobs: int | None = 1) -> list[McReport]:
    """Run every replication of ``spec`` and reduce in replication order."""
    tasks = [(spec, n, t, rep) for n, t in spec.sizes for rep in range(spec.replications)]
    if n_jobs is None or n_jobs <= 1:
        results = [_task(a) for a in tasks]
    else:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            results = list(pool.map(_task, tasks,
                                    chunksize=max(1, len(tasks) // (4 * n_jobs))))

    reports = []
    k = spec.replications
    for est in spec.estimators:
        means, ses, used, failed, nonconv = [], [], [], [], []
        for s in range(len(spec.sizes)):
            block = [res[est] for res in results[s * k:(s + 1) * k]]
            vals = [a for a, _, _ in block if a is not None]
            nfail = len(block) - len(vals)
            if nfail:
                log.warning("%s at %s: %d of %d replications failed", est,
                            spec.sizes[s], nfail, k)
            if vals:
                arr = np.stack(vals)
                means.append(arr.mean(axis=0))
                ses.append(arr.std(axis=0, ddof=1) / np.sqrt(len(vals))
                           if len(vals) > 1 else np.full(arr.shape[1], np.nan))
            else:
                means.append(np.full(2, np.nan))
                ses.append(np.full(2, np.nan))
            used.append(len(vals))
            failed.append(nfail)
            nonconv.append(sum(1 for a, ok, _ in block if a is not None and not ok))
        reports.append(McReport(est, spec.dgp, spec.sizes, np.array(means),
                                np.array(ses), tuple(used), tuple(failed),
                                tuple(nonconv), spec.base_seed))
    return reports


def table_rows(reports: list[McReport]) -> list[dict]:
    """Table-shaped rows: one per (N, T) with an AMSE column per estimator and k."""
    rows = []
    sizes = reports[0].sizes
    for s, (n, t) in enumerate(sizes):
        row = {"N": n, "T": t}
        for rep in reports:
            for k in range(rep.mean_amse.shape[1]):
                row[f"{rep.estimator}_amse_beta{k + 1}"] = float(rep.mean_amse[s, k])
        rows.append(row)
    return rows


