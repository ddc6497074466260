"""Residual block bootstrap for pointwise confidence bands.

Residual columns (whole time periods) are resampled in non-overlapping
blocks so that serial dependence within a block and cross-sectional
dependence within a period are both preserved.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .design import build_design
from .exceptions import BadBlockLength, InvalidSpec, TooManyFailures, VcPanelError
from .ife import FitOptions, IfeFit, fit_ife
from .panel_data import PanelData

MAX_FAILURE_SHARE = 0.10


@dataclass(frozen=True)
class BootstrapConfig:
    n_draws: int = 200
    alpha: float = 0.05
    block_constant: float = 1.0
    seed: int = 0
    block_length: int | None = None

    def __post_init__(self):
        if self.n_draws < 2:
            raise InvalidSpec("need at least 2 bootstrap draws")
        if not 0 < self.alpha < 1:
            raise InvalidSpec("alpha must lie in (0, 1)")
        if not self.block_constant > 0:
            raise InvalidSpec("block constant must be positive")


@dataclass(frozen=True, eq=False)
class BootstrapBands:
    grid: np.ndarray
    point: np.ndarray
    variance: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    draws_used: int
    n_failed: int
    n_nonconverged: int
    block_length: int
    z: float

    def covers(self, values) -> np.ndarray:
        """Boolean (p, G) mask of grid points where ``values`` lie in the band."""
        values = np.asarray(values)
        return (self.lower <= values) & (values <= self.upper)


def default_block_length(t: int, c: float = 1.0) -> int:
    if t < 1 or not c > 0:
        raise InvalidSpec("need T >= 1 and c > 0")
    return max(1, int(np.floor(c * t ** (1.0 / 3.0) + 0.5)))


def block_resample(residuals, block_len: int, rng: np.random.Generator) -> np.ndarray:
    """Resample whole columns of ``residuals`` in non-overlapping blocks.

    Columns are cut into ``ceil(T / l)`` consecutive blocks. That many
    blocks are drawn with replacement from the full-length ones, their
    columns concatenated in order and the result truncated to T columns.
    """
    e = np.asarray(residuals, dtype=np.float64)
    t = e.shape[1]
    if not 1 <= block_len <= t:
        raise BadBlockLength(f"block length {block_len} outside [1, {t}]")
    n_blocks = -(-t // block_len)
    n_full = t // block_len
    starts = block_len * rng.integers(0, n_full, size=n_blocks)
    cols = (starts[:, None] + np.arange(block_len)[None, :]).ravel()[:t]
    return e[:, cols]


def _draw_stream(seed: int, b: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(b,)))


def _one_draw(args):
    panel, mean, resid, bases, r, opts, block_len, seed, b, grid = args
    rng = _draw_stream(seed, b)
    y_star = mean + block_resample(resid, block_len, rng)
    try:
        fit = fit_ife(panel.with_y(y_star), bases, r, opts)
    except VcPanelError as exc:
        return b, None, False, repr(exc)
    return b, fit.curves(grid), fit.converged, None


def _run_draws(tasks, n_jobs):
    if n_jobs is None or n_jobs <= 1:
        return [_one_draw(a) for a in tasks]
    with ProcessPoolExecutor(max_workers=n_jobs) as pool:
        return list(pool.map(_one_draw, tasks, chunksize=max(1, len(tasks) // (4 * n_jobs))))


def bootstrap_bands(panel: PanelData, fit: IfeFit, bases, cfg: BootstrapConfig,
                    grid, opts: FitOptions | None = None, *,
                    n_jobs: int | None = 1) -> BootstrapBands:
    """Pointwise normal-quantile bands from refits on block-resampled residuals.

    Every draw re-estimates gamma, F and Lambda with ``fit.r`` factors.
    Draws that do not converge are kept and counted; draws that raise are
    dropped, and more than 10% of those aborts the call.
    """
    bases = list(bases)
    grid = np.asarray(grid, dtype=np.float64)
    design = build_design(panel, bases)
    mean = design.r @ fit.gamma + fit.factors.common_component()
    resid = panel.y - mean
    t = panel.n_periods
    block_len = cfg.block_length or default_block_length(t, cfg.block_constant)
    if not 1 <= block_len <= t:
        raise BadBlockLength(f"block length {block_len} outside [1, {t}]")

    tasks = [(panel, mean, resid, bases, fit.r, opts, block_len, cfg.seed, b, grid)
             for b in range(cfg.n_draws)]
    results = sorted(_run_draws(tasks, n_jobs), key=lambda res: res[0])
    curves = [c for _, c, _, _ in results if c is not None]
    n_failed = cfg.n_draws - len(curves)
    if n_failed > MAX_FAILURE_SHARE * cfg.n_draws:
        raise TooManyFailures(f"{n_failed} of {cfg.n_draws} bootstrap refits failed")
    if len(curves) < 2:
        raise TooManyFailures("fewer than two successful bootstrap refits")
    n_nonconv = sum(1 for _, c, ok, _ in results if c is not None and not ok)

    draws = np.stack(curves)
    variance = draws.var(axis=0, ddof=1)
    point = fit.curves(grid)
    z = float(stats.norm.ppf(1.0 - cfg.alpha / 2.0))
    half = z * np.sqrt(variance)
    return BootstrapBands(grid=grid, point=point, variance=variance,
                          lower=point - half, upper=point + half,
                          draws_used=len(curves), n_failed=n_failed,
                          n_nonconverged=n_nonconv, block_length=block_len, z=z)
