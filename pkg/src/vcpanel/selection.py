"""Choice of the interior-knot count and of the number of factors."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bspline import make_basis, SplineSpec
from .design import build_design
from .exceptions import AllDegenerate, EmptyGrid, InvalidSpec, TooSmall
from .ife import FitOptions, _project_panel, fit_ife
from .panel_data import PanelData

EXACT_FIT_TOL = 1e-14


def common_bases(panel: PanelData, interior_knots: int, degree: int = 3):
    """One basis per regressor, all with the same knots on the panel support."""
    basis = make_basis(SplineSpec(degree, interior_knots, panel.support))
    return [basis] * panel.n_regressors


@dataclass(frozen=True)
class CvResult:
    candidate_l: tuple[int, ...]
    scores: tuple[float, ...]
    best_l: int


@dataclass(frozen=True)
class BicResult:
    candidate_r: tuple[int, ...]
    scores: tuple[float, ...]
    v_values: tuple[float, ...]
    exact_fit: tuple[bool, ...]
    best_r: int
    penalty: float


def cv_score(panel: PanelData, l_interior: int, r: int,
             opts: FitOptions | None = None, *, degree: int = 3,
             warm_start: bool = True) -> float:
    """Leave-one-subject-out prediction error through each fold's factor space.

    For every subject i the model is refit without i; the score adds
    ``(Y_i - R_i g)' M_F (Y_i - R_i g)`` with the fold's ``g`` and ``F``.
    """
    n = panel.n_subjects
    if n < 3:
        raise TooSmall("leave-one-subject-out CV needs N >= 3")
    bases = common_bases(panel, l_interior, degree)
    design = build_design(panel, bases)
    total = 0.0
    f_prev = None
    for i in range(n):
        keep = np.arange(n) != i
        fold = panel.drop_subject(i)
        fold_design = type(design)(design.r[keep], design.offsets)
        fit = fit_ife(fold, bases, r, opts, design=fold_design,
                      init_f=f_prev if warm_start else None)
        if r > 0:
            f_prev = fit.factors.f
        e = panel.y[i] - design.r[i] @ fit.gamma
        total += float(np.sum(_project_panel(fit.factors.f, e[None, :]) ** 2))
    return total


def select_knots(panel: PanelData, l_grid, r: int, opts: FitOptions | None = None,
                 *, degree: int = 3) -> CvResult:
    """Minimize the CV score over a grid of common interior-knot counts.

    Ties go to the smaller count.
    """
    grid = sorted({int(l) for l in l_grid})
    if not grid:
        raise EmptyGrid("knot grid is empty")
    scores = [cv_score(panel, l, r, opts, degree=degree) for l in grid]
    best = grid[int(np.argmin(scores))]
    return CvResult(tuple(grid), tuple(scores), best)


def _trailing_mass(e: np.ndarray, r: int) -> float:
    n, t = e.shape
    small = e.T @ e if t <= n else e @ e.T
    vals = np.linalg.eigvalsh(small)[::-1]
    return float(max(np.trace(small) - vals[:r].sum(), 0.0) / (n * t))


def v_of_r(panel: PanelData, bases, r: int, opts: FitOptions | None = None,
           *, design=None) -> float:
    """Eigenvalue mass of the residual outer-product matrix beyond the r-th.

    The residuals are ``Y_i - R_i g_r`` where ``g_r`` is fitted with r factors.
    """
    if r < 0 or r > min(panel.n_subjects, panel.n_periods):
        raise InvalidSpec(f"factor count {r} outside [0, min(N, T)]")
    design = design if design is not None else build_design(panel, list(bases))
    fit = fit_ife(panel, bases, r, opts, design=design)
    return _trailing_mass(panel.y - design.r @ fit.gamma, r)


def bic_penalty(n: int, t: int, q: int) -> float:
    """Per-factor complexity charge ``(N+T) q / (NT) * ln(NT / (N+T))``."""
    return (n + t) * q / (n * t) * np.log(n * t / (n + t))


def bic_factor_number(panel: PanelData, bases, r_max: int,
                      opts: FitOptions | None = None) -> BicResult:
    """``argmin_r ln V(r) + r * penalty`` over ``0..r_max``.

    A candidate whose V is numerically zero is an exact fit; its log is
    floored at ``ln(EXACT_FIT_TOL * mean(Y^2))`` and it is flagged.
    """
    n, t = panel.n_subjects, panel.n_periods
    if r_max < 0 or r_max > min(n, t):
        raise InvalidSpec(f"r_max={r_max} outside [0, min(N, T)]")
    bases = list(bases)
    design = build_design(panel, bases)
    pen = bic_penalty(n, t, design.q)
    floor = EXACT_FIT_TOL * max(float(np.mean(panel.y ** 2)), np.finfo(float).tiny)
    cands = tuple(range(r_max + 1))
    vs, exact, scores = [], [], []
    for r in cands:
        v = v_of_r(panel, bases, r, opts, design=design)
        vs.append(v)
        exact.append(v <= floor)
        scores.append(float(np.log(max(v, floor)) + r * pen))
    if all(exact):
        raise AllDegenerate("every candidate fits the data exactly", exact_r=0)
    best = cands[int(np.argmin(scores))]
    return BicResult(cands, tuple(scores), tuple(vs), tuple(exact), best, pen)
