"""Spline estimation of varying coefficients under interactive fixed effects.

The model is ``Y_i = R_i gamma + F lambda_i + eps_i`` with ``F'F/T = I_r`` and
``Lambda'Lambda`` diagonal. ``fit_ife`` alternates the least-squares step for
``gamma`` given the factor space with the principal-components step for
``F`` given ``gamma`` until the concentrated objective stops decreasing.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.linalg import solve_triangular

from .design import DesignMatrices, build_design, coefficient_curves
from .exceptions import EigenFailure, InvalidSpec, NotNormalized, SingularDesign
from .panel_data import PanelData

NORMALIZATION_TOL = 1e-6
RCOND_MIN = 1e-12


class Init(str, Enum):
    PCA_OF_Y = "pca"
    GAMMA_FIRST = "gamma_first"


@dataclass(frozen=True)
class FitOptions:
    max_iterations: int = 500
    tolerance: float = 1e-8
    init: Init = Init.PCA_OF_Y

    def __post_init__(self):
        if not self.tolerance > 0:
            raise InvalidSpec("tolerance must be positive")
        if self.max_iterations < 1:
            raise InvalidSpec("max_iterations must be >= 1")
        object.__setattr__(self, "init", Init(self.init))


@dataclass(frozen=True, eq=False)
class FactorStructure:
    f: np.ndarray
    lam: np.ndarray

    @property
    def r(self) -> int:
        return self.f.shape[1]

    def common_component(self) -> np.ndarray:
        """N x T matrix with entries ``lambda_i' F_t``."""
        return self.lam @ self.f.T


@dataclass(frozen=True, eq=False)
class IfeFit:
    gamma: np.ndarray
    factors: FactorStructure
    residuals: np.ndarray
    objective: float
    iterations: int
    converged: bool
    v_nt: np.ndarray
    bases: tuple = ()
    objective_path: np.ndarray = field(default_factory=lambda: np.empty(0))

    @property
    def r(self) -> int:
        return self.factors.r

    def curves(self, grid) -> np.ndarray:
        """Estimated coefficient functions on ``grid``, shape (p, len(grid))."""
        return coefficient_curves(self.bases, self.gamma, grid)


def _empty_factors(t: int) -> np.ndarray:
    return np.zeros((t, 0))


def _check_normalized(f: np.ndarray) -> None:
    t, r = f.shape
    if r == 0:
        return
    dev = np.abs(f.T @ f / t - np.eye(r)).max()
    if dev > NORMALIZATION_TOL:
        raise NotNormalized(f"F'F/T deviates from identity by {dev:.3g}")


def normalize_factors(f) -> np.ndarray:
    """Orthonormalize the columns of ``f`` so that ``F'F/T = I``.

    The column space is preserved; only it matters for the projector.
    """
    f = np.asarray(f, dtype=np.float64)
    if f.ndim == 1:
        f = f[:, None]
    t, r = f.shape
    if r == 0:
        return f.copy()
    q, rr = np.linalg.qr(f)
    if np.abs(np.diag(rr)).min() <= 1e-12 * np.abs(np.diag(rr)).max():
        raise NotNormalized("factor matrix is rank deficient")
    return np.sqrt(t) * q


def project_out(f, a) -> np.ndarray:
    """Apply ``M_F = I - F F'/T`` to the rows-are-time array ``a``.

    ``a`` may be T x c or a T-vector. The T x T projector is never formed.
    """
    f = np.asarray(f, dtype=np.float64)
    a = np.asarray(a, dtype=np.float64)
    if f.ndim == 1:
        f = f[:, None]
    _check_normalized(f)
    if f.shape[1] == 0:
        return a.copy()
    t = f.shape[0]
    return a - f @ (f.T @ a) / t


def _project_panel(f: np.ndarray, a: np.ndarray) -> np.ndarray:
    """``M_F`` applied along the time axis of an (N, T) or (N, T, q) array."""
    if f.shape[1] == 0:
        return a
    t = f.shape[0]
    if a.ndim == 2:
        return a - (a @ f) @ f.T / t
    coef = np.einsum("tr,itq->irq", f, a)
    return a - np.einsum("tr,irq->itq", f, coef) / t


def _lstsq_qr(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Least squares via thin QR with a reciprocal-condition guard on a'a."""
    q, rfac = np.linalg.qr(a)
    sv = np.linalg.svd(rfac, compute_uv=False)
    rcond = 0.0 if sv[0] == 0 else (sv[-1] / sv[0]) ** 2
    if not rcond >= RCOND_MIN:
        raise SingularDesign(
            f"Gram matrix is singular to working precision "
            f"(reciprocal condition {rcond:.3g})", rcond=rcond)
    return solve_triangular(rfac, q.T @ b)


def _design(panel, design_or_bases) -> DesignMatrices:
    if isinstance(design_or_bases, DesignMatrices):
        return design_or_bases
    return build_design(panel, list(design_or_bases))


def gamma_given_f(design: DesignMatrices, panel: PanelData, f) -> np.ndarray:
    """Least-squares spline coefficients after projecting out the factors.

    Solves ``(sum R_i' M_F R_i) gamma = sum R_i' M_F Y_i`` by QR of the
    stacked ``M_F R_i`` (M_F is a symmetric idempotent).
    """
    f = np.asarray(f, dtype=np.float64)
    if f.ndim == 1:
        f = f[:, None]
    _check_normalized(f)
    a = _project_panel(f, design.r).reshape(-1, design.q)
    b = _project_panel(f, panel.y).ravel()
    return _lstsq_qr(a, b)


def _residual_matrix(design: DesignMatrices, panel: PanelData, gamma) -> np.ndarray:
    return panel.y - design.r @ gamma


def _leading_eigen(e: np.ndarray, r: int) -> tuple[np.ndarray, np.ndarray]:
    """Leading r eigenpairs of ``E'E / (NT)`` for the N x T matrix ``E``.

    Returns (F, values) with ``F = sqrt(T) * eigenvectors``.
    """
    n, t = e.shape
    scale = n * t
    if r == 0:
        return _empty_factors(t), np.empty(0)
    if not np.any(e):
        return np.sqrt(t) * np.eye(t)[:, :r], np.zeros(r)
    try:
        if t <= n:
            vals, vecs = np.linalg.eigh(e.T @ e / scale)
            vals = vals[::-1][:r]
            vecs = vecs[:, ::-1][:, :r]
        else:
            dvals, dvecs = np.linalg.eigh(e @ e.T / scale)
            dvals = dvals[::-1][:r]
            dvecs = dvecs[:, ::-1][:, :r]
            if dvals[-1] > 1e-10 * dvals[0]:
                vals = dvals
                vecs = e.T @ dvecs
                vecs /= np.linalg.norm(vecs, axis=0)
            else:
                # dual map loses directions with ~zero eigenvalue
                vals, vecs = np.linalg.eigh(e.T @ e / scale)
                vals = vals[::-1][:r]
                vecs = vecs[:, ::-1][:, :r]
    except np.linalg.LinAlgError as exc:
        raise EigenFailure(str(exc)) from exc
    idx = np.argmax(np.abs(vecs), axis=0)
    signs = np.sign(vecs[idx, np.arange(r)])
    signs[signs == 0] = 1.0
    vecs = vecs * signs
    return np.sqrt(t) * vecs, np.maximum(vals, 0.0)


def factors_given_gamma(design: DesignMatrices, panel: PanelData, gamma, r: int):
    """Principal-components factors of the residuals ``Y_i - R_i gamma``.

    Returns ``(F, v_nt)`` where ``F'F/T = I_r`` and ``v_nt`` holds the r
    largest eigenvalues of ``(NT)^-1 sum_i e_i e_i'`` in decreasing order.
    """
    if r < 0 or r > min(panel.n_subjects, panel.n_periods):
        raise InvalidSpec(f"factor count {r} outside [0, min(N, T)]")
    e = _residual_matrix(design, panel, np.asarray(gamma, dtype=np.float64))
    return _leading_eigen(e, r)


def loadings(f, design: DesignMatrices, panel: PanelData, gamma) -> np.ndarray:
    """``lambda_i = F'(Y_i - R_i gamma) / T`` stacked into an N x r matrix."""
    f = np.asarray(f, dtype=np.float64)
    if f.ndim == 1:
        f = f[:, None]
    _check_normalized(f)
    e = _residual_matrix(design, panel, np.asarray(gamma, dtype=np.float64))
    return e @ f / panel.n_periods


def init_factors(panel: PanelData, r: int) -> np.ndarray:
    """Principal components of Y itself (gamma = 0)."""
    if r < 0 or r > min(panel.n_subjects, panel.n_periods):
        raise InvalidSpec(f"factor count {r} outside [0, min(N, T)]")
    return _leading_eigen(panel.y, r)[0]


def concentrated_objective(design, panel, gamma, f) -> float:
    """``sum_i (Y_i - R_i gamma)' M_F (Y_i - R_i gamma)``."""
    e = _residual_matrix(design, panel, np.asarray(gamma, dtype=np.float64))
    return float(np.sum(_project_panel(np.asarray(f, dtype=np.float64), e) ** 2))


def _assemble(design, panel, gamma, f, v_nt, iterations, converged, bases,
              path) -> IfeFit:
    lam = loadings(f, design, panel, gamma)
    resid = _residual_matrix(design, panel, gamma) - lam @ f.T
    for a in (gamma, f, lam, resid, v_nt):
        a.setflags(write=False)
    return IfeFit(gamma=gamma, factors=FactorStructure(f, lam), residuals=resid,
                  objective=float(np.sum(resid ** 2)), iterations=iterations,
                  converged=converged, v_nt=v_nt, bases=tuple(bases),
                  objective_path=np.asarray(path, dtype=np.float64))


def fit_ife(panel: PanelData, bases, r: int, opts: FitOptions | None = None, *,
            design: DesignMatrices | None = None,
            init_f: np.ndarray | None = None) -> IfeFit:
    """Iterative least squares for ``(gamma, F, Lambda)``.

    Parameters
    ----------
    panel : PanelData
    bases : sequence of Basis
        One basis per regressor.
    r : int
        Number of factors; 0 gives plain spline panel regression.
    opts : FitOptions, optional
    design : DesignMatrices, optional
        Prebuilt design for ``panel`` and ``bases``; built when omitted.
    init_f : ndarray, optional
        Starting factors (T x r), overriding ``opts.init``.

    Returns
    -------
    IfeFit
        Non-convergence within ``opts.max_iterations`` is reported through
        ``converged=False``, not raised.
    """
    opts = opts or FitOptions()
    bases = list(bases)
    design = design if design is not None else build_design(panel, bases)
    n, t = panel.n_subjects, panel.n_periods
    if design.q >= n * t:
        raise InvalidSpec(f"q={design.q} spline coefficients need q < NT={n * t}")
    if r < 0 or r > min(n, t):
        raise InvalidSpec(f"factor count {r} outside [0, min(N, T)]")

    if r == 0:
        f = _empty_factors(t)
        gamma = gamma_given_f(design, panel, f)
        q = concentrated_objective(design, panel, gamma, f)
        return _assemble(design, panel, gamma, f, np.empty(0), 1, True, bases, [q])

    if init_f is not None:
        f = normalize_factors(init_f)
    elif opts.init is Init.GAMMA_FIRST:
        gamma0 = gamma_given_f(design, panel, _empty_factors(t))
        f, _ = factors_given_gamma(design, panel, gamma0, r)
    else:
        f = init_factors(panel, r)

    floor = 1e-14 * float(np.sum(panel.y ** 2))
    path = []
    gamma_prev = None
    converged = False
    v_nt = np.zeros(r)
    it = 0
    for it in range(1, opts.max_iterations + 1):
        gamma = gamma_given_f(design, panel, f)
        f, v_nt = factors_given_gamma(design, panel, gamma, r)
        q = concentrated_objective(design, panel, gamma, f)
        path.append(q)
        if gamma_prev is not None:
            rel_obj = (path[-2] - q) / (path[-2] + floor)
            rel_gam = np.linalg.norm(gamma - gamma_prev) / (1.0 + np.linalg.norm(gamma))
            if rel_obj < opts.tolerance and rel_gam < opts.tolerance:
                converged = True
                break
        gamma_prev = gamma
    return _assemble(design, panel, gamma, f, v_nt, it, converged, bases, path)


def _constant_in_span(f: np.ndarray) -> bool:
    t = f.shape[0]
    if f.shape[1] == 0:
        return False
    ones = np.ones(t)
    return np.linalg.norm(project_out(f, ones)) <= 1e-8 * np.sqrt(t)


def fit_infeasible(panel: PanelData, bases, f_true, *,
                   design: DesignMatrices | None = None,
                   constant_sum_zero: bool = False) -> IfeFit:
    """Spline estimator treating the factors ``f_true`` as observed.

    ``f_true`` is renormalized so that ``F'F/T = I``. With
    ``constant_sum_zero`` the constant vector must lie in the span of
    ``f_true`` (additive effects written as factors) and the loadings on it
    are restricted to sum to zero over subjects, which keeps the level of
    a varying intercept identified.
    """
    bases = list(bases)
    design = design if design is not None else build_design(panel, bases)
    f = normalize_factors(f_true)
    t = panel.n_periods
    if f.shape[0] != t:
        raise InvalidSpec(f"f_true has {f.shape[0]} rows, expected T={t}")
    if not constant_sum_zero:
        gamma = gamma_given_f(design, panel, f)
        return _assemble(design, panel, gamma, f, _loading_spectrum(
            loadings(f, design, panel, gamma)), 1, True, bases,
            [concentrated_objective(design, panel, gamma, f)])

    if not _constant_in_span(f):
        raise InvalidSpec("constant_sum_zero requires 1_T in the span of f_true")

    def proj(a):
        return _project_panel(f, a) + a.mean(axis=(0, 1), keepdims=True)

    gamma = _lstsq_qr(proj(design.r).reshape(-1, design.q), proj(panel.y).ravel())
    e = _residual_matrix(design, panel, gamma)
    resid = proj(e)
    lam = (e - resid) @ f / t
    for a in (gamma, f, lam, resid):
        a.setflags(write=False)
    obj = float(np.sum(resid ** 2))
    return IfeFit(gamma=gamma, factors=FactorStructure(f, lam), residuals=resid,
                  objective=obj, iterations=1, converged=True,
                  v_nt=_loading_spectrum(lam), bases=tuple(bases),
                  objective_path=np.array([obj]))


def _loading_spectrum(lam: np.ndarray) -> np.ndarray:
    if lam.shape[1] == 0:
        return np.empty(0)
    vals = np.linalg.eigvalsh(lam.T @ lam / lam.shape[0])[::-1]
    return np.maximum(vals, 0.0)
