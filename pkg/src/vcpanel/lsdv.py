"""Least-squares dummy-variable estimator for additive fixed effects.

Under ``Y_it = X_it' beta(U_it) + mu_i + xi_t + eps_it`` with sum-zero
``mu`` and ``xi``, the effects are removed by the projector

    Gamma = I - (1/T) I_N (x) 1 1' - (1/N) 1 1' (x) I_T + (2/NT) 1 1'

which is applied here as a double-demeaning pass over the N x T layout.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .design import DesignMatrices, build_design, coefficient_curves
from .exceptions import LengthMismatch
from .ife import _lstsq_qr
from .panel_data import PanelData


@dataclass(frozen=True, eq=False)
class LsdvFit:
    gamma: np.ndarray
    mu: np.ndarray
    xi: np.ndarray
    residuals: np.ndarray
    bases: tuple = ()

    def curves(self, grid) -> np.ndarray:
        return coefficient_curves(self.bases, self.gamma, grid)

    @property
    def objective(self) -> float:
        return float(np.sum(self.residuals ** 2))


def _double_demean(a: np.ndarray) -> np.ndarray:
    # a has shape (N, T, ...); Gamma acts on the first two axes
    row = a.mean(axis=1, keepdims=True)
    col = a.mean(axis=0, keepdims=True)
    grand = a.mean(axis=(0, 1), keepdims=True)
    return a - row - col + 2.0 * grand


def gamma_projector_apply(v, n: int, t: int) -> np.ndarray:
    """Apply the additive-effects projector to a subject-major NT-vector."""
    v = np.asarray(v, dtype=np.float64)
    if v.shape[0] != n * t:
        raise LengthMismatch(f"vector of length {v.shape[0]} but N*T = {n * t}")
    tail = v.shape[1:]
    return _double_demean(v.reshape((n, t) + tail)).reshape(v.shape)


def fit_lsdv(panel: PanelData, bases, *, design: DesignMatrices | None = None
             ) -> LsdvFit:
    """Estimate ``gamma`` from ``(R' Gamma R)^-1 R' Gamma Y``, then the effects.

    The effects satisfy ``sum(mu) = 0`` and ``sum(xi) = 0``; ``xi`` is the
    time-mean of ``Y - R gamma`` net of its grand mean, and ``mu`` the
    subject-mean of what remains after removing ``xi``.
    """
    bases = list(bases)
    design = design if design is not None else build_design(panel, bases)
    a = _double_demean(design.r).reshape(-1, design.q)
    b = _double_demean(panel.y).ravel()
    gamma = _lstsq_qr(a, b)

    e = panel.y - design.r @ gamma
    xi = e.mean(axis=0) - e.mean()
    e_net = e - xi[None, :]
    mu = e_net.mean(axis=1) - e_net.mean()
    resid = e - mu[:, None] - xi[None, :]
    for arr in (gamma, mu, xi, resid):
        arr.setflags(write=False)
    return LsdvFit(gamma, mu, xi, resid, tuple(bases))
