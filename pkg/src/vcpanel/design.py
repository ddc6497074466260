"""Regression design combining regressors with their spline bases."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bspline import Basis, eval_basis_matrix
from .exceptions import LengthMismatch
from .panel_data import PanelData


@dataclass(frozen=True, eq=False)
class DesignMatrices:
    """Stacked per-subject designs.

    ``r[i]`` is the T x q matrix for subject i; columns are grouped by
    coefficient, block k occupying ``r[..., offsets[k]:offsets[k+1]]``.
    """

    r: np.ndarray
    offsets: tuple[int, ...]

    @property
    def q(self) -> int:
        return self.r.shape[2]

    def block(self, k: int) -> slice:
        return slice(self.offsets[k], self.offsets[k + 1])

    def stacked(self) -> np.ndarray:
        """(N*T) x q matrix in subject-major order."""
        return self.r.reshape(-1, self.q)

    def fitted(self, gamma) -> np.ndarray:
        return self.r @ np.asarray(gamma, dtype=np.float64)


def block_offsets(bases) -> tuple[int, ...]:
    return tuple(np.concatenate([[0], np.cumsum([b.n_functions for b in bases])])
                 .astype(int).tolist())


def build_row(x_it, u_it: float, bases) -> np.ndarray:
    x_it = np.atleast_1d(np.asarray(x_it, dtype=np.float64))
    if len(bases) != x_it.size:
        raise LengthMismatch(f"{x_it.size} regressors but {len(bases)} bases")
    return np.concatenate([x_it[k] * eval_basis_matrix(b, np.asarray(u_it))
                           for k, b in enumerate(bases)])


def build_design(panel: PanelData, bases: list[Basis]) -> DesignMatrices:
    if len(bases) != panel.n_regressors:
        raise LengthMismatch(
            f"{panel.n_regressors} regressors but {len(bases)} bases")
    blocks = [panel.x[:, :, k, None] * eval_basis_matrix(b, panel.u)
              for k, b in enumerate(bases)]
    r = np.concatenate(blocks, axis=2)
    r.setflags(write=False)
    return DesignMatrices(r, block_offsets(bases))


def coefficient_curves(bases, gamma, grid) -> np.ndarray:
    """Evaluate every coefficient function on ``grid``; shape (p, len(grid))."""
    gamma = np.asarray(gamma, dtype=np.float64)
    offs = block_offsets(bases)
    if gamma.shape != (offs[-1],):
        raise LengthMismatch(f"gamma has length {gamma.size}, expected {offs[-1]}")
    return np.stack([eval_basis_matrix(b, grid) @ gamma[offs[k]:offs[k + 1]]
                     for k, b in enumerate(bases)])
