"""Balanced panel container and its validation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import NonFinite, ShapeMismatch, SupportViolation, TooSmall

SUPPORT_TOL = 1e-12


@dataclass(frozen=True)
class Support:
    u_min: float
    u_max: float

    def __post_init__(self):
        if not (np.isfinite(self.u_min) and np.isfinite(self.u_max)):
            raise NonFinite("support bounds must be finite")
        if not self.u_min < self.u_max:
            raise SupportViolation(
                f"degenerate support [{self.u_min}, {self.u_max}]")

    @property
    def width(self) -> float:
        return self.u_max - self.u_min


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.float64, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class PanelData:
    """Balanced N x T panel with p regressors and an index variable.

    Attributes
    ----------
    y : ndarray, shape (N, T)
    x : ndarray, shape (N, T, p)
    u : ndarray, shape (N, T)
    support : Support
    """

    y: np.ndarray
    x: np.ndarray
    u: np.ndarray
    support: Support

    @property
    def n_subjects(self) -> int:
        return self.y.shape[0]

    @property
    def n_periods(self) -> int:
        return self.y.shape[1]

    @property
    def n_regressors(self) -> int:
        return self.x.shape[2]

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.n_subjects, self.n_periods, self.n_regressors

    def __eq__(self, other):
        if not isinstance(other, PanelData):
            return NotImplemented
        return (self.support == other.support
                and np.array_equal(self.y, other.y)
                and np.array_equal(self.x, other.x)
                and np.array_equal(self.u, other.u))

    def __hash__(self):
        return hash((self.shape, self.support))

    def with_y(self, y: np.ndarray) -> "PanelData":
        """Same regressors and index, new response."""
        y = np.asarray(y, dtype=np.float64)
        if y.shape != self.y.shape:
            raise ShapeMismatch(f"y has shape {y.shape}, expected {self.y.shape}")
        if not np.all(np.isfinite(y)):
            raise NonFinite("y contains NaN or Inf")
        return PanelData(_frozen(y), self.x, self.u, self.support)

    def drop_subject(self, i: int) -> "PanelData":
        keep = np.arange(self.n_subjects) != i
        return PanelData(_frozen(self.y[keep]), _frozen(self.x[keep]),
                         _frozen(self.u[keep]), self.support)

    def subset(self, rows) -> "PanelData":
        rows = np.asarray(rows)
        return PanelData(_frozen(self.y[rows]), _frozen(self.x[rows]),
                         _frozen(self.u[rows]), self.support)

    def save_npz(self, path) -> None:
        np.savez(path, y=self.y, x=self.x, u=self.u,
                 support=np.array([self.support.u_min, self.support.u_max]))

    @classmethod
    def load_npz(cls, path) -> "PanelData":
        with np.load(path) as f:
            lo, hi = f["support"]
            return validate_panel(f["y"], f["x"], f["u"],
                                  support=Support(float(lo), float(hi)))


def validate_panel(y, x, u, support: Support | tuple | None = None) -> PanelData:
    """Check shapes and values and return an immutable :class:`PanelData`.

    ``x`` may be given as (N, T) for a single regressor. When ``support``
    is omitted it is taken as the empirical range of ``u``.
    """
    y = np.asarray(y, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    u = np.asarray(u, dtype=np.float64)
    if y.ndim != 2:
        raise ShapeMismatch(f"y must be 2-d (N, T), got shape {y.shape}")
    if x.ndim == 2:
        x = x[:, :, None]
    if x.ndim != 3:
        raise ShapeMismatch(f"x must be 3-d (N, T, p), got shape {x.shape}")
    if x.shape[:2] != y.shape or u.shape != y.shape:
        raise ShapeMismatch(
            f"inconsistent shapes: y {y.shape}, x {x.shape}, u {u.shape}")
    if x.shape[2] < 1:
        raise ShapeMismatch("at least one regressor is required")
    n, t = y.shape
    if n < 2 or t < 2:
        raise TooSmall(f"need N >= 2 and T >= 2, got N={n}, T={t}")
    for name, a in (("y", y), ("x", x), ("u", u)):
        if not np.all(np.isfinite(a)):
            raise NonFinite(f"{name} contains NaN or Inf")

    if support is None:
        support = Support(float(u.min()), float(u.max()))
    elif not isinstance(support, Support):
        support = Support(float(support[0]), float(support[1]))
    tol = SUPPORT_TOL * max(1.0, support.width)
    if u.min() < support.u_min - tol or u.max() > support.u_max + tol:
        raise SupportViolation(
            f"u range [{u.min()}, {u.max()}] outside declared support "
            f"[{support.u_min}, {support.u_max}]")
    return PanelData(_frozen(y), _frozen(x), _frozen(u), support)


def revalidate(panel: PanelData) -> PanelData:
    return validate_panel(panel.y, panel.x, panel.u, panel.support)
