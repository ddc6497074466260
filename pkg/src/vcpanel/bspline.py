"""Clamped B-spline bases with equally spaced interior knots.

Evaluation uses the Cox-de Boor recursion in its triangular form, computing
only the ``degree + 1`` functions that are nonzero on the span containing
each point.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import InvalidSpec, LengthMismatch, OutOfSupport
from .panel_data import Support

BOUNDARY_TOL = 1e-12


@dataclass(frozen=True)
class SplineSpec:
    degree: int
    interior_knots: int
    support: Support

    @property
    def n_functions(self) -> int:
        return self.interior_knots + self.degree + 1


@dataclass(frozen=True, eq=False)
class Basis:
    knots: np.ndarray
    degree: int
    support: Support

    @property
    def n_functions(self) -> int:
        return len(self.knots) - self.degree - 1

    def __eq__(self, other):
        if not isinstance(other, Basis):
            return NotImplemented
        return (self.degree == other.degree and self.support == other.support
                and np.array_equal(self.knots, other.knots))

    def __hash__(self):
        return hash((self.degree, self.support, self.knots.tobytes()))

    def __call__(self, u):
        return eval_basis(self, u)


def make_basis(spec: SplineSpec) -> Basis:
    m, l = spec.degree, spec.interior_knots
    if int(m) != m or m < 0:
        raise InvalidSpec(f"degree must be a nonnegative integer, got {m}")
    if int(l) != l or l < 0:
        raise InvalidSpec(f"interior knot count must be >= 0, got {l}")
    lo, hi = spec.support.u_min, spec.support.u_max
    if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
        raise InvalidSpec(f"degenerate support [{lo}, {hi}]")
    inner = lo + (hi - lo) * np.arange(1, l + 1) / (l + 1)
    knots = np.concatenate([np.full(m + 1, lo), inner, np.full(m + 1, hi)])
    knots.setflags(write=False)
    return Basis(knots, int(m), spec.support)


def cubic_basis(support: Support, interior_knots: int, degree: int = 3) -> Basis:
    return make_basis(SplineSpec(degree, interior_knots, support))


def _find_span(basis: Basis, u: np.ndarray) -> np.ndarray:
    t, m = basis.knots, basis.degree
    n = basis.n_functions
    # index j with t[j] <= u < t[j+1], restricted to m <= j <= n-1
    span = np.searchsorted(t, u, side="right") - 1
    return np.clip(span, m, n - 1)


def eval_basis_matrix(basis: Basis, u) -> np.ndarray:
    """Evaluate all basis functions at each point of ``u``.

    Returns an array of shape ``u.shape + (L,)``.
    """
    u = np.asarray(u, dtype=np.float64)
    shape = u.shape
    u = u.ravel()
    lo, hi = basis.support.u_min, basis.support.u_max
    tol = BOUNDARY_TOL * max(1.0, hi - lo)
    if u.size and (not np.all(np.isfinite(u)) or u.min() < lo - tol
                   or u.max() > hi + tol):
        bad = u[~((u >= lo - tol) & (u <= hi + tol))]
        raise OutOfSupport(f"value {bad[0]!r} outside [{lo}, {hi}]")
    u = np.clip(u, lo, hi)

    t, m, n_fun = basis.knots, basis.degree, basis.n_functions
    span = _find_span(basis, u)
    npts = u.size
    vals = np.zeros((npts, m + 1))
    vals[:, 0] = 1.0
    left = np.empty((npts, m + 1))
    right = np.empty((npts, m + 1))
    for j in range(1, m + 1):
        left[:, j] = u - t[span + 1 - j]
        right[:, j] = t[span + j] - u
        saved = np.zeros(npts)
        for r in range(j):
            denom = right[:, r + 1] + left[:, j - r]
            temp = vals[:, r] / denom
            vals[:, r] = saved + right[:, r + 1] * temp
            saved = left[:, j - r] * temp
        vals[:, j] = saved

    out = np.zeros((npts, n_fun))
    cols = span[:, None] - m + np.arange(m + 1)[None, :]
    np.put_along_axis(out, cols, vals, axis=1)
    return out.reshape(shape + (n_fun,))


def eval_basis(basis: Basis, u: float) -> np.ndarray:
    """Values ``B_1(u), ..., B_L(u)`` at a single point."""
    return eval_basis_matrix(basis, np.asarray(float(u)))


def eval_function(basis: Basis, coef, u):
    """Spline with coefficients ``coef`` evaluated at ``u`` (scalar or array)."""
    coef = np.asarray(coef, dtype=np.float64)
    if coef.shape != (basis.n_functions,):
        raise LengthMismatch(
            f"expected {basis.n_functions} coefficients, got {coef.shape}")
    val = eval_basis_matrix(basis, u) @ coef
    return float(val) if np.ndim(val) == 0 else val
