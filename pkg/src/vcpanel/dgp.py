"""Simulation designs with interactive or additive fixed effects."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .panel_data import PanelData, Support, validate_panel

NOISE_SD = 2.0
SIM_SUPPORT = Support(0.0, 1.0)


def beta1(u):
    u = np.asarray(u, dtype=np.float64)
    return 2.0 - 5.0 * u + 5.0 * u ** 2


def beta2(u):
    return np.sin(np.asarray(u, dtype=np.float64) * np.pi)


BETA_FNS = (beta1, beta2)


@dataclass(frozen=True, eq=False)
class DgpTruth:
    """True coefficient functions and effects behind a simulated panel.

    For the interactive design ``f``/``lam`` hold the factors and loadings;
    for the additive design ``mu``/``xi`` hold the two-way effects.
    """

    beta_fns: tuple
    eps: np.ndarray
    noise_sd: float = NOISE_SD
    f: np.ndarray | None = None
    lam: np.ndarray | None = None
    mu: np.ndarray | None = None
    xi: np.ndarray | None = None

    def beta(self, u) -> np.ndarray:
        """True coefficients at ``u``, shape (p,) + u.shape."""
        return np.stack([fn(u) for fn in self.beta_fns])

    def effects(self) -> np.ndarray:
        if self.f is not None:
            return self.lam @ self.f.T
        return self.mu[:, None] + self.xi[None, :]


def _index_variable(n, t, rng) -> np.ndarray:
    # omega_{i,0} is drawn from the same law to supply the first lag
    omega = rng.uniform(0.0, 0.5, size=(n, t + 1))
    return omega[:, 1:] + omega[:, :-1]


def _assemble(x2, u, effects, rng, noise_sd, beta_fns):
    n, t = u.shape
    eps = noise_sd * rng.standard_normal((n, t))
    y = beta_fns[0](u) + x2 * beta_fns[1](u) + effects + eps
    x = np.stack([np.ones((n, t)), x2], axis=2)
    return validate_panel(y, x, u, support=SIM_SUPPORT), eps


def gen_interactive_dgp(n: int, t: int, rng: np.random.Generator, *,
                        noise_sd: float = NOISE_SD, beta_fns=BETA_FNS):
    """Two-factor design with regressors correlated with the effects.

    ``X_it = 1 + lambda_i'F_t + iota'lambda_i + iota'F_t + eta_it``; the first
    regressor is the constant carrying ``beta_1``.
    """
    lam = rng.standard_normal((n, 2))
    f = rng.standard_normal((t, 2))
    eta = rng.standard_normal((n, t))
    u = _index_variable(n, t, rng)
    common = lam @ f.T
    x2 = 1.0 + common + lam.sum(axis=1)[:, None] + f.sum(axis=1)[None, :] + eta
    panel, eps = _assemble(x2, u, common, rng, noise_sd, beta_fns)
    for a in (lam, f):
        a.setflags(write=False)
    return panel, DgpTruth(tuple(beta_fns), eps, noise_sd, f=f, lam=lam)


def _sum_zero(k, rng) -> np.ndarray:
    v = np.empty(k)
    v[1:] = rng.standard_normal(k - 1)
    v[0] = -v[1:].sum()
    return v


def gen_additive_dgp(n: int, t: int, rng: np.random.Generator, *,
                     noise_sd: float = NOISE_SD, beta_fns=BETA_FNS):
    """Two-way additive effects, ``X_it = 2 + 2 mu_i + 2 xi_t + eta_it``."""
    mu = _sum_zero(n, rng)
    xi = _sum_zero(t, rng)
    eta = rng.standard_normal((n, t))
    u = _index_variable(n, t, rng)
    x2 = 2.0 + 2.0 * mu[:, None] + 2.0 * xi[None, :] + eta
    panel, eps = _assemble(x2, u, mu[:, None] + xi[None, :], rng, noise_sd,
                           beta_fns)
    return panel, DgpTruth(tuple(beta_fns), eps, noise_sd, mu=mu, xi=xi)


def amse(estimated, truth: DgpTruth, panel: PanelData) -> np.ndarray:
    """Mean squared error of each coefficient function over the observed U.

    ``estimated`` maps an array of index values to a (p, ...) array of
    estimated coefficients, e.g. ``fit.curves``.
    """
    u = panel.u.ravel()
    err = np.asarray(estimated(u)) - truth.beta(u)
    return np.mean(err ** 2, axis=1)
