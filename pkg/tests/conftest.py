import sys

import numpy as np
import pytest

from vcpanel.bspline import cubic_basis
from vcpanel.design import build_design
from vcpanel.panel_data import Support, validate_panel

UNIT = Support(0.0, 1.0)


def noiseless_ife_panel(n, t, r, rng, l=2, p=2):
    """Exact spline model with r factors and no idiosyncratic error.

    Returns (panel, bases, gamma_true, f_true, lam_true).
    """
    u = rng.uniform(0, 1, size=(n, t))
    u[0, 0], u[0, 1] = 0.0, 1.0
    x = np.ones((n, t, p))
    x[:, :, 1:] = rng.normal(1.0, 1.0, size=(n, t, p - 1))
    panel0 = validate_panel(np.zeros((n, t)), x, u, support=UNIT)
    bases = [cubic_basis(UNIT, l)] * p
    design = build_design(panel0, bases)
    gamma = rng.normal(size=design.q)
    f = rng.normal(size=(t, r))
    lam = rng.normal(size=(n, r)) * 2
    y = design.r @ gamma + lam @ f.T
    return panel0.with_y(y), bases, gamma, f, lam


def noiseless_additive_panel(n, t, rng, l=2):
    u = rng.uniform(0, 1, size=(n, t))
    x = np.ones((n, t, 2))
    mu = rng.normal(size=n)
    mu -= mu.mean()
    xi = rng.normal(size=t)
    xi -= xi.mean()
    x[:, :, 1] = 1 + mu[:, None] + xi[None, :] + rng.normal(size=(n, t))
    panel0 = validate_panel(np.zeros((n, t)), x, u, support=UNIT)
    bases = [cubic_basis(UNIT, l)] * 2
    design = build_design(panel0, bases)
    gamma = rng.normal(size=design.q)
    y = design.r @ gamma + mu[:, None] + xi[None, :]
    return panel0.with_y(y), bases, gamma, mu, xi


def span_distance(a, b):
    """Spectral norm of the difference between the projectors onto span(a), span(b)."""
    qa, _ = np.linalg.qr(a)
    qb, _ = np.linalg.qr(b)
    return np.linalg.norm(qa @ qa.T - qb @ qb.T, 2)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
