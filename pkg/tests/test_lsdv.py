import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import noiseless_additive_panel
from oracles import closed_form_gamma_matrix, dummy_regression, explicit_gamma_matrix
from vcpanel.design import build_design
from vcpanel.exceptions import LengthMismatch
from vcpanel.lsdv import fit_lsdv, gamma_projector_apply


def test_explicit_projector_matches_closed_form():
    for n, t in [(3, 2), (4, 3), (2, 5)]:
        np.testing.assert_allclose(explicit_gamma_matrix(n, t), closed_form_gamma_matrix(n, t),
                                   atol=1e-12)


def test_streaming_apply_matches_matrix(rng):
    n, t = 3, 2
    g = closed_form_gamma_matrix(n, t)
    for _ in range(5):
        v = rng.normal(size=n * t)
        np.testing.assert_allclose(gamma_projector_apply(v, n, t), g @ v, atol=1e-12)
    np.testing.assert_allclose(gamma_projector_apply(np.eye(n * t), n, t), g, atol=1e-12)


def test_projector_annihilates_sum_zero_effects(rng):
    n, t = 3, 2
    a = rng.normal(size=n)
    a -= a.mean()
    b = rng.normal(size=t)
    b -= b.mean()
    np.testing.assert_allclose(gamma_projector_apply(np.kron(a, np.ones(t)), n, t), 0,
                               atol=1e-12)
    np.testing.assert_allclose(gamma_projector_apply(np.kron(np.ones(n), b), n, t), 0,
                               atol=1e-12)


def test_projector_keeps_constant():
    np.testing.assert_allclose(gamma_projector_apply(np.ones(12), 4, 3), np.ones(12),
                               atol=1e-14)


def test_projector_is_symmetric():
    g = closed_form_gamma_matrix(4, 3)
    np.testing.assert_allclose(g, g.T, atol=1e-14)
    np.testing.assert_allclose(explicit_gamma_matrix(4, 3), explicit_gamma_matrix(4, 3).T,
                               atol=1e-12)


def test_projector_length_check():
    with pytest.raises(LengthMismatch):
        gamma_projector_apply(np.ones(5), 2, 3)


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 10_000), n=st.integers(2, 9), t=st.integers(2, 9))
def test_projector_idempotent(seed, n, t):
    v = np.random.default_rng(seed).normal(size=n * t)
    once = gamma_projector_apply(v, n, t)
    np.testing.assert_allclose(gamma_projector_apply(once, n, t), once, atol=1e-12)


@pytest.mark.parametrize("n,t", [(12, 7), (30, 4), (5, 20)])
def test_noiseless_recovery(n, t):
    rng = np.random.default_rng(n + t)
    panel, bases, gamma, mu, xi = noiseless_additive_panel(n, t, rng)
    fit = fit_lsdv(panel, bases)
    np.testing.assert_allclose(fit.gamma, gamma, atol=1e-8)
    np.testing.assert_allclose(fit.mu, mu, atol=1e-8)
    np.testing.assert_allclose(fit.xi, xi, atol=1e-8)


def test_fit_invariants(rng):
    panel, bases, *_ = noiseless_additive_panel(10, 6, rng)
    panel = panel.with_y(panel.y + rng.normal(size=(10, 6)))
    fit = fit_lsdv(panel, bases)
    assert abs(fit.mu.sum()) <= 1e-10 and abs(fit.xi.sum()) <= 1e-10
    design = build_design(panel, bases)
    np.testing.assert_allclose(
        fit.residuals, panel.y - design.r @ fit.gamma - fit.mu[:, None] - fit.xi[None, :],
        atol=1e-12)


@pytest.mark.parametrize("n,t", [(3, 2), (4, 3), (3, 3), (4, 2)])
def test_matches_dummy_regression(n, t):
    rng = np.random.default_rng(10 * n + t)
    from vcpanel.bspline import SplineSpec, make_basis
    from vcpanel.panel_data import Support, validate_panel
    basis = make_basis(SplineSpec(1, 0, Support(0.0, 1.0)))
    x = rng.normal(size=(n, t, 1))
    panel = validate_panel(rng.normal(size=(n, t)), x, rng.uniform(size=(n, t)),
                           support=(0.0, 1.0))
    design = build_design(panel, [basis])
    fit = fit_lsdv(panel, [basis])
    gamma, mu, xi = dummy_regression(design.stacked(), panel.y.ravel(), n, t)
    np.testing.assert_allclose(fit.gamma, gamma, atol=1e-10)
    np.testing.assert_allclose(fit.mu, mu, atol=1e-10)
    np.testing.assert_allclose(fit.xi, xi, atol=1e-10)


def test_effects_follow_literal_formulas(rng):
    n, t = 6, 4
    panel, bases, *_ = noiseless_additive_panel(n, t, rng, l=0)
    panel = panel.with_y(panel.y + rng.normal(size=(n, t)))
    fit = fit_lsdv(panel, bases)
    from oracles import explicit_dummies
    d, s = explicit_dummies(n, t)
    e = (panel.y - build_design(panel, bases).r @ fit.gamma).ravel()
    xi_tail = np.linalg.solve(s.T @ s, s.T @ e)
    mu_tail = np.linalg.solve(d.T @ d, d.T @ (e - s @ xi_tail))
    np.testing.assert_allclose(fit.xi[1:], xi_tail, atol=1e-12)
    np.testing.assert_allclose(fit.mu[1:], mu_tail, atol=1e-12)


def test_adding_subject_effect_shifts_mu(rng):
    n, t = 9, 5
    panel, bases, *_ = noiseless_additive_panel(n, t, rng)
    panel = panel.with_y(panel.y + rng.normal(size=(n, t)))
    base = fit_lsdv(panel, bases)
    a = rng.normal(size=n)
    a -= a.mean()
    c = 2.5
    shifted = fit_lsdv(panel.with_y(panel.y + c * a[:, None]), bases)
    np.testing.assert_allclose(shifted.gamma, base.gamma, atol=1e-10)
    np.testing.assert_allclose(shifted.mu - base.mu, c * a, atol=1e-10)
