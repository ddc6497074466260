import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.interpolate import BSpline

from vcpanel.bspline import SplineSpec, eval_basis, eval_basis_matrix, eval_function, make_basis
from vcpanel.exceptions import InvalidSpec, LengthMismatch, OutOfSupport
from vcpanel.panel_data import Support

UNIT = Support(0.0, 1.0)


def test_cubic_knots():
    b = make_basis(SplineSpec(3, 2, UNIT))
    np.testing.assert_allclose(b.knots, [0, 0, 0, 0, 1 / 3, 2 / 3, 1, 1, 1, 1])
    assert b.n_functions == 6
    assert len(b.knots) == b.n_functions + 3 + 1


def test_constant_basis():
    b = make_basis(SplineSpec(0, 0, UNIT))
    np.testing.assert_array_equal(b.knots, [0.0, 1.0])
    assert b.n_functions == 1
    np.testing.assert_array_equal(eval_basis(b, 0.5), [1.0])


def test_negative_interior_knots():
    with pytest.raises(InvalidSpec):
        make_basis(SplineSpec(3, -1, UNIT))


def test_linear_hand_value():
    b = make_basis(SplineSpec(1, 1, UNIT))
    np.testing.assert_array_equal(b.knots, [0, 0, 0.5, 1, 1])
    np.testing.assert_allclose(eval_basis(b, 0.25), [0.5, 0.5, 0.0], atol=1e-15)
    assert eval_function(b, [0, 1, 0], 0.25) == pytest.approx(0.5)


@pytest.mark.parametrize("m,l", [(0, 0), (0, 4), (1, 1), (2, 3), (3, 0), (3, 4), (3, 10)])
def test_matches_scipy(m, l):
    support = Support(-2.0, 3.0)
    b = make_basis(SplineSpec(m, l, support))
    u = np.linspace(-2, 3, 301)
    ref = BSpline.design_matrix(u, b.knots, m).toarray()
    np.testing.assert_allclose(eval_basis_matrix(b, u), ref, atol=1e-14)


def test_right_endpoint_in_last_span():
    b = make_basis(SplineSpec(3, 3, UNIT))
    v = eval_basis(b, 1.0)
    assert v[-1] == 1.0
    assert v.sum() == pytest.approx(1.0, abs=1e-15)


def test_out_of_support():
    b = make_basis(SplineSpec(3, 2, UNIT))
    with pytest.raises(OutOfSupport):
        eval_basis(b, 1.01)
    eval_basis(b, 1.0 + 1e-13)  # within tolerance


def test_eval_function_trivial():
    b = make_basis(SplineSpec(3, 4, UNIT))
    u = np.linspace(0, 1, 17)
    np.testing.assert_allclose(eval_function(b, np.ones(8), u), 1.0, atol=1e-14)
    np.testing.assert_array_equal(eval_function(b, np.zeros(8), u), 0.0)
    with pytest.raises(LengthMismatch):
        eval_function(b, np.ones(7), 0.3)


def test_partition_of_unity_many_points():
    rng = np.random.default_rng(0)
    b = make_basis(SplineSpec(3, 5, UNIT))
    vals = eval_basis_matrix(b, rng.uniform(0, 1, 10_000))
    assert np.abs(vals.sum(axis=1) - 1).max() <= 1e-12
    assert vals.min() >= 0.0


@settings(max_examples=200, deadline=None)
@given(m=st.integers(0, 5), l=st.integers(0, 12),
       u=st.floats(0.0, 1.0, allow_nan=False))
def test_basis_properties(m, l, u):
    b = make_basis(SplineSpec(m, l, UNIT))
    v = eval_basis(b, u)
    assert v.shape == (l + m + 1,)
    assert v.min() >= 0.0
    assert abs(v.sum() - 1.0) <= 1e-12
    assert np.count_nonzero(v) <= m + 1


@pytest.mark.parametrize("l", [0, 1, 3, 7])
def test_cubic_reproduction(l):
    rng = np.random.default_rng(l)
    support = Support(-1.0, 2.0)
    b = make_basis(SplineSpec(3, l, support))
    u = np.linspace(-1, 2, 200)
    coefs = rng.normal(size=4)
    target = np.polyval(coefs, u)
    design = eval_basis_matrix(b, u)
    gamma, *_ = np.linalg.lstsq(design, target, rcond=None)
    assert np.abs(design @ gamma - target).max() <= 1e-8
