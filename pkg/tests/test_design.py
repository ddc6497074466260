import numpy as np
from hypothesis import given, settings, strategies as st

from vcpanel.bspline import SplineSpec, eval_basis, make_basis
from vcpanel.design import build_design, build_row, coefficient_curves
from vcpanel.panel_data import Support, validate_panel

UNIT = Support(0.0, 1.0)
LINEAR = make_basis(SplineSpec(1, 1, UNIT))
CUBIC = make_basis(SplineSpec(3, 2, UNIT))


def test_constant_basis_row():
    b = make_basis(SplineSpec(0, 0, UNIT))
    np.testing.assert_array_equal(build_row([1.0], 0.3, [b]), [1.0])


def test_zero_regressor_block():
    row = build_row([2.0, 0.0], 0.4, [CUBIC, LINEAR])
    np.testing.assert_allclose(row[:6], 2 * eval_basis(CUBIC, 0.4))
    np.testing.assert_array_equal(row[6:], 0.0)


def test_scaled_linear_row():
    np.testing.assert_allclose(build_row([3.0], 0.25, [LINEAR]), [1.5, 1.5, 0.0])


def test_design_rows_match_build_row():
    rng = np.random.default_rng(1)
    panel = validate_panel(rng.normal(size=(4, 5)), rng.normal(size=(4, 5, 2)),
                           rng.uniform(size=(4, 5)), support=UNIT)
    d = build_design(panel, [CUBIC, LINEAR])
    assert d.r.shape == (4, 5, 9)
    assert d.offsets == (0, 6, 9)
    for i in range(4):
        for t in range(5):
            np.testing.assert_array_equal(d.r[i, t], build_row(panel.x[i, t], panel.u[i, t],
                                                               [CUBIC, LINEAR]))
    np.testing.assert_array_equal(d.stacked()[2 * 5 + 3], d.r[2, 3])


def test_single_cell_design():
    panel = validate_panel(np.zeros((2, 2)), np.full((2, 2, 1), 0.7),
                           np.array([[0.1, 0.9], [0.5, 0.2]]), support=UNIT)
    d = build_design(panel.subset([0]), [CUBIC])
    np.testing.assert_array_equal(d.r[0, 0], build_row([0.7], 0.1, [CUBIC]))


def test_unit_regressor_rows_sum_to_one():
    rng = np.random.default_rng(2)
    panel = validate_panel(np.zeros((3, 6)), np.ones((3, 6, 1)), rng.uniform(size=(3, 6)),
                           support=UNIT)
    d = build_design(panel, [CUBIC])
    np.testing.assert_allclose(d.r.sum(axis=2), 1.0, atol=1e-14)


@settings(max_examples=100, deadline=None)
@given(alpha=st.floats(-50, 50), u=st.floats(0, 1),
       x=st.lists(st.floats(-10, 10), min_size=2, max_size=2))
def test_row_linearity(alpha, u, x):
    bases = [CUBIC, LINEAR]
    lhs = build_row(alpha * np.array(x), u, bases)
    rhs = alpha * build_row(x, u, bases)
    np.testing.assert_allclose(lhs, rhs, rtol=1e-12, atol=1e-12)


def test_coefficient_curves_layout():
    gamma = np.concatenate([np.ones(6), [0.0, 1.0, 0.0]])
    grid = np.array([0.25, 0.5])
    curves = coefficient_curves([CUBIC, LINEAR], gamma, grid)
    np.testing.assert_allclose(curves[0], 1.0)
    np.testing.assert_allclose(curves[1], [0.5, 1.0])
