"""Reaction shapes: catalog semantics, constant validation, estimation."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from duonlocal import (
    GridMismatchError,
    Nonlinearity,
    TailDecayError,
    estimate_constants,
    f0_spectrum,
    fourier_forward,
)
from duonlocal.nonlinearity import apply, apply_values


@pytest.fixture
def offset_field(grid):
    return grid.sample(lambda x: 0.5 * np.exp(-0.5 * x**2))


def test_linear_apply(grid, gauss_u0):
    shape = Nonlinearity.linear(0.3)
    out = apply(shape, gauss_u0)
    assert_allclose(out.values, 0.3 * gauss_u0.values, rtol=0, atol=0)
    assert shape.lipschitz == 0.3
    assert shape.growth == 0.3
    assert shape.offset is None


def test_linear_negative_coefficient_constants():
    shape = Nonlinearity.linear(-0.4)
    assert shape.lipschitz == 0.4
    assert shape.growth == 0.4


def test_saturating_linear_clamps(grid):
    shape = Nonlinearity.saturating_linear(0.8, 1.0)
    u = grid.field(np.linspace(-3.0, 3.0, grid.n_points))
    out = apply(shape, u)
    assert_allclose(out.values, 0.8 * np.clip(u.values, -1.0, 1.0), rtol=0, atol=0)
    assert np.max(out.values) == pytest.approx(0.8)
    with pytest.raises(ValueError):
        Nonlinearity.saturating_linear(0.8, 0.0)


def test_affine_offset_pointwise_value(grid, offset_field):
    shape = Nonlinearity.affine_offset(0.3, offset_field)
    k0 = grid.n_points // 2  # x = 0, where the offset peaks at 0.5
    u = grid.field(np.full(grid.n_points, 2.0) * np.exp(-0.5 * grid.points**2))
    out = apply(shape, u)
    assert out.values[k0] == pytest.approx(0.3 * 2.0 + 0.5, rel=1e-14)


def test_offset_must_be_nonnegative(grid, offset_field):
    with pytest.raises(ValueError, match="nonnegative"):
        Nonlinearity.affine_offset(0.3, grid.field(-offset_field.values))


def test_offset_must_decay(grid):
    wide = grid.sample(lambda x: np.exp(-0.5 * (x / 8.0) ** 2))
    with pytest.raises(TailDecayError):
        Nonlinearity.affine_offset(0.3, wide)


def test_apply_checks_offset_grid(grid, small_grid, offset_field):
    shape = Nonlinearity.affine_offset(0.3, offset_field)
    u = small_grid.sample(lambda x: np.exp(-(x**2)))
    with pytest.raises(GridMismatchError):
        apply(shape, u)


# -------------------------------------------------------------- tabulated


def test_tabulated_accepts_honest_constants():
    shape = Nonlinearity.tabulated(
        lambda u, x: 0.5 * np.sin(u), lipschitz=0.5, growth=0.5
    )
    assert shape.kind == "tabulated"
    assert apply_values(shape, np.array([np.pi / 2.0]), np.zeros(1)) == pytest.approx(0.5)


def test_tabulated_refuses_quadratic_rule():
    """u**2 has no global Lipschitz constant; the lattice check must see that."""
    with pytest.raises(ValueError, match="Lipschitz"):
        Nonlinearity.tabulated(lambda u, x: u**2, lipschitz=5.0, growth=5.0)


def test_tabulated_refuses_undervalued_growth():
    with pytest.raises(ValueError, match="growth"):
        Nonlinearity.tabulated(lambda u, x: 2.0 * u, lipschitz=2.5, growth=1.0)


def test_tabulated_picks_up_offset_grid(grid, offset_field):
    # x-dependent rule: the validation lattice must come from the offset's grid
    values = offset_field.values
    shape = Nonlinearity.tabulated(
        lambda u, x: 0.2 * u + values, lipschitz=0.2, growth=0.2, offset=offset_field
    )
    assert shape.offset is offset_field


# ------------------------------------------------------------- estimation


def test_estimate_constants_saturating():
    shape = Nonlinearity.saturating_linear(1.0, 1.0)
    est = estimate_constants(shape, np.zeros(1), (-2.0, 2.0), n_samples=401)
    assert est.lipschitz == pytest.approx(1.0, rel=1e-12)
    assert est.growth == pytest.approx(1.0, rel=1e-12)
    assert est.u_step == pytest.approx(0.01)
    assert "lower bounds" in est.summary()


def test_estimates_never_exceed_stored_constants(grid, offset_field):
    """Stored constants must dominate sampling on a 10x-refined lattice."""
    catalog = [
        Nonlinearity.linear(0.7),
        Nonlinearity.saturating_linear(0.9, 1.3),
        Nonlinearity.affine_offset(0.4, offset_field),
    ]
    for shape in catalog:
        x = offset_field.grid.points if shape.offset is not None else np.zeros(1)
        est = estimate_constants(shape, x, (-5.0, 5.0), n_samples=1001)
        assert est.lipschitz <= shape.lipschitz * (1.0 + 1e-9)
        assert est.growth <= shape.growth * (1.0 + 1e-9)


def test_estimate_constants_rejects_mismatched_lattice(grid, offset_field):
    shape = Nonlinearity.affine_offset(0.3, offset_field)
    with pytest.raises(ValueError, match="lattice"):
        estimate_constants(shape, np.zeros(7), (-1.0, 1.0))


def test_estimate_constants_rejects_bad_range():
    shape = Nonlinearity.linear(1.0)
    with pytest.raises(ValueError):
        estimate_constants(shape, np.zeros(1), (1.0, 1.0))
    with pytest.raises(ValueError):
        estimate_constants(shape, np.zeros(1), (0.0, 1.0), n_samples=1)


# ------------------------------------------------------------ f0 spectrum


def test_f0_spectrum_of_state_only_rules_is_zero(grid):
    for shape in (Nonlinearity.linear(0.3), Nonlinearity.saturating_linear(1.0, 2.0)):
        coeffs = f0_spectrum(shape, grid).coeffs
        assert np.max(np.abs(coeffs)) == 0.0


def test_f0_spectrum_of_affine_rule_is_offset_transform(grid, offset_field):
    shape = Nonlinearity.affine_offset(0.3, offset_field)
    coeffs = f0_spectrum(shape, grid).coeffs
    expected = fourier_forward(offset_field).coeffs
    assert_allclose(coeffs, expected, rtol=0, atol=1e-15)


def test_f0_spectrum_checks_grid(grid, small_grid, offset_field):
    shape = Nonlinearity.affine_offset(0.3, offset_field)
    with pytest.raises(ValueError):
        f0_spectrum(shape, small_grid)
