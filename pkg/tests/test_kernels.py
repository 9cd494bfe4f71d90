"""Kernel catalog: norms, symbols, admissibility, file loading."""

import math
from types import SimpleNamespace

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.integrate import quad

from duonlocal import (
    Kernel,
    KernelPair,
    SpectralGrid,
    TailDecayError,
    production_gain,
    second_derivative_l1,
    validate_kernels,
)

SQRT_2PI = math.sqrt(2.0 * math.pi)
# integral of |(x^2-1) phi(x)| over the line, phi the standard normal density;
# equals 4 phi(1) because the sign flips exactly at x = +-1
GAUSS_D2_MASS = 4.0 * math.exp(-0.5) / SQRT_2PI
GAUSS_GAIN = math.hypot(1.0, GAUSS_D2_MASS)


def bspline3(x):
    """Cubic B-spline: C^2, support [-2, 2], unit integral, |f''| mass 8/3."""
    ax = np.abs(x)
    out = np.zeros_like(x)
    inner = ax <= 1.0
    outer = (ax > 1.0) & (ax < 2.0)
    out[inner] = (4.0 - 6.0 * ax[inner] ** 2 + 3.0 * ax[inner] ** 3) / 6.0
    out[outer] = (2.0 - ax[outer]) ** 3 / 6.0
    return out


# --------------------------------------------------------------- gaussians


def test_gaussian_l1_is_mass(grid):
    k = Kernel.gaussian(grid, amplitude=2.0, width=1.5)
    # smooth decayed integrand: the grid sum is the integral to machine precision
    assert k.l1_norm == pytest.approx(2.0 * 1.5 * SQRT_2PI, rel=1e-14)


def test_gaussian_second_derivative_mass_oracle(grid, fine_grid):
    # |.| kinks where x^2 = 1, so hand the quadrature those breakpoints
    oracle, err = quad(
        lambda x: abs((x * x - 1.0) * math.exp(-0.5 * x * x)) / SQRT_2PI,
        -30.0,
        30.0,
        points=[-1.0, 1.0],
        limit=200,
    )
    assert err < 1e-10
    assert oracle == pytest.approx(GAUSS_D2_MASS, rel=1e-12)
    amp = 1.0 / SQRT_2PI
    coarse = Kernel.gaussian(grid, amplitude=amp, width=1.0)
    fine = Kernel.gaussian(fine_grid, amplitude=amp, width=1.0)
    # |G''| has corners at x = +-1, so the rectangle rule is only O(dx^2) here
    assert coarse.second_derivative_l1_norm == pytest.approx(oracle, abs=2e-3)
    assert fine.second_derivative_l1_norm == pytest.approx(oracle, abs=2e-4)


def test_gaussian_second_derivative_scaling(grid):
    # mass of (amp * exp(-x^2/(2 w^2)))'' is (amp/w) * 4 * exp(-1/2)
    k = Kernel.gaussian(grid, amplitude=3.0, width=2.0)
    expected = (3.0 / 2.0) * 4.0 * math.exp(-0.5)
    assert k.second_derivative_l1_norm == pytest.approx(expected, rel=1e-3)


def test_gaussian_symbol_closed_form(grid):
    k = Kernel.gaussian(grid, amplitude=1.0, width=1.0)
    expected = np.exp(-0.5 * grid.frequencies**2)  # amp * w * exp(-w^2 p^2 / 2)
    assert np.max(np.abs(k.symbol.coeffs - expected)) < 1e-13


def test_negative_gaussian_is_sign_flipped(grid):
    pos = Kernel.gaussian(grid, amplitude=1.0, width=1.0)
    neg = Kernel.negative_gaussian(grid, amplitude=1.0, width=1.0)
    assert_allclose(neg.phys.values, -pos.phys.values, rtol=0, atol=0)
    assert neg.l1_norm == pos.l1_norm
    max_real, _ = neg.max_real_symbol()
    assert max_real <= 1e-12


def test_symbol_refinement_invariance():
    """Shared frequencies of nested grids carry the same coefficients."""
    coarse = SpectralGrid(half_length=20.0, n_points=256)
    fine = SpectralGrid(half_length=20.0, n_points=512)
    a = Kernel.gaussian(coarse, amplitude=1.0, width=1.0).symbol.coeffs
    b = Kernel.gaussian(fine, amplitude=1.0, width=1.0).symbol.coeffs
    assert np.max(np.abs(b[128:384] - a)) < 1e-13


def test_gaussian_rejects_bad_parameters(grid):
    with pytest.raises(ValueError):
        Kernel.gaussian(grid, amplitude=-1.0, width=1.0)
    with pytest.raises(ValueError):
        Kernel.gaussian(grid, amplitude=1.0, width=0.0)


def test_wide_gaussian_fails_tail_check(grid):
    with pytest.raises(TailDecayError):
        Kernel.gaussian(grid, amplitude=1.0, width=8.0)


# ----------------------------------------------------------------- laplace


def test_laplace_l1_and_symbol(grid, fine_grid):
    s = 0.75
    k = Kernel.laplace(grid, amplitude=1.0, scale=s)
    # cusp at the origin: rectangle rule converges at second order only
    assert k.l1_norm == pytest.approx(2.0 * s, abs=6e-3)
    closed = math.sqrt(2.0 / math.pi) * s / (1.0 + (s * grid.frequencies) ** 2)
    rel = np.max(np.abs(k.symbol.coeffs - closed)) / np.max(closed)
    assert rel < 1e-2
    fine = Kernel.laplace(fine_grid, amplitude=1.0, scale=s)
    ratio = abs(k.l1_norm - 2.0 * s) / abs(fine.l1_norm - 2.0 * s)
    assert 3.5 < ratio < 4.5


def test_laplace_has_no_usable_second_derivative(grid):
    k = Kernel.laplace(grid, amplitude=1.0, scale=0.75)
    assert k.second_derivative is None
    with pytest.raises(ValueError, match="second derivative"):
        second_derivative_l1(k)
    with pytest.raises(ValueError):
        production_gain(k)


def test_laplace_slow_tails_rejected(grid):
    # exp(-18/2) is nowhere near the decay threshold at L = 20
    with pytest.raises(TailDecayError):
        Kernel.laplace(grid, amplitude=1.0, scale=2.0)


# --------------------------------------------------------------- tabulated


def test_bspline_tabulated_masses():
    grid = SpectralGrid(half_length=16.0, n_points=768)
    k = Kernel.tabulated(grid, bspline3(grid.points))
    assert k.l1_norm == pytest.approx(1.0, rel=1e-12)
    # by-hand integral: |B''| is piecewise linear through (0,-2) and (+-1,1),
    # crossing zero at +-2/3; the triangles sum to 8/3
    assert k.second_derivative_l1_norm == pytest.approx(8.0 / 3.0, abs=2.5e-3)


def test_bspline_second_derivative_mass_refines_at_second_order():
    coarse = SpectralGrid(half_length=16.0, n_points=768)
    fine = SpectralGrid(half_length=16.0, n_points=1536)
    e1 = abs(Kernel.tabulated(coarse, bspline3(coarse.points)).second_derivative_l1_norm - 8.0 / 3.0)
    e2 = abs(Kernel.tabulated(fine, bspline3(fine.points)).second_derivative_l1_norm - 8.0 / 3.0)
    assert 3.0 < e1 / e2 < 5.0


def test_tabulated_round_trip_through_file(tmp_path, grid):
    # smooth profile: its spectral second derivative decays fast enough for
    # the tail check, which sampled corners would not
    values = np.exp(-0.5 * grid.points**2) * (1.0 + 0.3 * np.cos(grid.points))
    path = tmp_path / "kernel.txt"
    lines = ["# tabulated kernel", "# x value"]
    lines += [f"{x:.17g} {v:.17g}" for x, v in zip(grid.points, values)]
    path.write_text("\n".join(lines) + "\n")
    loaded = Kernel.from_file(grid, path)
    direct = Kernel.tabulated(grid, values)
    assert_allclose(loaded.phys.values, direct.phys.values, rtol=0, atol=0)
    assert loaded.l1_norm == direct.l1_norm


def test_from_file_rejects_wrong_abscissae(tmp_path, grid):
    values = np.exp(-0.5 * grid.points**2)
    path = tmp_path / "kernel.txt"
    shifted = grid.points + 1e-6
    path.write_text(
        "\n".join(f"{x:.17g} {v:.17g}" for x, v in zip(shifted, values)) + "\n"
    )
    with pytest.raises(ValueError, match="does not match the grid"):
        Kernel.from_file(grid, path)


def test_from_file_rejects_wrong_shape(tmp_path, grid):
    path = tmp_path / "kernel.txt"
    path.write_text("0.0 1.0 2.0\n0.1 1.0 2.0\n")
    with pytest.raises(ValueError, match="two columns"):
        Kernel.from_file(grid, path)
    short = tmp_path / "short.txt"
    short.write_text("0.0 1.0\n0.1 1.0\n")
    with pytest.raises(ValueError, match="rows"):
        Kernel.from_file(grid, short)


# -------------------------------------------------------- gain and checks


def test_production_gain_arithmetic():
    stub = SimpleNamespace(l1_norm=3.0, second_derivative_l1_norm=4.0, kind="stub")
    assert production_gain(stub) == 5.0
    degenerate = SimpleNamespace(l1_norm=1.0, second_derivative_l1_norm=0.0, kind="stub")
    assert production_gain(degenerate) == 1.0


def test_gaussian_density_gain(grid):
    k = Kernel.gaussian(grid, amplitude=1.0 / SQRT_2PI, width=1.0)
    # discrete norms sit within the rectangle-rule budget of the closed form
    assert production_gain(k) == pytest.approx(GAUSS_GAIN, abs=2e-3)


def test_kernel_pair_checks_gain(gauss_pair):
    with pytest.raises(ValueError, match="gain"):
        KernelPair(gauss_pair.diffusion, gauss_pair.production, gauss_pair.gain * 1.001)


def test_validate_kernels_passes_for_gaussian_pair(gauss_pair):
    report = validate_kernels(gauss_pair.diffusion, gauss_pair.production)
    assert report.passed
    assert report.diffusion_sign_ok
    assert report.max_real_diffusion_symbol <= 1e-12
    assert report.diffusion_nontrivial and report.production_nontrivial
    assert "PASS" in report.summary()


def test_validate_kernels_fails_for_positive_diffusion(grid):
    bad = Kernel.gaussian(grid, amplitude=1.0 / SQRT_2PI, width=1.0)
    good = Kernel.gaussian(grid, amplitude=1.0 / SQRT_2PI, width=1.0)
    report = validate_kernels(bad, good)
    assert not report.passed
    assert not report.diffusion_sign_ok
    # the symbol of a positive bump peaks at zero frequency, at value l1/sqrt(2 pi)
    assert report.worst_frequency == 0.0
    assert report.max_real_diffusion_symbol == pytest.approx(1.0 / SQRT_2PI, rel=1e-12)
    assert "FAIL" in report.summary()


def test_validate_kernels_fails_for_laplace_production(grid):
    diffusion = Kernel.negative_gaussian(grid, amplitude=1.0 / SQRT_2PI, width=1.0)
    production = Kernel.laplace(grid, amplitude=1.0, scale=0.75)
    report = validate_kernels(diffusion, production)
    assert not report.passed
    assert report.production_second_derivative_l1 is None
    assert "not integrable" in report.summary()
