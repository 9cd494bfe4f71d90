"""Shared fixtures: grids, kernel pairs, and smooth random trajectories."""

import numpy as np
import pytest

from duonlocal import Kernel, KernelPair, ModelParams, SpectralGrid, Trajectory
from duonlocal.grid import forward_values

SQRT_2PI = np.sqrt(2.0 * np.pi)
# amplitude that makes a unit-width gaussian integrate to exactly one
DENSITY_AMP = 1.0 / SQRT_2PI


@pytest.fixture
def grid():
    """Workhorse grid: wide enough for unit-width gaussians, fast enough for CI."""
    return SpectralGrid(half_length=20.0, n_points=256)


@pytest.fixture
def fine_grid():
    return SpectralGrid(half_length=20.0, n_points=512)


@pytest.fixture
def small_grid():
    return SpectralGrid(half_length=10.0, n_points=64)


@pytest.fixture
def gauss_pair(grid):
    """Unit-mass gaussian pair: sign-correct diffusion plus smooth production."""
    diffusion = Kernel.negative_gaussian(grid, amplitude=DENSITY_AMP, width=1.0)
    production = Kernel.gaussian(grid, amplitude=DENSITY_AMP, width=1.0)
    return KernelPair.build(diffusion, production)


@pytest.fixture
def gauss_u0(grid):
    return grid.sample(lambda x: np.exp(-0.5 * x**2))


def smooth_random_trajectory(grid, params, rng, n_modes=6, scale=1.0):
    """Band-limited random trajectory with exact (analytic) time derivative.

    Each mode is a gaussian-windowed cosine in space times a quadratic in
    time, so ``dudt`` can be filled from the closed-form derivative rather
    than finite differences.  Envelope widths stay below L/8 so the tail
    region is empty to well under the decay threshold.
    """
    x = grid.points
    t = params.times[:, None]  # (M+1, 1) for broadcasting
    values = np.zeros((params.n_steps + 1, grid.n_points))
    dudt = np.zeros_like(values)
    for _ in range(n_modes):
        amp = scale * rng.uniform(-1.0, 1.0)
        width = rng.uniform(1.5, 2.5)
        freq = rng.uniform(0.0, 3.0)
        phase = rng.uniform(0.0, 2.0 * np.pi)
        c0, c1, c2 = rng.uniform(-1.0, 1.0, size=3)
        profile = np.exp(-0.5 * (x / width) ** 2) * np.cos(freq * x + phase)
        values += amp * profile * (c0 + c1 * t + c2 * t**2)
        dudt += amp * profile * (c1 + 2.0 * c2 * t)
    coeffs = forward_values(grid, values)
    return Trajectory(grid=grid, params=params, values=values, coeffs=coeffs, dudt=dudt)


@pytest.fixture
def rng():
    return np.random.default_rng(20260819)


def make_params(horizon=1.0, n_steps=40, linear_rate=0.5, transport_speed=1.0):
    return ModelParams(
        linear_rate=linear_rate,
        transport_speed=transport_speed,
        horizon=horizon,
        n_steps=n_steps,
    )
