"""Linear propagator and the forced evolution map, mode by mode.

In spectral variables the dynamics decouple: each frequency p_k obeys

    d/dt uhat(p_k, t) = sigma_k * uhat(p_k, t) + sqrt(2*pi) * Ghat(p_k) * fhat(p_k, t)

with the per-mode shift

    sigma_k = sqrt(2*pi) * Jhat(p_k) + i * b * p_k + a,

where Jhat is the diffusion symbol, b the transport speed and a the
linear production rate.  Admissible diffusion symbols have
Re sigma_k <= a, so the homogeneous multiplier

    E(k, m) = exp(m * dt * sigma_k)

never exceeds exp(a * m * dt) in modulus.  Multipliers are evaluated by
*direct* exponentiation for every (k, m) pair rather than by powering a
one-step factor, so the homogeneous part carries no accumulated
rounding and no time-stepping error at all.

The forced evolution integrates the variation-of-constants formula

    uhat(p_k, t_m) = E(k, m) * uhat0(p_k)
                   + int_0^{t_m} E(k, (t_m - s)/dt) * sqrt(2*pi) * Ghat(p_k)
                     * fhat(p_k, s) ds

with the trapezoid rule on the slice times s = t_0 .. t_m, again with
exact multipliers at every node; the quadrature error is O(dt**2) and
confined to the forcing term.  Time derivatives are stored from the
right-hand side identity above — never from finite differences — so the
stored dudt is spectrally exact given the stored state.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .grid import (
    SQRT_TWO_PI,
    FieldPhysical,
    GridMismatchError,
    SpectralGrid,
    check_tail_decay,
    forward_values,
    inverse_real,
    require_same_grid,
    symmetrize_hermitian,
)
from .kernels import DEFAULT_SYMBOL_SIGN_TOLERANCE, Kernel
from .nonlinearity import Nonlinearity, apply_values


class KernelAdmissibilityError(ValueError):
    """The diffusion kernel fails the sign or nontriviality requirements."""


@dataclass(frozen=True)
class ModelParams:
    """Scalar model and discretisation parameters.

    linear_rate      a >= 0, the local linear production rate;
    transport_speed  b, the drift velocity;
    horizon          T > 0, the final time;
    n_steps          M >= 1 uniform time steps of size dt = T/M.
    """

    linear_rate: float
    transport_speed: float
    horizon: float
    n_steps: int

    def __post_init__(self) -> None:
        if not (np.isfinite(self.linear_rate) and self.linear_rate >= 0.0):
            raise ValueError(f"linear_rate must be finite and >= 0, got {self.linear_rate}")
        if not np.isfinite(self.transport_speed):
            raise ValueError(f"transport_speed must be finite, got {self.transport_speed}")
        if not (np.isfinite(self.horizon) and self.horizon > 0.0):
            raise ValueError(f"horizon must be finite and > 0, got {self.horizon}")
        if self.n_steps < 1:
            raise ValueError(f"n_steps must be >= 1, got {self.n_steps}")

    @property
    def dt(self) -> float:
        return self.horizon / self.n_steps

    @cached_property
    def times(self) -> np.ndarray:
        t = self.dt * np.arange(self.n_steps + 1)
        t.flags.writeable = False
        return t


@dataclass(frozen=True, eq=False)
class PropagatorTable:
    """Homogeneous multipliers E(k, m) = exp(m*dt*sigma_k) for all slices."""

    grid: SpectralGrid
    params: ModelParams
    sigma: np.ndarray
    multipliers: np.ndarray

    @property
    def n_slices(self) -> int:
        return self.params.n_steps + 1


def mode_shift(grid: SpectralGrid, params: ModelParams, diffusion: Kernel) -> np.ndarray:
    """Per-mode shift sigma_k = sqrt(2*pi)*Jhat(p_k) + i*b*p_k + a."""
    if diffusion.grid != grid:
        raise GridMismatchError("diffusion kernel lives on a different grid")
    return (
        SQRT_TWO_PI * diffusion.symbol.coeffs
        + 1j * params.transport_speed * grid.frequencies
        + params.linear_rate
    )


def build_propagator(
    grid: SpectralGrid,
    params: ModelParams,
    diffusion: Kernel,
    *,
    validate: bool = True,
    sign_tolerance: float = DEFAULT_SYMBOL_SIGN_TOLERANCE,
) -> PropagatorTable:
    """Tabulate E(k, m) by direct exponentiation for every (k, m).

    With ``validate`` (the default) the diffusion kernel must be
    nontrivial and its symbol's real part must not exceed
    ``sign_tolerance`` anywhere; internal tests may disable this to
    exercise degenerate kernels.
    """
    if validate:
        max_real, worst = diffusion.max_real_symbol()
        if max_real > sign_tolerance:
            raise KernelAdmissibilityError(
                f"diffusion symbol has positive real part {max_real:.6e} at "
                f"p = {worst:.6g}; the linear semigroup would amplify that mode"
            )
        if diffusion.l1_norm <= 0.0:
            raise KernelAdmissibilityError("diffusion kernel is identically zero")
    sigma = mode_shift(grid, params, diffusion)
    exponents = np.outer(params.dt * np.arange(params.n_steps + 1), sigma)
    multipliers = np.exp(exponents)
    sigma.flags.writeable = False
    multipliers.flags.writeable = False
    return PropagatorTable(grid=grid, params=params, sigma=sigma, multipliers=multipliers)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """A discrete space-time state: physical, spectral, and dudt slices.

    Row m of each array is the slice at t_m = m*dt.  Physical and
    spectral rows describe the same field (inverse transforms of each
    other); dudt rows hold the evolution's right-hand side, stored when
    the trajectory was produced.
    """

    grid: SpectralGrid
    params: ModelParams
    values: np.ndarray
    coeffs: np.ndarray
    dudt: np.ndarray

    def __post_init__(self) -> None:
        shape = (self.params.n_steps + 1, self.grid.n_points)
        for name, dtype in (("values", float), ("coeffs", complex), ("dudt", float)):
            arr = np.array(getattr(self, name), dtype=dtype)
            if arr.shape != shape:
                raise ValueError(f"{name} has shape {arr.shape}, expected {shape}")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} contains non-finite entries")
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def n_slices(self) -> int:
        return self.params.n_steps + 1

    @property
    def times(self) -> np.ndarray:
        return self.params.times

    def slice(self, m: int) -> FieldPhysical:
        return FieldPhysical(self.grid, self.values[m])

    def terminal_slice(self) -> FieldPhysical:
        return self.slice(self.params.n_steps)

    def __sub__(self, other: "Trajectory") -> "Trajectory":
        require_same_grid(self, other, "trajectories")
        if self.params != other.params:
            raise ValueError("trajectories have different time discretisations")
        return Trajectory(
            self.grid,
            self.params,
            self.values - other.values,
            self.coeffs - other.coeffs,
            self.dudt - other.dudt,
        )

    def scaled(self, factor: float) -> "Trajectory":
        return Trajectory(
            self.grid,
            self.params,
            factor * self.values,
            factor * self.coeffs,
            factor * self.dudt,
        )

    @classmethod
    def zero(cls, grid: SpectralGrid, params: ModelParams) -> "Trajectory":
        shape = (params.n_steps + 1, grid.n_points)
        return cls(grid, params, np.zeros(shape), np.zeros(shape, dtype=complex), np.zeros(shape))


def _assemble_trajectory(
    grid: SpectralGrid,
    params: ModelParams,
    u0: FieldPhysical,
    coeffs: np.ndarray,
    dudt_hat: np.ndarray,
) -> Trajectory:
    coeffs = symmetrize_hermitian(coeffs)
    dudt_hat = symmetrize_hermitian(dudt_hat)
    values = inverse_real(grid, coeffs)
    values[0] = u0.values
    dudt = inverse_real(grid, dudt_hat)
    return Trajectory(grid, params, values, coeffs, dudt)


def free_evolution(
    params: ModelParams,
    diffusion: Kernel,
    u0: FieldPhysical,
    *,
    validate: bool = True,
) -> Trajectory:
    """Evolve u0 under the linear dynamics alone (no production forcing).

    Exact per mode up to rounding: uhat(p_k, t_m) = E(k, m) * uhat0(p_k).
    """
    grid = u0.grid
    require_same_grid(diffusion.phys, u0, "diffusion kernel and initial condition")
    check_tail_decay(u0, what="initial condition")
    table = build_propagator(grid, params, diffusion, validate=validate)
    u0_hat = forward_values(grid, u0.values)
    coeffs = table.multipliers * u0_hat[np.newaxis, :]
    dudt_hat = table.sigma[np.newaxis, :] * coeffs
    return _assemble_trajectory(grid, params, u0, coeffs, dudt_hat)


def forced_evolution(
    params: ModelParams,
    diffusion: Kernel,
    production: Kernel,
    reaction: Nonlinearity,
    u0: FieldPhysical,
    along: Trajectory,
    *,
    threads: int = 1,
    validate: bool = True,
) -> Trajectory:
    """One application of the solver map: linear flow forced by F(along).

    The reaction is evaluated on the slices of ``along``, convolved with
    the production kernel, and integrated against the propagator with
    the trapezoid rule.  The output's slice 0 is exactly ``u0``.
    """
    grid = u0.grid
    require_same_grid(diffusion.phys, u0, "diffusion kernel and initial condition")
    require_same_grid(production.phys, u0, "production kernel and initial condition")
    require_same_grid(along, u0, "input trajectory and initial condition")
    if along.params != params:
        raise ValueError("input trajectory does not match the requested discretisation")
    check_tail_decay(u0, what="initial condition")

    table = build_propagator(grid, params, diffusion, validate=validate)
    u0_hat = forward_values(grid, u0.values)

    reaction_values = apply_values(reaction, along.values, grid.points)
    forcing_hat = SQRT_TWO_PI * production.symbol.coeffs[np.newaxis, :] * forward_values(
        grid, reaction_values
    )

    coeffs = _duhamel_sum(table.multipliers, u0_hat, forcing_hat, params.dt, threads)
    dudt_hat = table.sigma[np.newaxis, :] * coeffs + forcing_hat
    return _assemble_trajectory(grid, params, u0, coeffs, dudt_hat)


def _duhamel_sum(
    multipliers: np.ndarray,
    u0_hat: np.ndarray,
    forcing_hat: np.ndarray,
    dt: float,
    threads: int,
) -> np.ndarray:
    """Trapezoid-in-s sum of E(m-i) * forcing(i) plus the homogeneous term.

    Slices are independent of one another, so rows may be filled in
    parallel; every row reads only the shared multiplier table and
    forcing array and writes its own output row, which keeps the result
    bitwise independent of the thread count.
    """
    n_slices = multipliers.shape[0]
    out = np.empty_like(forcing_hat)
    out[0] = u0_hat

    def fill(rows: range) -> None:
        for m in rows:
            weights = np.full(m + 1, dt)
            weights[0] = weights[m] = 0.5 * dt
            quad = np.einsum(
                "i,ik,ik->k", weights, multipliers[m::-1], forcing_hat[: m + 1]
            )
            out[m] = multipliers[m] * u0_hat + quad

    workers = threads if threads > 0 else (os.cpu_count() or 1)
    if workers <= 1 or n_slices <= 2:
        fill(range(1, n_slices))
        return out
    blocks = [b for b in np.array_split(np.arange(1, n_slices), workers) if b.size]
    with ThreadPoolExecutor(max_workers=len(blocks)) as pool:
        list(pool.map(fill, blocks))
    return out


def subsample_trajectory(trajectory: Trajectory, factor: int) -> Trajectory:
    """Restrict a trajectory to every ``factor``-th slice (refinement studies)."""
    if factor < 1 or trajectory.params.n_steps % factor != 0:
        raise ValueError(
            f"factor {factor} does not divide n_steps {trajectory.params.n_steps}"
        )
    params = ModelParams(
        linear_rate=trajectory.params.linear_rate,
        transport_speed=trajectory.params.transport_speed,
        horizon=trajectory.params.horizon,
        n_steps=trajectory.params.n_steps // factor,
    )
    return Trajectory(
        trajectory.grid,
        params,
        trajectory.values[::factor],
        trajectory.coeffs[::factor],
        trajectory.dudt[::factor],
    )
