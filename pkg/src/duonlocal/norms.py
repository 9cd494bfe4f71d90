"""Discrete L2, H2, and space-time energy norms.

Slice norms use the rectangle rule, so the discrete Parseval identity
makes the physical and spectral evaluations agree to rounding:

    l2(f)**2 = dx * sum_j f_j**2 = dp * sum_k |coeff(k)|**2.

The trajectory norm combines, per time slice, the state, its second
space derivative, and its time derivative, integrating the squared
slice norms in time with the trapezoid rule:

    total**2 = int_0^T ( |du/dt|_L2**2 + |d2u/dx2|_L2**2 + |u|_L2**2 ) dt.

This is the norm in which the solver map is a contraction, so Picard
residuals and convergence ratios are always measured in it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .grid import FieldPhysical, FieldSpectral, check_tail_decay, forward_values

if TYPE_CHECKING:  # pragma: no cover - typing only
    from .propagation import Trajectory


def l2_slice(field: FieldPhysical) -> float:
    """sqrt(dx * sum_j f_j**2)."""
    return float(np.sqrt(field.grid.dx * np.sum(field.values**2)))


def l2_spectral(field: FieldSpectral) -> float:
    """sqrt(dp * sum_k |coeff(k)|**2); equals :func:`l2_slice` by Parseval."""
    return float(np.sqrt(field.grid.dp * np.sum(np.abs(field.coeffs) ** 2)))


def h2_norm(field: FieldPhysical, *, check_tail: bool = True) -> float:
    """sqrt(l2(f)**2 + l2(f'')**2) with a spectrally exact second derivative.

    By default refuses fields that have not decayed at the domain edge:
    the spectral derivative of a wrapped-around field is meaningless.
    ``check_tail=False`` admits genuinely periodic fields (harmonics),
    for which the spectral derivative is exact anyway.
    """
    if check_tail:
        check_tail_decay(field, what="H2 argument")
    grid = field.grid
    coeffs = forward_values(grid, field.values)
    value_sq = grid.dx * float(np.sum(field.values**2))
    second_sq = grid.dp * float(np.sum(np.abs(grid.frequencies**2 * coeffs) ** 2))
    return float(np.sqrt(value_sq + second_sq))


@dataclass(frozen=True)
class SpacetimeNormReport:
    """Components of the space-time energy norm of one trajectory."""

    l2: float
    second_x_l2: float
    time_derivative_l2: float
    total: float


def _trapezoid_weights(n_slices: int, dt: float) -> np.ndarray:
    w = np.full(n_slices, dt)
    w[0] = w[-1] = 0.5 * dt
    return w


def spacetime_norm(trajectory: "Trajectory") -> SpacetimeNormReport:
    """Trapezoid-in-time energy norm of a trajectory.

    The state and time-derivative terms are summed on the physical side,
    the second-derivative term on the spectral side (where it is exact);
    Parseval makes the choices equivalent to rounding.
    """
    grid = trajectory.grid
    dt = trajectory.params.dt
    weights = _trapezoid_weights(trajectory.values.shape[0], dt)

    state_sq = grid.dx * np.sum(trajectory.values**2, axis=1)
    second_sq = grid.dp * np.sum(
        np.abs(grid.frequencies[np.newaxis, :] ** 2 * trajectory.coeffs) ** 2, axis=1
    )
    dt_sq = grid.dx * np.sum(trajectory.dudt**2, axis=1)

    l2 = float(np.sqrt(np.dot(weights, state_sq)))
    second = float(np.sqrt(np.dot(weights, second_sq)))
    time_derivative = float(np.sqrt(np.dot(weights, dt_sq)))
    total = float(np.sqrt(l2**2 + second**2 + time_derivative**2))
    return SpacetimeNormReport(
        l2=l2,
        second_x_l2=second,
        time_derivative_l2=time_derivative,
        total=total,
    )
