"""Pointwise reaction terms F(u, x) and their certified constants.

Every reaction shape carries two constants that feed the contraction
certificate: a global Lipschitz constant in u,

    |F(u1, x) - F(u2, x)| <= lipschitz * |u1 - u2|,

and a growth pair (growth, offset) with

    |F(u, x)| <= growth * |u| + offset(x),   offset >= 0.

Shapes that cannot honour a global Lipschitz constant (quadratic rules
and friends) are rejected at construction: certification is meaningless
for them.  Constants of the built-in shapes are exact by construction;
for tabulated rules the declared constants are cross-checked on a
sampled (u, x) lattice and the constructor refuses on any violation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .grid import (
    FieldPhysical,
    FieldSpectral,
    SpectralGrid,
    check_tail_decay,
    fourier_forward,
    require_same_grid,
)

Rule = Callable[[np.ndarray, np.ndarray], np.ndarray]

#: Smallest |u| used when turning |F(u,x)| into a growth-constant sample.
_GROWTH_FLOOR = 1e-8


@dataclass(frozen=True, eq=False)
class Nonlinearity:
    """A reaction term together with its certified constants."""

    kind: str
    lipschitz: float
    growth: float
    offset: Optional[FieldPhysical]
    rule: Rule

    def __post_init__(self) -> None:
        if not (np.isfinite(self.lipschitz) and self.lipschitz >= 0.0):
            raise ValueError(f"lipschitz constant must be finite and >= 0, got {self.lipschitz}")
        if not (np.isfinite(self.growth) and self.growth >= 0.0):
            raise ValueError(f"growth constant must be finite and >= 0, got {self.growth}")
        if self.offset is not None:
            if np.any(self.offset.values < 0.0):
                raise ValueError("offset field must be nonnegative")
            check_tail_decay(self.offset, what="reaction offset field")

    # -- catalog ----------------------------------------------------------------

    @classmethod
    def linear(cls, c: float) -> "Nonlinearity":
        """F(u, x) = c*u."""
        c = float(c)
        return cls("linear", abs(c), abs(c), None, lambda u, x: c * u)

    @classmethod
    def saturating_linear(cls, c: float, u_cap: float) -> "Nonlinearity":
        """F(u, x) = c * clamp(u, -u_cap, u_cap)."""
        c = float(c)
        u_cap = float(u_cap)
        if u_cap <= 0.0:
            raise ValueError(f"u_cap must be positive, got {u_cap}")
        return cls(
            "saturating_linear",
            abs(c),
            abs(c),
            None,
            lambda u, x: c * np.clip(u, -u_cap, u_cap),
        )

    @classmethod
    def affine_offset(cls, c: float, offset: FieldPhysical) -> "Nonlinearity":
        """F(u, x) = c*u + offset(x) with a nonnegative offset field."""
        c = float(c)
        values = offset.values

        def rule(u: np.ndarray, x: np.ndarray) -> np.ndarray:
            return c * u + values

        return cls("affine_offset", abs(c), abs(c), offset, rule)

    @classmethod
    def tabulated(
        cls,
        rule: Rule,
        lipschitz: float,
        growth: float,
        *,
        offset: Optional[FieldPhysical] = None,
        grid: Optional[SpectralGrid] = None,
        u_range: tuple[float, float] = (-10.0, 10.0),
        n_check: int = 101,
    ) -> "Nonlinearity":
        """Wrap a user rule, refusing constants the rule visibly violates.

        The declared constants are checked on an ``n_check``-point u
        lattice spanning ``u_range`` crossed with the grid points (or
        with x = 0 when no grid is supplied).  The check can only find
        violations, never prove the constants; it exists to reject
        clearly non-Lipschitz rules such as u**2 up front.
        """
        shape = cls("tabulated", float(lipschitz), float(growth), offset, rule)
        if grid is None and offset is not None:
            grid = offset.grid
        x = grid.points if grid is not None else np.zeros(1)
        estimate = estimate_constants(shape, x, u_range, n_check)
        slack = 1.0 + 1e-9
        if estimate.lipschitz > shape.lipschitz * slack:
            raise ValueError(
                f"rule violates the declared Lipschitz constant on the validation "
                f"lattice: sampled {estimate.lipschitz:.6g} > declared {lipschitz:.6g}"
            )
        if estimate.growth > shape.growth * slack:
            raise ValueError(
                f"rule violates the declared growth constant on the validation "
                f"lattice: sampled {estimate.growth:.6g} > declared {growth:.6g}"
            )
        return shape


def apply(shape: Nonlinearity, u: FieldPhysical) -> FieldPhysical:
    """Evaluate F(u(x_j), x_j) on the grid of u."""
    if shape.offset is not None:
        require_same_grid(shape.offset, u, "reaction offset and state")
    values = np.asarray(shape.rule(u.values, u.grid.points), dtype=float)
    return FieldPhysical(u.grid, values)


def apply_values(shape: Nonlinearity, values: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Raw-array variant of :func:`apply` for batched trajectory slices."""
    return np.asarray(shape.rule(values, x), dtype=float)


def f0_spectrum(shape: Nonlinearity, grid: SpectralGrid) -> FieldSpectral:
    """Transform of x -> F(0, x), the forcing seen by a zero state."""
    if shape.offset is not None and shape.offset.grid != grid:
        raise ValueError("offset field lives on a different grid")
    zero = np.zeros(grid.n_points)
    return fourier_forward(FieldPhysical(grid, apply_values(shape, zero, grid.points)))


@dataclass(frozen=True)
class EstimatedConstants:
    """Sampled lower bounds for the reaction constants.

    Lattice sampling can only exhibit violations; the reported values
    are lower bounds on the true constants at resolution ``u_step``.
    """

    lipschitz: float
    growth: float
    u_step: float

    def summary(self) -> str:
        return (
            f"sampled lower bounds: lipschitz >= {self.lipschitz:.17g}, "
            f"growth >= {self.growth:.17g} (u lattice step {self.u_step:.3e})"
        )


def estimate_constants(
    shape: Nonlinearity,
    x: np.ndarray,
    u_range: tuple[float, float],
    n_samples: int = 101,
) -> EstimatedConstants:
    """Estimate Lipschitz and growth constants on a (u, x) lattice.

    The Lipschitz estimate maximises |dF|/|du| over adjacent lattice
    pairs (which dominates every wider secant); the growth estimate
    maximises (|F(u,x)| - offset(x)) / |u| away from u = 0.
    """
    lo, hi = float(u_range[0]), float(u_range[1])
    if not (np.isfinite(lo) and np.isfinite(hi) and hi > lo):
        raise ValueError(f"bad u_range {u_range!r}")
    if n_samples < 2:
        raise ValueError("need at least two u samples")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if shape.offset is not None and shape.offset.values.size != x.size:
        raise ValueError("x lattice does not match the offset field's grid")
    u = np.linspace(lo, hi, n_samples)
    table = np.empty((n_samples, x.size))
    for i, ui in enumerate(u):
        table[i] = apply_values(shape, np.full(x.size, ui), x)

    du = u[1] - u[0]
    lipschitz = float(np.max(np.abs(np.diff(table, axis=0)))) / du

    if shape.offset is not None:
        offset = shape.offset.values
    else:
        offset = np.abs(apply_values(shape, np.zeros(x.size), x))
    keep = np.abs(u) >= _GROWTH_FLOOR
    growth = 0.0
    if np.any(keep):
        excess = np.abs(table[keep]) - offset[np.newaxis, :]
        growth = float(np.max(excess / np.abs(u[keep])[:, np.newaxis]))
        growth = max(growth, 0.0)
    return EstimatedConstants(lipschitz=lipschitz, growth=growth, u_step=float(du))
