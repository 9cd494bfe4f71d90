"""Contraction certificate, Picard iteration, and horizon chaining.

The solver map (linear flow forced by the reaction along the input
trajectory) is Lipschitz in the space-time energy norm with constant

    kappa = gain * lipschitz
          * sqrt(T**2 * exp(2*a*T) * (1 + 2*(a + |b| + l1(J))**2) + 2),

where ``gain`` is the production kernel's gain, ``lipschitz`` the
reaction's Lipschitz constant, ``a`` the linear rate, ``b`` the
transport speed, ``l1(J)`` the diffusion kernel's L1 norm and ``T`` the
horizon.  When kappa < 1 the map is a contraction: Picard iteration
started from the free evolution converges geometrically to the unique
fixed point, and every measured residual ratio must stay below kappa.
That inequality is checked while iterating — a persistent violation
means the discretisation no longer honours the analysis and is
surfaced as an error rather than ignored.

kappa grows monotonically with T, so horizons too long to certify in
one piece are covered by chaining certified windows, restarting each
window from the previous terminal slice.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .grid import FieldPhysical, SpectralGrid
from .kernels import Kernel, KernelPair, production_gain
from .nonlinearity import Nonlinearity, f0_spectrum
from .norms import spacetime_norm
from .propagation import ModelParams, Trajectory, forced_evolution, free_evolution

DEFAULT_TOLERANCE = 1e-10
DEFAULT_MAX_ITER = 50
DEFAULT_RATIO_SLACK = 0.05
DEFAULT_SUPPORT_THRESHOLD = 1e-8


class UncertifiedError(RuntimeError):
    """Solving was requested without a passing contraction certificate."""


class PicardConvergenceError(RuntimeError):
    """The iteration hit max_iter before the residual reached tolerance."""

    def __init__(self, message: str, residuals: tuple[float, ...]):
        super().__init__(message)
        self.residuals = residuals


class ContractionBreachError(RuntimeError):
    """Measured ratios persistently exceeded the certified contraction bound.

    This signals an inconsistent discretisation (or corrupted inputs),
    not a property of the underlying dynamics.
    """

    def __init__(self, message: str, residuals: tuple[float, ...], ratios: tuple[float, ...]):
        super().__init__(message)
        self.residuals = residuals
        self.ratios = ratios


def contraction_constant(
    gain: float,
    lipschitz: float,
    linear_rate: float,
    transport_speed: float,
    diffusion_l1: float,
    horizon: float,
) -> float:
    """The certified Lipschitz constant of the solver map on [0, T]."""
    if not (np.isfinite(gain) and gain > 0.0):
        raise ValueError(f"gain must be positive, got {gain}")
    if not (np.isfinite(lipschitz) and lipschitz > 0.0):
        raise ValueError(f"lipschitz must be positive, got {lipschitz}")
    if not (np.isfinite(linear_rate) and linear_rate >= 0.0):
        raise ValueError(f"linear_rate must be >= 0, got {linear_rate}")
    if not np.isfinite(transport_speed):
        raise ValueError(f"transport_speed must be finite, got {transport_speed}")
    if not (np.isfinite(diffusion_l1) and diffusion_l1 > 0.0):
        raise ValueError(f"diffusion_l1 must be positive, got {diffusion_l1}")
    if not (np.isfinite(horizon) and horizon > 0.0):
        raise ValueError(f"horizon must be positive, got {horizon}")
    speeds = linear_rate + abs(transport_speed) + diffusion_l1
    inner = horizon**2 * math.exp(2.0 * linear_rate * horizon) * (1.0 + 2.0 * speeds**2) + 2.0
    return gain * lipschitz * math.sqrt(inner)


def max_certified_horizon(
    gain: float,
    lipschitz: float,
    linear_rate: float,
    transport_speed: float,
    diffusion_l1: float,
    margin: float = 0.0,
) -> Optional[float]:
    """Largest horizon T with kappa(T) <= 1 - margin, or None if none exists.

    kappa decreases to gain*lipschitz*sqrt(2) as T -> 0 and increases
    strictly with T, so the answer is a single bisection away.  ``None``
    means even arbitrarily short horizons fail.
    """
    if not (0.0 <= margin < 1.0):
        raise ValueError(f"margin must lie in [0, 1), got {margin}")
    target = 1.0 - margin

    def kappa(horizon: float) -> float:
        return contraction_constant(
            gain, lipschitz, linear_rate, transport_speed, diffusion_l1, horizon
        )

    if gain * lipschitz * math.sqrt(2.0) >= target:
        return None
    lo = 0.0
    hi = 1.0
    while kappa(hi) <= target:
        lo = hi
        hi *= 2.0
        if not math.isfinite(hi):  # pragma: no cover - absurd parameters
            return lo
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if kappa(mid) <= target:
            lo = mid
        else:
            hi = mid
    return lo


def nontriviality_check(
    reaction: Nonlinearity,
    production: Kernel,
    grid: SpectralGrid,
    rel_threshold: float = DEFAULT_SUPPORT_THRESHOLD,
) -> tuple[bool, float]:
    """Do the spectra of F(0, .) and the production kernel overlap?

    The discrete support of a spectrum is the set of frequencies whose
    coefficient magnitude exceeds ``rel_threshold`` times the spectrum's
    peak.  Returns (overlap nonempty, dp * overlap cardinality).  A zero
    overlap means the forcing seen from the zero state never excites a
    frequency the production kernel passes — stationarity of a trivial
    state is then a structural fact, not a numerical accident.
    """
    f0 = np.abs(f0_spectrum(reaction, grid).coeffs)
    g = np.abs(production.symbol.coeffs)
    f0_support = f0 > rel_threshold * (np.max(f0) if f0.size else 0.0)
    g_support = g > rel_threshold * (np.max(g) if g.size else 0.0)
    if np.max(f0) == 0.0:
        f0_support = np.zeros_like(f0_support)
    if np.max(g) == 0.0:
        g_support = np.zeros_like(g_support)
    overlap = int(np.count_nonzero(f0_support & g_support))
    measure = grid.dp * overlap
    return measure > 0.0, measure


@dataclass(frozen=True)
class Certificate:
    """Everything the contraction argument needs, evaluated for one setup.

    ``contraction`` is kappa for the requested horizon; ``passes`` asks
    kappa < 1.  ``certified_horizon`` is the largest horizon the same
    constants certify (None when even T -> 0 fails; inf when the
    reaction has Lipschitz constant 0 and every horizon works).  The
    support fields report the spectral overlap diagnostic.  The
    certificate depends only on scalar constants, never on the initial
    condition.
    """

    gain: float
    lipschitz: float
    growth: float
    linear_rate: float
    transport_speed: float
    horizon: float
    diffusion_l1: float
    contraction: float
    passes: bool
    certified_horizon: Optional[float]
    nontrivial_support: bool
    support_overlap: float


def certify(
    grid: SpectralGrid,
    params: ModelParams,
    pair: KernelPair,
    reaction: Nonlinearity,
    *,
    margin: float = 0.0,
    support_threshold: float = DEFAULT_SUPPORT_THRESHOLD,
) -> Certificate:
    """Evaluate the contraction certificate for one problem setup."""
    gain = pair.gain
    lipschitz = reaction.lipschitz
    if lipschitz > 0.0:
        kappa = contraction_constant(
            gain,
            lipschitz,
            params.linear_rate,
            params.transport_speed,
            pair.diffusion.l1_norm,
            params.horizon,
        )
        horizon = max_certified_horizon(
            gain,
            lipschitz,
            params.linear_rate,
            params.transport_speed,
            pair.diffusion.l1_norm,
            margin,
        )
    else:
        # A reaction that does not depend on the state: the solver map is
        # constant in its trajectory argument, so every horizon contracts.
        kappa = 0.0
        horizon = math.inf
    nontrivial, overlap = nontriviality_check(
        reaction, pair.production, grid, support_threshold
    )
    return Certificate(
        gain=gain,
        lipschitz=lipschitz,
        growth=reaction.growth,
        linear_rate=params.linear_rate,
        transport_speed=params.transport_speed,
        horizon=params.horizon,
        diffusion_l1=pair.diffusion.l1_norm,
        contraction=kappa,
        passes=kappa < 1.0,
        certified_horizon=horizon,
        nontrivial_support=nontrivial,
        support_overlap=overlap,
    )


@dataclass(frozen=True)
class PicardReport:
    """Residual history of one Picard run in the space-time energy norm."""

    converged: bool
    iterations: int
    residuals: tuple[float, ...]
    ratios: tuple[float, ...]
    final_residual: float
    tolerance: float
    contraction_bound: float
    ratio_slack: float


def picard_solve(
    params: ModelParams,
    diffusion: Kernel,
    production: Kernel,
    reaction: Nonlinearity,
    u0: FieldPhysical,
    *,
    tol: float = DEFAULT_TOLERANCE,
    max_iter: int = DEFAULT_MAX_ITER,
    ratio_slack: float = DEFAULT_RATIO_SLACK,
    require_certified: bool = True,
    validate_kernel: bool = True,
    threads: int = 1,
    initial_guess: Optional[Trajectory] = None,
) -> tuple[Trajectory, PicardReport]:
    """Iterate the solver map to its fixed point on one horizon.

    Starts from the free evolution of ``u0`` (or ``initial_guess``) and
    stops once consecutive iterates differ by at most ``tol`` in the
    space-time energy norm; the returned trajectory then satisfies the
    fixed-point residual bound kappa * tol.  With ``require_certified``
    (the default) a failing certificate aborts before any iteration.
    Residual ratios above kappa * (1 + ratio_slack) for three
    consecutive iterations raise :class:`ContractionBreachError`.
    """
    gain = production_gain(production)
    lipschitz = reaction.lipschitz
    if lipschitz > 0.0:
        kappa = contraction_constant(
            gain,
            lipschitz,
            params.linear_rate,
            params.transport_speed,
            diffusion.l1_norm,
            params.horizon,
        )
    else:
        kappa = 0.0
    if require_certified and kappa >= 1.0:
        raise UncertifiedError(
            f"contraction constant {kappa:.6g} >= 1 for horizon {params.horizon:.6g}; "
            "shorten the horizon (or chain windows) instead of iterating blind"
        )

    if initial_guess is None:
        current = free_evolution(params, diffusion, u0, validate=validate_kernel)
    else:
        if initial_guess.grid != u0.grid or initial_guess.params != params:
            raise ValueError("initial guess does not match the requested discretisation")
        current = initial_guess

    residuals: list[float] = []
    ratios: list[float] = []
    breaches = 0
    for _ in range(max_iter):
        updated = forced_evolution(
            params,
            diffusion,
            production,
            reaction,
            u0,
            current,
            threads=threads,
            validate=validate_kernel,
        )
        residual = spacetime_norm(updated - current).total
        if residuals and residuals[-1] > 0.0:
            ratio = residual / residuals[-1]
            ratios.append(ratio)
            if residual > tol and ratio > kappa * (1.0 + ratio_slack):
                breaches += 1
                if breaches >= 3:
                    raise ContractionBreachError(
                        f"residual ratio {ratio:.6g} exceeded the certified bound "
                        f"{kappa:.6g} (slack {ratio_slack:.2%}) three times in a row; "
                        "the discretisation is inconsistent with the certificate",
                        tuple(residuals + [residual]),
                        tuple(ratios),
                    )
            else:
                breaches = 0
        residuals.append(residual)
        current = updated
        if residual <= tol:
            return current, PicardReport(
                converged=True,
                iterations=len(residuals),
                residuals=tuple(residuals),
                ratios=tuple(ratios),
                final_residual=residual,
                tolerance=tol,
                contraction_bound=kappa,
                ratio_slack=ratio_slack,
            )
    raise PicardConvergenceError(
        f"no convergence to {tol:.1e} within {max_iter} iterations "
        f"(last residual {residuals[-1]:.6e})",
        tuple(residuals),
    )


def global_solve(
    window_params: ModelParams,
    diffusion: Kernel,
    production: Kernel,
    reaction: Nonlinearity,
    u0: FieldPhysical,
    n_windows: int,
    *,
    tol: float = DEFAULT_TOLERANCE,
    max_iter: int = DEFAULT_MAX_ITER,
    ratio_slack: float = DEFAULT_RATIO_SLACK,
    require_certified: bool = True,
    validate_kernel: bool = True,
    threads: int = 1,
) -> tuple[Trajectory, tuple[PicardReport, ...]]:
    """Chain certified windows to cover a horizon of n_windows * T.

    Each window restarts from the previous terminal slice.  Shared
    endpoint slices are stored once: the combined trajectory keeps the
    earlier window's version of each seam slice.
    """
    if n_windows < 1:
        raise ValueError(f"n_windows must be >= 1, got {n_windows}")
    values_parts: list[np.ndarray] = []
    coeffs_parts: list[np.ndarray] = []
    dudt_parts: list[np.ndarray] = []
    reports: list[PicardReport] = []
    state = u0
    for window in range(n_windows):
        trajectory, report = picard_solve(
            window_params,
            diffusion,
            production,
            reaction,
            state,
            tol=tol,
            max_iter=max_iter,
            ratio_slack=ratio_slack,
            require_certified=require_certified,
            validate_kernel=validate_kernel,
            threads=threads,
        )
        reports.append(report)
        start = 0 if window == 0 else 1
        values_parts.append(trajectory.values[start:])
        coeffs_parts.append(trajectory.coeffs[start:])
        dudt_parts.append(trajectory.dudt[start:])
        state = trajectory.terminal_slice()
    combined = ModelParams(
        linear_rate=window_params.linear_rate,
        transport_speed=window_params.transport_speed,
        horizon=n_windows * window_params.horizon,
        n_steps=n_windows * window_params.n_steps,
    )
    trajectory = Trajectory(
        u0.grid,
        combined,
        np.concatenate(values_parts, axis=0),
        np.concatenate(coeffs_parts, axis=0),
        np.concatenate(dudt_parts, axis=0),
    )
    return trajectory, tuple(reports)
