"""Convolution kernels of the evolution and their admissibility checks.

Two kernels drive the dynamics: a *diffusion* kernel that redistributes
the existing density (entering through its Fourier symbol in the linear
propagator) and a *production* kernel that redistributes newly produced
density (convolved with the reaction term).  Admissibility asks for

* integrable kernels (finite discrete L1 norms, nontrivial),
* a diffusion symbol with non-positive real part at every grid
  frequency, so the linear semigroup never amplifies a mode beyond the
  explicit exp(a*t) rate, and
* an integrable second derivative of the production kernel, whose L1
  norm controls how the convolution damps curvature.

The *gain* of the production kernel,

    gain = sqrt(l1(G)**2 + l1(G'')**2),

is the single constant through which the kernel enters the contraction
certificate.

Built-in shapes: Gaussian bumps of either sign, the two-sided
exponential (Laplace) kernel, and tabulated samples.  The Laplace kernel
has a distributional second derivative (a point mass at the origin), so
it is admissible as a diffusion kernel candidate only; asking for its
second-derivative norm raises.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .grid import (
    DEFAULT_TAIL_THRESHOLD,
    FieldPhysical,
    FieldSpectral,
    SpectralGrid,
    check_tail_decay,
    fourier_forward,
    fourier_inverse,
    require_same_grid,
)

DEFAULT_SYMBOL_SIGN_TOLERANCE = 1e-12


def discrete_l1(grid: SpectralGrid, values: np.ndarray) -> float:
    """Rectangle-rule L1 norm dx * sum_j |f_j|."""
    return grid.dx * float(np.sum(np.abs(values)))


@dataclass(frozen=True, eq=False)
class Kernel:
    """A convolution kernel sampled on the grid, with its Fourier symbol.

    ``symbol`` holds the unitary-convention transform of the samples, the
    quantity that multiplies (up to sqrt(2*pi)) inside the propagator.
    ``second_derivative`` holds grid samples of the analytic second
    derivative for closed-form shapes and of the spectral second
    derivative for tabulated ones; it is absent when the shape has no
    integrable second derivative.
    """

    grid: SpectralGrid
    kind: str
    phys: FieldPhysical
    symbol: FieldSpectral
    l1_norm: float
    second_derivative: Optional[FieldPhysical]
    second_derivative_l1_norm: Optional[float]

    # -- constructors ---------------------------------------------------------

    @classmethod
    def _build(
        cls,
        grid: SpectralGrid,
        kind: str,
        values: np.ndarray,
        second_derivative_values: Optional[np.ndarray],
        tail_threshold: float,
    ) -> "Kernel":
        phys = FieldPhysical(grid, values)
        check_tail_decay(phys, tail_threshold, what=f"{kind} kernel")
        second: Optional[FieldPhysical] = None
        second_l1: Optional[float] = None
        if second_derivative_values is not None:
            second = FieldPhysical(grid, second_derivative_values)
            check_tail_decay(second, tail_threshold, what=f"{kind} kernel second derivative")
            second_l1 = discrete_l1(grid, second.values)
        return cls(
            grid=grid,
            kind=kind,
            phys=phys,
            symbol=fourier_forward(phys),
            l1_norm=discrete_l1(grid, phys.values),
            second_derivative=second,
            second_derivative_l1_norm=second_l1,
        )

    @classmethod
    def gaussian(
        cls,
        grid: SpectralGrid,
        amplitude: float,
        width: float,
        *,
        tail_threshold: float = DEFAULT_TAIL_THRESHOLD,
    ) -> "Kernel":
        """amplitude * exp(-x**2 / (2*width**2))."""
        values, second = _gaussian_samples(grid, amplitude, width)
        return cls._build(grid, "gaussian", values, second, tail_threshold)

    @classmethod
    def negative_gaussian(
        cls,
        grid: SpectralGrid,
        amplitude: float,
        width: float,
        *,
        tail_threshold: float = DEFAULT_TAIL_THRESHOLD,
    ) -> "Kernel":
        """-amplitude * exp(-x**2 / (2*width**2)); admissible diffusion shape."""
        values, second = _gaussian_samples(grid, amplitude, width)
        return cls._build(grid, "negative_gaussian", -values, -second, tail_threshold)

    @classmethod
    def laplace(
        cls,
        grid: SpectralGrid,
        amplitude: float,
        scale: float,
        *,
        tail_threshold: float = DEFAULT_TAIL_THRESHOLD,
    ) -> "Kernel":
        """amplitude * exp(-|x|/scale).

        The second derivative of exp(-|x|/scale) carries a point mass at
        the origin, so no second-derivative samples are stored.
        """
        if amplitude <= 0.0 or scale <= 0.0:
            raise ValueError("laplace kernel needs amplitude > 0 and scale > 0")
        values = amplitude * np.exp(-np.abs(grid.points) / scale)
        return cls._build(grid, "laplace", values, None, tail_threshold)

    @classmethod
    def tabulated(
        cls,
        grid: SpectralGrid,
        values: np.ndarray,
        *,
        tail_threshold: float = DEFAULT_TAIL_THRESHOLD,
    ) -> "Kernel":
        """Kernel given directly by its grid samples.

        The second derivative is reconstructed spectrally, which is the
        only route available without a closed form.
        """
        phys = FieldPhysical(grid, np.asarray(values, dtype=float))
        second = _spectral_second_derivative_values(phys)
        return cls._build(grid, "tabulated", phys.values, second, tail_threshold)

    @classmethod
    def from_file(
        cls,
        grid: SpectralGrid,
        path,
        *,
        tail_threshold: float = DEFAULT_TAIL_THRESHOLD,
    ) -> "Kernel":
        """Load a tabulated kernel from two-column text (x, value).

        Lines starting with '#' are comments.  The x column must
        reproduce the grid points exactly.
        """
        values = load_field_text(grid, path)
        return cls.tabulated(grid, values, tail_threshold=tail_threshold)

    # -- queries ---------------------------------------------------------------

    def max_real_symbol(self) -> tuple[float, float]:
        """(max_k Re symbol(p_k), frequency attaining it)."""
        real = self.symbol.coeffs.real
        worst = int(np.argmax(real))
        return float(real[worst]), float(self.grid.frequencies[worst])


def _gaussian_samples(
    grid: SpectralGrid, amplitude: float, width: float
) -> tuple[np.ndarray, np.ndarray]:
    if amplitude <= 0.0 or width <= 0.0:
        raise ValueError("gaussian kernel needs amplitude > 0 and width > 0")
    x = grid.points
    bump = np.exp(-(x**2) / (2.0 * width**2))
    values = amplitude * bump
    second = (amplitude / width**2) * ((x / width) ** 2 - 1.0) * bump
    return values, second


def _spectral_second_derivative_values(phys: FieldPhysical) -> np.ndarray:
    grid = phys.grid
    coeffs = fourier_forward(phys).coeffs * -(grid.frequencies**2)
    return fourier_inverse(FieldSpectral(grid, coeffs)).values


def load_field_text(grid: SpectralGrid, path) -> np.ndarray:
    """Read two-column (x, value) text and check x against the grid points."""
    data = np.loadtxt(path, comments="#", ndmin=2)
    if data.ndim != 2 or data.shape[1] != 2:
        raise ValueError(f"{path}: expected two columns (x, value), got shape {data.shape}")
    if data.shape[0] != grid.n_points:
        raise ValueError(
            f"{path}: {data.shape[0]} rows but the grid has {grid.n_points} points"
        )
    atol = 1e-12 * max(1.0, grid.half_length)
    if not np.allclose(data[:, 0], grid.points, rtol=0.0, atol=atol):
        worst = int(np.argmax(np.abs(data[:, 0] - grid.points)))
        raise ValueError(
            f"{path}: x column does not match the grid (first mismatch near row {worst}: "
            f"{data[worst, 0]!r} vs {grid.points[worst]!r})"
        )
    return data[:, 1]


def second_derivative_l1(kernel: Kernel) -> float:
    """Discrete L1 norm of the kernel's second derivative.

    Raises for shapes whose second derivative is not an integrable
    function (the Laplace kernel).
    """
    if kernel.second_derivative_l1_norm is None:
        raise ValueError(
            f"{kernel.kind} kernel has no integrable second derivative; "
            "it cannot serve as a production kernel"
        )
    return kernel.second_derivative_l1_norm


def production_gain(kernel: Kernel) -> float:
    """sqrt(l1**2 + l1(second derivative)**2), the certificate's kernel constant."""
    return float(np.hypot(kernel.l1_norm, second_derivative_l1(kernel)))


@dataclass(frozen=True, eq=False)
class KernelPair:
    """Diffusion and production kernels on a shared grid, with the gain."""

    diffusion: Kernel
    production: Kernel
    gain: float

    def __post_init__(self) -> None:
        require_same_grid(self.diffusion, self.production, "diffusion and production kernels")
        expected = production_gain(self.production)
        if not np.isclose(self.gain, expected, rtol=1e-12, atol=0.0):
            raise ValueError(f"gain {self.gain!r} inconsistent with kernels ({expected!r})")

    @classmethod
    def build(cls, diffusion: Kernel, production: Kernel) -> "KernelPair":
        return cls(diffusion, production, production_gain(production))

    @property
    def grid(self) -> SpectralGrid:
        return self.diffusion.grid


@dataclass(frozen=True)
class KernelValidationReport:
    """Outcome of the admissibility checks on a kernel pair."""

    max_real_diffusion_symbol: float
    worst_frequency: float
    sign_tolerance: float
    diffusion_sign_ok: bool
    diffusion_nontrivial: bool
    production_nontrivial: bool
    production_l1: float
    production_second_derivative_l1: Optional[float]
    passed: bool

    def summary(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        lines = [
            f"kernel admissibility: {verdict}",
            f"  max Re diffusion symbol = {self.max_real_diffusion_symbol:.17g} "
            f"at p = {self.worst_frequency:.17g} (tolerance {self.sign_tolerance:.1e})",
            f"  diffusion nontrivial: {self.diffusion_nontrivial}",
            f"  production nontrivial: {self.production_nontrivial}",
            f"  production L1 = {self.production_l1:.17g}",
        ]
        if self.production_second_derivative_l1 is None:
            lines.append("  production second derivative: not integrable")
        else:
            lines.append(
                f"  production second derivative L1 = "
                f"{self.production_second_derivative_l1:.17g}"
            )
        return "\n".join(lines)


def validate_kernels(
    diffusion: Kernel,
    production: Kernel,
    tol: float = DEFAULT_SYMBOL_SIGN_TOLERANCE,
) -> KernelValidationReport:
    """Check the admissibility of a kernel pair at the grid frequencies.

    The diffusion symbol's real part may exceed zero only by ``tol``,
    which absorbs the rounding of the discrete transform; a genuinely
    positive symbol fails and is reported with the offending frequency.
    """
    require_same_grid(diffusion, production, "diffusion and production kernels")
    max_real, worst_frequency = diffusion.max_real_symbol()
    sign_ok = max_real <= tol
    diffusion_nontrivial = diffusion.l1_norm > 0.0
    production_nontrivial = production.l1_norm > 0.0

    second_l1 = production.second_derivative_l1_norm
    second_ok = second_l1 is not None and np.isfinite(second_l1)

    passed = bool(
        sign_ok
        and diffusion_nontrivial
        and production_nontrivial
        and np.isfinite(production.l1_norm)
        and second_ok
    )
    return KernelValidationReport(
        max_real_diffusion_symbol=max_real,
        worst_frequency=worst_frequency,
        sign_tolerance=tol,
        diffusion_sign_ok=sign_ok,
        diffusion_nontrivial=diffusion_nontrivial,
        production_nontrivial=production_nontrivial,
        production_l1=production.l1_norm,
        production_second_derivative_l1=second_l1,
        passed=passed,
    )
