"""Uniform periodic grid and unitary-convention discrete Fourier transforms.

The computational domain is the symmetric interval [-L, L) sampled at N
equispaced points x_j = -L + j*dx with dx = 2L/N.  Spectral coefficients
live on the symmetric frequency set p_k = pi*k/L for k in
{-N/2, ..., N/2 - 1}, stored in increasing-k order, with frequency
spacing dp = pi/L.

Transforms use the unitary continuum convention

    fhat(p) = (2*pi)**-0.5 * integral f(x) * exp(-i*p*x) dx,

discretised by the rectangle rule on the grid:

    coeff(k) = dx / sqrt(2*pi) * sum_j f(x_j) * exp(-i*p_k*x_j)
    f(x_j)   = dp / sqrt(2*pi) * sum_k coeff(k) * exp(+i*p_k*x_j)

Because dx*dp*N = 2*pi these two sums are mutually inverse in exact
arithmetic, and the discrete Parseval identity

    dx * sum_j |f_j|**2 == dp * sum_k |coeff(k)|**2

holds exactly.  The rectangle-rule sum also gives the sharp sup bound
max_k |coeff(k)| <= dx * sum_j |f_j| / sqrt(2*pi) by the triangle
inequality, which downstream certification relies on.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

SQRT_TWO_PI = float(np.sqrt(2.0 * np.pi))

#: Fields and kernels must fall below this fraction of their peak amplitude
#: in the outer 10% of the interval (|x| >= 0.9*L) before results are trusted.
DEFAULT_TAIL_THRESHOLD = 1e-10
TAIL_INTERIOR_FRACTION = 0.9

#: Largest tolerated relative imaginary residue when a spectral field that
#: claims to represent real data is transformed back to physical space.
DEFAULT_IMAG_TOLERANCE = 1e-10


class TailDecayError(ValueError):
    """A field or kernel does not decay inside the truncated domain."""


class HermitianSymmetryError(ValueError):
    """Spectral data violates the conjugate symmetry of a real field."""


class GridMismatchError(ValueError):
    """Two objects defined on different grids were combined."""


@dataclass(frozen=True)
class SpectralGrid:
    """Periodic truncation [-L, L) with N points and its frequency set."""

    half_length: float
    n_points: int

    def __post_init__(self) -> None:
        if not (np.isfinite(self.half_length) and self.half_length > 0.0):
            raise ValueError(f"half_length must be positive and finite, got {self.half_length}")
        if self.n_points < 8 or self.n_points % 2 != 0:
            raise ValueError(f"n_points must be even and >= 8, got {self.n_points}")

    @property
    def dx(self) -> float:
        return 2.0 * self.half_length / self.n_points

    @property
    def dp(self) -> float:
        return float(np.pi) / self.half_length

    @cached_property
    def points(self) -> np.ndarray:
        """Physical nodes x_j = -L + j*dx, j = 0..N-1."""
        x = -self.half_length + self.dx * np.arange(self.n_points)
        x.flags.writeable = False
        return x

    @cached_property
    def frequencies(self) -> np.ndarray:
        """Frequencies p_k = pi*k/L in increasing order, k = -N/2..N/2-1."""
        k = np.arange(-self.n_points // 2, self.n_points // 2)
        p = self.dp * k
        p.flags.writeable = False
        return p

    @cached_property
    def _phase(self) -> np.ndarray:
        # exp(-i*p_k*x_j) = (-1)**k * exp(-2i*pi*j*k/N) because x_0 = -L, so
        # the standard FFT acquires an alternating sign on the shifted index.
        k = np.arange(-self.n_points // 2, self.n_points // 2)
        phase = np.where(k % 2 == 0, 1.0, -1.0)
        phase.flags.writeable = False
        return phase

    def field(self, values: np.ndarray) -> "FieldPhysical":
        return FieldPhysical(self, np.asarray(values, dtype=float))

    def sample(self, fn) -> "FieldPhysical":
        """Evaluate a callable on the grid points and wrap it as a field."""
        return self.field(np.asarray(fn(self.points), dtype=float))


def _read_only(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, copy=True)
    out.flags.writeable = False
    return out


@dataclass(frozen=True, eq=False)
class FieldPhysical:
    """Real field sampled on the grid points."""

    grid: SpectralGrid
    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.grid.n_points,):
            raise ValueError(
                f"field has {values.shape} values, grid has {self.grid.n_points} points"
            )
        if not np.all(np.isfinite(values)):
            raise ValueError("field contains non-finite entries")
        object.__setattr__(self, "values", _read_only(values))

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values)))


@dataclass(frozen=True, eq=False)
class FieldSpectral:
    """Complex coefficients on the symmetric frequency set."""

    grid: SpectralGrid
    coeffs: np.ndarray

    def __post_init__(self) -> None:
        coeffs = np.asarray(self.coeffs, dtype=complex)
        if coeffs.shape != (self.grid.n_points,):
            raise ValueError(
                f"field has {coeffs.shape} coefficients, grid has {self.grid.n_points} modes"
            )
        if not np.all(np.isfinite(coeffs)):
            raise ValueError("spectral field contains non-finite entries")
        object.__setattr__(self, "coeffs", _read_only(coeffs))

    def hermitian_residual(self) -> float:
        return hermitian_residual(self.coeffs)

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.coeffs)))


def require_same_grid(a, b, what: str = "operands") -> None:
    if a.grid != b.grid:
        raise GridMismatchError(f"{what} live on different grids: {a.grid} vs {b.grid}")


# -- raw-array transform kernels (shared by the batched trajectory code) -----


def forward_values(grid: SpectralGrid, values: np.ndarray) -> np.ndarray:
    """Discrete forward transform along the last axis of a value array."""
    spec = np.fft.fftshift(np.fft.fft(values, axis=-1), axes=-1)
    return (grid.dx / SQRT_TWO_PI) * grid._phase * spec


def inverse_coeffs(grid: SpectralGrid, coeffs: np.ndarray) -> np.ndarray:
    """Discrete inverse transform along the last axis; returns complex values."""
    interior = np.fft.ifft(np.fft.ifftshift(coeffs * grid._phase, axes=-1), axis=-1)
    return (grid.n_points * grid.dp / SQRT_TWO_PI) * interior


def fourier_forward(field: FieldPhysical) -> FieldSpectral:
    """Coefficients of a physical field under the unitary convention."""
    return FieldSpectral(field.grid, forward_values(field.grid, field.values))


def inverse_real(
    grid: SpectralGrid,
    coeffs: np.ndarray,
    *,
    imag_tolerance: float = DEFAULT_IMAG_TOLERANCE,
) -> np.ndarray:
    """Inverse transform of spectral data that must represent real fields.

    The imaginary residue left after the inverse transform is checked
    against ``imag_tolerance`` (relative to the data's amplitude) and
    then discarded; a larger residue signals corrupted spectral data.
    """
    complex_values = inverse_coeffs(grid, coeffs)
    imag_max = float(np.max(np.abs(complex_values.imag)))
    scale = float(np.max(np.abs(complex_values)))
    if scale > 0.0 and imag_max > imag_tolerance * scale:
        raise HermitianSymmetryError(
            f"imaginary residue {imag_max:.3e} exceeds {imag_tolerance:.1e} "
            f"of field amplitude {scale:.3e}; spectral data is not Hermitian"
        )
    return np.ascontiguousarray(complex_values.real)


def fourier_inverse(
    field: FieldSpectral, *, imag_tolerance: float = DEFAULT_IMAG_TOLERANCE
) -> FieldPhysical:
    """Physical values of a spectral field that represents real data."""
    return FieldPhysical(
        field.grid,
        inverse_real(field.grid, field.coeffs, imag_tolerance=imag_tolerance),
    )


def second_derivative(field: FieldPhysical) -> FieldPhysical:
    """Spectrally exact second derivative: coeff -> -p_k**2 * coeff -> inverse."""
    grid = field.grid
    coeffs = forward_values(grid, field.values)
    coeffs *= -(grid.frequencies**2)
    return fourier_inverse(FieldSpectral(grid, coeffs))


# -- Hermitian symmetry helpers ----------------------------------------------


def _conjugate_reflection(coeffs: np.ndarray) -> np.ndarray:
    """conj(coeff(-k)) arranged on the same index set as coeff(k).

    Index j holds k = j - N/2; its reflection partner -k sits at index
    N - j.  Index 0 (the unpaired -N/2 mode) and index N/2 (k = 0) are
    their own partners.
    """
    reflected = np.empty_like(coeffs)
    reflected[..., 0] = coeffs[..., 0]
    reflected[..., 1:] = coeffs[..., :0:-1]
    return np.conj(reflected)


def symmetrize_hermitian(coeffs: np.ndarray) -> np.ndarray:
    """Project spectral data onto the conjugate-symmetric (real-field) part."""
    return 0.5 * (coeffs + _conjugate_reflection(coeffs))


def hermitian_residual(coeffs: np.ndarray) -> float:
    """Relative departure from conjugate symmetry (0 for a real field)."""
    scale = float(np.max(np.abs(coeffs)))
    if scale == 0.0:
        return 0.0
    residual = float(np.max(np.abs(coeffs - symmetrize_hermitian(coeffs))))
    return residual / scale


# -- tail decay policy --------------------------------------------------------


def tail_fraction(field: FieldPhysical) -> float:
    """Peak amplitude in the outer 10% of the interval relative to the global peak."""
    grid = field.grid
    tail = np.abs(grid.points) >= TAIL_INTERIOR_FRACTION * grid.half_length
    peak = field.max_abs()
    if peak == 0.0:
        return 0.0
    return float(np.max(np.abs(field.values[tail]))) / peak


def check_tail_decay(
    field: FieldPhysical,
    threshold: float = DEFAULT_TAIL_THRESHOLD,
    what: str = "field",
) -> None:
    """Refuse fields that have not decayed by the edge of the truncated domain.

    Periodic truncation silently wraps mass across x = +-L; results are
    only certified when every supplied field is negligible there.
    """
    fraction = tail_fraction(field)
    if fraction > threshold:
        raise TailDecayError(
            f"{what} retains {fraction:.3e} of its peak amplitude in the outer "
            f"10% of [-L, L) (threshold {threshold:.1e}); enlarge the domain"
        )
