"""Certified pseudospectral solver for doubly nonlocal dynamics on the line.

The evolution combines a nonlocal diffusion convolution, transport, a
local linear rate, and a production convolution applied to a pointwise
reaction:

    du/dt = (J * u) + b * du/dx + a * u + G * F(u, .)

Everything is solved in spectral variables on a periodic truncation of
the line.  Before any solve, the library evaluates an explicit
contraction certificate; when it passes, Picard iteration provably
converges to the unique fixed point and every measured convergence
ratio is checked against the certified bound while iterating.
"""

__version__ = "0.1.0"

from .fixedpoint import (
    Certificate,
    ContractionBreachError,
    PicardConvergenceError,
    PicardReport,
    UncertifiedError,
    certify,
    contraction_constant,
    global_solve,
    max_certified_horizon,
    nontriviality_check,
    picard_solve,
)
from .grid import (
    FieldPhysical,
    FieldSpectral,
    GridMismatchError,
    HermitianSymmetryError,
    SpectralGrid,
    TailDecayError,
    fourier_forward,
    fourier_inverse,
    second_derivative,
)
from .kernels import (
    Kernel,
    KernelPair,
    KernelValidationReport,
    production_gain,
    second_derivative_l1,
    validate_kernels,
)
from .nonlinearity import EstimatedConstants, Nonlinearity, estimate_constants, f0_spectrum
from .norms import SpacetimeNormReport, h2_norm, l2_slice, spacetime_norm
from .propagation import (
    KernelAdmissibilityError,
    ModelParams,
    PropagatorTable,
    Trajectory,
    build_propagator,
    forced_evolution,
    free_evolution,
    subsample_trajectory,
)

__all__ = [
    "__version__",
    "Certificate",
    "ContractionBreachError",
    "EstimatedConstants",
    "FieldPhysical",
    "FieldSpectral",
    "GridMismatchError",
    "HermitianSymmetryError",
    "Kernel",
    "KernelAdmissibilityError",
    "KernelPair",
    "KernelValidationReport",
    "ModelParams",
    "Nonlinearity",
    "PicardConvergenceError",
    "PicardReport",
    "PropagatorTable",
    "SpacetimeNormReport",
    "SpectralGrid",
    "TailDecayError",
    "Trajectory",
    "UncertifiedError",
    "build_propagator",
    "certify",
    "contraction_constant",
    "estimate_constants",
    "f0_spectrum",
    "forced_evolution",
    "fourier_forward",
    "fourier_inverse",
    "free_evolution",
    "global_solve",
    "h2_norm",
    "l2_slice",
    "max_certified_horizon",
    "nontriviality_check",
    "picard_solve",
    "production_gain",
    "second_derivative",
    "second_derivative_l1",
    "spacetime_norm",
    "subsample_trajectory",
    "validate_kernels",
]
