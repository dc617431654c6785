import os
from dataclasses import dataclass

DEFAULT_WORKERS = os.cpu_count() or 1


@dataclass
class VerificationConfig:
    """Numerical settings shared by the quadratures, the samplers and the verification suites."""

    quad_order: int = 32
    """Gauss-Legendre nodes per axis for surface and line integrals."""
    tol: float = 1e-6
    """Bound applied to quadrature-based residuals."""
    trials: int = 200
    """Number of seeded trials per space in a randomized suite."""
    seed: int = 42
    """Base seed; trial k draws from (seed + k) mod 2**64."""
    fd_step: float = 1e-5
    """Step of the 4th-order central difference along the fan base."""
    radius_cap: float = 0.8
    """Upper bound on the spectral norm of randomly sampled chart matrices."""
    collinear_tol: float = 1e-9
    """Absolute tolerance of the geodesic collinearity test."""
    workers: int = DEFAULT_WORKERS
    """Number of worker processes used by the verification suites, one per CPU by default."""
    max_resample: int = 100
    """How often a sampler may redraw a triangle outside the uniqueness domain."""
