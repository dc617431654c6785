"""Seeded randomized verification suites.

Each suite maps a trial function over a list of seeded trials and reduces the residuals in trial
order, so a report depends only on the configuration and never on scheduling.
"""

import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial
from typing import Callable, Dict, List, NamedTuple, Optional, Tuple

import numpy as np

from coherent_phase.coherent_phases import (
    bargmann_three_point,
    circular_distance,
    closed_form_area,
    phase_of,
    shape_invariant_check,
    triangle_report,
)
from coherent_phase.config import VerificationConfig
from coherent_phase.grassmann_geometry import GrassmannPoint, geodesic_between, overlap_kernel
from coherent_phase.holonomy_integrals import (
    ConnectionKind,
    QuadratureSpec,
    bundle_loop_integral,
    deformation_residual,
    loop_connection_integral,
    sphere_solid_angle_check,
    sphere_total_area,
    surface_area_quad,
)
from coherent_phase.internal.harness.random_source import (
    MASK64,
    Xoshiro256StarStar,
    random_point,
    random_triangle,
)
from coherent_phase.mat_core import (
    NumericalError,
    dagger,
    det,
    herm_eig,
    identity,
    max_abs,
    svd,
)
from coherent_phase.projective_embedding import cauchy_residual, plucker_embed
from coherent_phase.types import ComplexMatrix, JsonDict

logger = logging.getLogger("coherent_phase")

SPACES: List[Tuple[int, int]] = [(1, 1), (1, 2), (2, 2)]
"""(n, m) of G_1(C^2), G_1(C^3) and G_2(C^4)."""
KERNEL_MAX_SIZE = 6

CheckValues = Dict[str, float]


class TrialFailedException(NumericalError):
    """Thrown when a numerical error interrupts one seeded trial."""

    seed: int
    error_name: str

    def __init__(self, seed: int, error_name: str, detail: str):
        """Create the exception.

        :param seed: Seed of the interrupted trial.
        :param error_name: Class name of the underlying error.
        :param detail: Message of the underlying error.
        """
        super().__init__(f"Trial with seed {seed} failed with {error_name}: {detail}")
        self.seed = seed
        self.error_name = error_name
        self.detail = detail

    def __reduce__(self) -> Tuple[type, Tuple[int, str, str]]:
        """Pickle by constructor arguments, as trials may run in worker processes."""
        return self.__class__, (self.seed, self.error_name, self.detail)


class TrialJob(NamedTuple):
    """One seeded trial on one Grassmannian."""

    seed: int
    n: int
    m: int


@dataclass
class CheckFailure:
    """A residual that exceeded its bound."""

    seed: Optional[int]
    """Seed of the trial, None for deterministic checks."""
    check: str
    value: float
    bound: float

    def to_json_dict(self) -> JsonDict:
        """Serialize for the JSON report.

        :return: Dictionary with seed, check, value and bound.
        """
        return {"seed": self.seed, "check": self.check, "value": self.value, "bound": self.bound}


@dataclass
class VerifyReport:
    """Outcome of a verification suite."""

    suite: str
    trials: int
    max_residuals: Dict[str, float] = field(default_factory=dict)
    """Largest residual per check."""
    bounds: Dict[str, float] = field(default_factory=dict)
    failures: List[CheckFailure] = field(default_factory=list)
    wall_time_ms: int = 0

    @property
    def passed(self) -> bool:
        """Whether every residual stayed within its bound."""
        return not self.failures

    def merge(self, other: "VerifyReport") -> None:
        """Add the checks of another suite to this report.

        :param other: Report of another suite.
        """
        self.trials += other.trials
        self.max_residuals.update(other.max_residuals)
        self.bounds.update(other.bounds)
        self.failures.extend(other.failures)
        self.wall_time_ms += other.wall_time_ms

    def to_json_dict(self, include_timing: bool = False) -> JsonDict:
        """Serialize for the JSON report.

        :param include_timing: Whether to include wall_time_ms, which differs between runs.
        :return: Dictionary representation.
        """
        document: JsonDict = {
            "suite": self.suite,
            "passed": self.passed,
            "trials": self.trials,
            "max_residuals": dict(self.max_residuals),
            "bounds": dict(self.bounds),
            "failures": [failure.to_json_dict() for failure in self.failures],
        }
        if include_timing:
            document["wall_time_ms"] = self.wall_time_ms
        return document


def trial_seed(base_seed: int, index: int) -> int:
    """Seed of trial `index`.

    :param base_seed: Seed of the suite.
    :param index: Trial index.
    :return: (base_seed + index) mod 2**64.
    """
    return (base_seed + index) & MASK64


def cofactor_det(matrix: ComplexMatrix) -> complex:
    """Determinant by recursive cofactor expansion along the first row.

    :param matrix: Small square matrix.
    :return: The determinant.
    """
    size = matrix.shape[0]
    if size == 0:
        return complex(1.0)
    if size == 1:
        return complex(matrix[0, 0])
    total = complex(0.0)
    for column in range(size):
        minor = np.delete(matrix[1:], column, axis=1)
        sign = -1.0 if column % 2 else 1.0
        total += sign * complex(matrix[0, column]) * cofactor_det(minor)
    return total


def _quadrature(settings: VerificationConfig) -> QuadratureSpec:
    return QuadratureSpec(order=settings.quad_order, fd_step=settings.fd_step)


def _phase_area_trial(settings: VerificationConfig, job: TrialJob) -> CheckValues:
    rng = Xoshiro256StarStar(job.seed)
    x, y, z = random_triangle(
        job.n, job.m, rng, settings.radius_cap, with_origin=True, max_resample=settings.max_resample
    )
    area_quad = surface_area_quad(x, y, z, _quadrature(settings))
    phase = phase_of(bargmann_three_point(x, y, z))
    return {
        "phase_area": circular_distance(phase, -2.0 * area_quad),
        "closed_vs_quadrature": abs(closed_form_area(y, z) - area_quad),
    }


def _shape_trial(settings: VerificationConfig, job: TrialJob) -> CheckValues:
    rng = Xoshiro256StarStar(job.seed)
    x, y, z = random_triangle(
        job.n, job.m, rng, settings.radius_cap, max_resample=settings.max_resample
    )
    return {
        "shape_invariant": shape_invariant_check(x, y, z).residual_shape,
        "cauchy_formula": cauchy_residual(x, y, z),
    }


def _cauchy_binet_trial(settings: VerificationConfig, job: TrialJob) -> CheckValues:
    rng = Xoshiro256StarStar(job.seed)
    p = random_point(job.n, job.m, rng, settings.radius_cap)
    q = random_point(job.n, job.m, rng, settings.radius_cap)
    kernel = overlap_kernel(p, q)
    minor_sum = plucker_embed(p).inner(plucker_embed(q))
    return {"cauchy_binet": abs(kernel - minor_sum) / abs(kernel)}


def _stokes_trial(settings: VerificationConfig, job: TrialJob) -> CheckValues:
    rng = Xoshiro256StarStar(job.seed)
    x, y, z = random_triangle(
        job.n, job.m, rng, settings.radius_cap, max_resample=settings.max_resample
    )
    area_quad = surface_area_quad(x, y, z, _quadrature(settings))
    berry = loop_connection_integral(x, y, z, ConnectionKind.BERRY, settings.quad_order)
    bundle = bundle_loop_integral(x, y, z, settings.quad_order)
    return {
        "stokes": abs(berry - 2.0 * area_quad),
        "connection_choice": abs(bundle.real - berry),
        "bundle_imaginary": abs(bundle.imag),
    }


def _deformation_trial(settings: VerificationConfig, job: TrialJob) -> CheckValues:
    rng = Xoshiro256StarStar(job.seed)
    x, y, z = random_triangle(
        job.n, job.m, rng, settings.radius_cap, max_resample=settings.max_resample
    )
    return {"deformation": deformation_residual(x, y, z, _quadrature(settings)).spread}


def _collinear_trial(settings: VerificationConfig, job: TrialJob) -> CheckValues:
    rng = Xoshiro256StarStar(job.seed)
    start = random_point(job.n, job.m, rng, settings.radius_cap)
    end = random_point(job.n, job.m, rng, settings.radius_cap)
    segment = geodesic_between(start, end)
    parameters = sorted(rng.uniform() for _ in range(3))
    x, y, z = (segment.point_at(t) for t in parameters)
    phase = phase_of(bargmann_three_point(x, y, z))
    return {
        "collinear_phase": circular_distance(phase, 0.0),
        "collinear_area": abs(surface_area_quad(x, y, z, _quadrature(settings))),
    }


def _kernel_trial(settings: VerificationConfig, job: TrialJob) -> CheckValues:
    rng = Xoshiro256StarStar(job.seed)
    size, cols = job.n, job.m
    square = np.array(
        [[rng.complex_gaussian() for _ in range(size)] for _ in range(size)], dtype=np.complex128
    )
    rectangular = np.array(
        [[rng.complex_gaussian() for _ in range(cols)] for _ in range(size)], dtype=np.complex128
    )
    hermitian = 0.5 * (square + dagger(square))

    eig = herm_eig(hermitian)
    factors = svd(rectangular)
    oracle = cofactor_det(square)
    return {
        "eig_reconstruction": max_abs(eig.reconstruct() - hermitian),
        "eig_unitarity": max_abs(dagger(eig.vectors) @ eig.vectors - identity(size)),
        "svd_reconstruction": max_abs(factors.reconstruct() - rectangular),
        "svd_unitarity": max(
            max_abs(dagger(factors.u) @ factors.u - identity(factors.sigma.size)),
            max_abs(dagger(factors.v) @ factors.v - identity(factors.sigma.size)),
        ),
        "det_cofactor": abs(det(square) - oracle) / abs(oracle),
    }


def _guarded_trial(
    trial: Callable[[VerificationConfig, TrialJob], CheckValues],
    settings: VerificationConfig,
    job: TrialJob,
) -> CheckValues:
    try:
        return trial(settings, job)
    except NumericalError as error:
        if isinstance(error, TrialFailedException):
            raise
        raise TrialFailedException(job.seed, type(error).__name__, str(error)) from error


def run_trials(
    trial: Callable[[VerificationConfig, TrialJob], CheckValues],
    jobs: List[TrialJob],
    settings: VerificationConfig,
) -> List[CheckValues]:
    """Evaluate a trial function on every job, in job order.

    :param trial: Module level trial function.
    :param jobs: The seeded trials.
    :param settings: Numerical settings; `workers` > 1 evaluates in a process pool.
    :raises TrialFailedException: If a trial hits a numerical error.
    :return: Check values per job.
    """
    guarded = partial(_guarded_trial, trial, settings)
    if settings.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=settings.workers) as pool:
            return list(pool.map(guarded, jobs))
    return [guarded(job) for job in jobs]


def _reduce(
    suite: str,
    jobs: List[TrialJob],
    outcomes: List[CheckValues],
    bounds: Dict[str, float],
) -> VerifyReport:
    report = VerifyReport(suite=suite, trials=len(jobs), bounds=dict(bounds))
    for check in bounds:
        report.max_residuals[check] = 0.0
    for job, values in zip(jobs, outcomes):
        for check, value in values.items():
            bound = bounds[check]
            report.max_residuals[check] = max(report.max_residuals[check], value)
            if not math.isfinite(value) or value > bound:
                report.failures.append(
                    CheckFailure(seed=job.seed, check=check, value=value, bound=bound)
                )
    return report


def _cycled_jobs(settings: VerificationConfig, count: int) -> List[TrialJob]:
    return [
        TrialJob(trial_seed(settings.seed, index), *SPACES[index % len(SPACES)])
        for index in range(count)
    ]


def _per_space_jobs(settings: VerificationConfig) -> List[TrialJob]:
    jobs = []
    for space_index, (n, m) in enumerate(SPACES):
        for index in range(settings.trials):
            seed = trial_seed(settings.seed, space_index * settings.trials + index)
            jobs.append(TrialJob(seed, n, m))
    return jobs


def _seeded_suite(
    suite: str,
    trial: Callable[[VerificationConfig, TrialJob], CheckValues],
    jobs: List[TrialJob],
    bounds: Dict[str, float],
    settings: VerificationConfig,
) -> VerifyReport:
    return _reduce(suite, jobs, run_trials(trial, jobs, settings), bounds)


def phase_area_suite(settings: VerificationConfig) -> VerifyReport:
    """Phase against twice the quadrature area, and closed form against quadrature area.

    :param settings: Numerical settings.
    :return: The report.
    """
    bounds = {"phase_area": settings.tol, "closed_vs_quadrature": settings.tol}
    return _seeded_suite(
        "phase-area", _phase_area_trial, _per_space_jobs(settings), bounds, settings
    )


def shape_suite(settings: VerificationConfig) -> VerifyReport:
    """Shape invariant and Cauchy formula on triangles with arbitrary vertices.

    :param settings: Numerical settings.
    :return: The report.
    """
    bounds = {"shape_invariant": 1e-10, "cauchy_formula": 1e-10}
    return _seeded_suite("shape", _shape_trial, _per_space_jobs(settings), bounds, settings)


def cauchy_suite(settings: VerificationConfig) -> VerifyReport:
    """Overlap kernel against the sum over Pluecker minors on G_2(C^4).

    :param settings: Numerical settings.
    :return: The report.
    """
    jobs = [TrialJob(trial_seed(settings.seed, index), 2, 2) for index in range(settings.trials)]
    return _seeded_suite("cauchy", _cauchy_binet_trial, jobs, {"cauchy_binet": 1e-12}, settings)


def stokes_suite(settings: VerificationConfig) -> VerifyReport:
    """Connection loop integrals against the surface area.

    :param settings: Numerical settings.
    :return: The report.
    """
    bounds = {"stokes": settings.tol, "connection_choice": 1e-8, "bundle_imaginary": 1e-10}
    jobs = _cycled_jobs(settings, settings.trials)
    return _seeded_suite("stokes", _stokes_trial, jobs, bounds, settings)


def deformation_suite(settings: VerificationConfig) -> VerifyReport:
    """Fan areas with each vertex as the apex.

    :param settings: Numerical settings.
    :return: The report.
    """
    jobs = _cycled_jobs(settings, settings.trials)
    return _seeded_suite(
        "deformation", _deformation_trial, jobs, {"deformation": settings.tol}, settings
    )


def collinear_suite(settings: VerificationConfig) -> VerifyReport:
    """Triangles with three vertices on one geodesic.

    :param settings: Numerical settings.
    :return: The report.
    """
    bounds = {"collinear_phase": 1e-8, "collinear_area": 1e-8}
    jobs = _cycled_jobs(settings, max(1, settings.trials // 2))
    return _seeded_suite("collinear", _collinear_trial, jobs, bounds, settings)


def kernel_suite(settings: VerificationConfig) -> VerifyReport:
    """Reconstruction residuals of the eigensolver and the SVD, determinant against cofactors.

    :param settings: Numerical settings.
    :return: The report.
    """
    bounds = {
        "eig_reconstruction": 1e-12,
        "eig_unitarity": 1e-12,
        "svd_reconstruction": 1e-12,
        "svd_unitarity": 1e-12,
        "det_cofactor": 1e-12,
    }
    jobs = [
        TrialJob(
            trial_seed(settings.seed, index),
            1 + index % KERNEL_MAX_SIZE,
            1 + (index // KERNEL_MAX_SIZE) % KERNEL_MAX_SIZE,
        )
        for index in range(settings.trials)
    ]
    return _seeded_suite("kernel", _kernel_trial, jobs, bounds, settings)


def anchor_suite(settings: VerificationConfig) -> VerifyReport:
    """Exact values of the CP^1 triangle (0, 1, i) and of the sphere.

    :param settings: Numerical settings.
    :return: The report, with one deterministic evaluation.
    """
    origin = GrassmannPoint.origin(1, 1)
    one = GrassmannPoint.from_matrix([[1.0]])
    imaginary = GrassmannPoint.from_matrix([[1j]])
    report = triangle_report(origin, one, imaginary, settings.quad_order, settings.fd_step)
    assert report.phase is not None and report.area_closed is not None
    assert report.area_quad is not None and report.area_loop is not None
    values = {
        "anchor_phase": abs(report.phase - math.pi / 4),
        "anchor_area_closed": abs(report.area_closed + math.pi / 8),
        "anchor_area_quad": abs(report.area_quad + math.pi / 8),
        "anchor_loop": abs(2.0 * report.area_loop + math.pi / 4),
        "anchor_solid_angle": sphere_solid_angle_check(1.0, 1j).residual,
        "anchor_sphere_area": abs(sphere_total_area().area - math.pi),
    }
    bounds = {
        "anchor_phase": 1e-12,
        "anchor_area_closed": 1e-12,
        "anchor_area_quad": settings.tol,
        "anchor_loop": settings.tol,
        "anchor_solid_angle": 1e-8,
        "anchor_sphere_area": 1e-4,
    }
    report_values = _reduce("anchors", [TrialJob(settings.seed, 1, 1)], [values], bounds)
    for failure in report_values.failures:
        failure.seed = None
    return report_values


SUITES: Dict[str, Callable[[VerificationConfig], VerifyReport]] = {
    "anchors": anchor_suite,
    "kernel": kernel_suite,
    "phase-area": phase_area_suite,
    "shape": shape_suite,
    "cauchy": cauchy_suite,
    "stokes": stokes_suite,
    "deformation": deformation_suite,
    "collinear": collinear_suite,
}
SUITE_NAMES: Tuple[str, ...] = tuple(SUITES) + ("all",)


def run_suite(name: str, settings: VerificationConfig) -> VerifyReport:
    """Run a named suite, or every suite in registry order for "all".

    :param name: Suite name from SUITE_NAMES.
    :param settings: Numerical settings.
    :raises TrialFailedException: If a trial hits a numerical error.
    :return: The report.
    """
    if name not in SUITE_NAMES:
        raise ValueError(f"Unknown suite '{name}'.")
    names = list(SUITES) if name == "all" else [name]
    report = VerifyReport(suite=name, trials=0)
    for suite_name in names:
        logger.info("Running suite %s with %s trials", suite_name, settings.trials)
        started = time.perf_counter()
        suite_report = SUITES[suite_name](settings)
        suite_report.wall_time_ms = int(round((time.perf_counter() - started) * 1000))
        logger.info(
            "Suite %s finished in %s ms with %s failures",
            suite_name,
            suite_report.wall_time_ms,
            len(suite_report.failures),
        )
        for failure in suite_report.failures:
            logger.warning(
                "Check %s failed for seed %s: %s > %s",
                failure.check,
                failure.seed,
                failure.value,
                failure.bound,
            )
        report.merge(suite_report)
    return report
