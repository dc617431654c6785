"""Command line harness: single computations and verification suites with JSON output.

Exit status 0 means success with every residual within its bound, 1 a failed check or a numerical
error, 2 invalid input. The JSON document always goes to standard output and logs to standard
error.
"""

import argparse
import json
import logging
import math
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, TextIO

import numpy as np

from coherent_phase.coherent_phases import (
    closed_form_area,
    closed_form_phase,
    fold_phase,
    normalized_overlap,
    triangle_report,
)
from coherent_phase.grassmann_geometry import (
    cayley_distance,
    geodesic_between,
    geodesic_velocity,
    overlap_kernel,
)
from coherent_phase.holonomy_integrals import (
    ConnectionKind,
    QuadratureSpec,
    bundle_loop_integral,
    loop_connection_integral,
    sphere_solid_angle_check,
    sphere_total_area,
    surface_area_quad,
)
from coherent_phase.internal.common.config import EnvVerificationConfig
from coherent_phase.internal.harness.job_spec import (
    JobCommand,
    JobSpec,
    JobSpecException,
    load_json_config,
)
from coherent_phase.internal.harness.verify_suites import (
    SUITE_NAMES,
    TrialFailedException,
    run_suite,
)
from coherent_phase.mat_core import (
    DimensionError,
    NonFiniteEntryError,
    NotHermitianError,
    NumericalError,
)
from coherent_phase.projective_embedding import ZeroVectorError, plucker_embed
from coherent_phase.types import ComplexMatrix, JsonDict, JsonValue

logger = logging.getLogger("coherent_phase")

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_INPUT_ERROR = 2

SHAPE_BOUND = 1e-10
CONNECTION_BOUND = 1e-8
BUNDLE_RESIDUE_BOUND = 1e-10
SOLID_ANGLE_BOUND = 1e-8
SPHERE_AREA_BOUND = 1e-4

INPUT_ERRORS = (
    JobSpecException,
    DimensionError,
    NonFiniteEntryError,
    NotHermitianError,
    ZeroVectorError,
)


@dataclass
class JobOutcome:
    """Exit status and JSON document of one job."""

    exit_code: int
    document: JsonDict
    report_text: Optional[str] = None
    """Report body the verify command writes to its report file."""


def complex_pair(value: complex) -> List[float]:
    """Encode a complex number as [re, im].

    :param value: The number.
    :return: Two floats.
    """
    return [float(value.real), float(value.imag)]


def json_matrix(matrix: ComplexMatrix) -> List[List[List[float]]]:
    """Encode a matrix as rows of [re, im] pairs.

    :param matrix: The matrix.
    :return: Nested lists.
    """
    return [[complex_pair(complex(entry)) for entry in row] for row in matrix]


def _finite(value: Any) -> JsonValue:
    """Replace non-finite floats, which JSON cannot represent, by None."""
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, dict):
        return {key: _finite(item) for key, item in value.items()}
    if isinstance(value, list):
        return [_finite(item) for item in value]
    return value  # type: ignore[no-any-return]


def render(document: JsonDict) -> str:
    """Serialize a document deterministically.

    Floats are written with repr, the shortest text that reads back to the same double.

    :param document: The document.
    :return: JSON text ending in a newline.
    """
    return json.dumps(_finite(document), indent=2, sort_keys=True, allow_nan=False) + "\n"


def _spec(job: JobSpec) -> QuadratureSpec:
    return QuadratureSpec(order=job.quad_order, fd_step=job.fd_step)


def _overlap(job: JobSpec) -> JobOutcome:
    p, q = job.grassmann_points()
    return JobOutcome(
        EXIT_OK,
        {
            "kernel": complex_pair(overlap_kernel(p, q)),
            "normalized_overlap": complex_pair(normalized_overlap(p, q)),
        },
    )


def _distance(job: JobSpec) -> JobOutcome:
    p, q = job.grassmann_points()
    return JobOutcome(EXIT_OK, {"distance": cayley_distance(p, q)})


def _geodesic(job: JobSpec) -> JobOutcome:
    start, end = job.with_origin(2)
    segment = geodesic_between(start, end)
    parameters = np.linspace(0.0, 1.0, job.points)
    return JobOutcome(
        EXIT_OK,
        {
            "velocity_at_start": json_matrix(geodesic_velocity(segment, 0.0)),
            "principal_angles": [float(angle) for angle in segment.velocity_sigma],
            "samples": [
                {"t": float(t), "z": json_matrix(segment.point_at(float(t)).z)}
                for t in parameters
            ],
        },
    )


def _triangle(job: JobSpec) -> JobOutcome:
    x, y, z = job.with_origin(3)
    report = triangle_report(x, y, z, job.quad_order, job.fd_step)
    assert report.area_closed is not None and report.area_quad is not None
    assert report.residual_phase_area is not None
    passed = (
        report.residual_phase_area <= job.tol
        and report.residual_shape <= SHAPE_BOUND
        and abs(report.area_closed - report.area_quad) <= job.tol
    )
    document: JsonDict = {
        "side_a": report.side_a,
        "side_b": report.side_b,
        "side_c": report.side_c,
        "psi": complex_pair(report.psi),
        "psi_abs": report.psi_abs,
        "phase": report.phase,
        "area_closed": report.area_closed,
        "area_quad": report.area_quad,
        "area_loop": report.area_loop,
        "residual_shape": report.residual_shape,
        "residual_phase_area": report.residual_phase_area,
        "passed": passed,
    }
    return JobOutcome(EXIT_OK if passed else EXIT_CHECK_FAILED, document)


def _area_closed(job: JobSpec) -> JobOutcome:
    z1, z2 = job.grassmann_points()
    return JobOutcome(
        EXIT_OK,
        {"area_closed": closed_form_area(z1, z2), "phase_closed": closed_form_phase(z1, z2)},
    )


def _area_quad(job: JobSpec) -> JobOutcome:
    x, y, z = job.with_origin(3)
    area = surface_area_quad(x, y, z, _spec(job))
    return JobOutcome(
        EXIT_OK, {"area_quad": area, "phase_from_area": fold_phase(-2.0 * area)}
    )


def _loop(job: JobSpec) -> JobOutcome:
    x, y, z = job.with_origin(3)
    berry = loop_connection_integral(x, y, z, ConnectionKind.BERRY, job.quad_order)
    bundle_total = bundle_loop_integral(x, y, z, job.quad_order)
    bundle, residue = bundle_total.real, abs(bundle_total.imag)
    passed = abs(bundle - berry) <= CONNECTION_BOUND and residue <= BUNDLE_RESIDUE_BOUND
    return JobOutcome(
        EXIT_OK if passed else EXIT_CHECK_FAILED,
        {
            "loop_berry": berry,
            "loop_bundle": bundle,
            "bundle_imaginary_residue": residue,
            "passed": passed,
        },
    )


def _embed(job: JobSpec) -> JobOutcome:
    (p,) = job.grassmann_points()
    return JobOutcome(
        EXIT_OK, {"homo": [complex_pair(complex(value)) for value in plucker_embed(p).homo]}
    )


def _sphere_check(job: JobSpec) -> JobOutcome:
    first, second = job.matrices
    check = sphere_solid_angle_check(complex(first[0, 0]), complex(second[0, 0]))
    total = sphere_total_area()
    area_residual = abs(total.area - math.pi)
    passed = check.residual <= SOLID_ANGLE_BOUND and area_residual <= SPHERE_AREA_BOUND
    return JobOutcome(
        EXIT_OK if passed else EXIT_CHECK_FAILED,
        {
            "phase": check.phase,
            "half_solid_angle": check.half_solid_angle,
            "residual": check.residual,
            "sphere_area": total.area,
            "sphere_area_tail_bound": total.tail_bound,
            "passed": passed,
        },
    )


def _verify(job: JobSpec) -> JobOutcome:
    report = run_suite(job.suite, job.to_verification_config())
    return JobOutcome(
        EXIT_OK if report.passed else EXIT_CHECK_FAILED,
        report.to_json_dict(include_timing=job.timing),
        report_text=render(report.to_json_dict()),
    )


COMMANDS: Dict[JobCommand, Callable[[JobSpec], JobOutcome]] = {
    JobCommand.OVERLAP: _overlap,
    JobCommand.DISTANCE: _distance,
    JobCommand.GEODESIC: _geodesic,
    JobCommand.TRIANGLE: _triangle,
    JobCommand.AREA_CLOSED: _area_closed,
    JobCommand.AREA_QUAD: _area_quad,
    JobCommand.LOOP: _loop,
    JobCommand.EMBED: _embed,
    JobCommand.VERIFY: _verify,
    JobCommand.SPHERE_CHECK: _sphere_check,
}


def _error_document(error: Exception, seed: Optional[int] = None) -> JsonDict:
    document: JsonDict = {"error": type(error).__name__, "message": str(error)}
    if seed is not None:
        document["seed"] = seed
    return document


def run(job: JobSpec) -> JobOutcome:
    """Execute a validated job.

    :param job: The job.
    :return: Exit status and JSON document.
    """
    try:
        outcome = COMMANDS[job.command](job)
    except INPUT_ERRORS as error:
        logger.error("Invalid input for %s: %s", job.command.value, error)
        return JobOutcome(EXIT_INPUT_ERROR, _error_document(error))
    except TrialFailedException as error:
        logger.error("Verification trial failed: %s", error)
        return JobOutcome(EXIT_CHECK_FAILED, _error_document(error, error.seed))
    except NumericalError as error:
        logger.error("Numerical failure in %s: %s", job.command.value, error)
        seed = job.seed if job.command is JobCommand.VERIFY else None
        return JobOutcome(EXIT_CHECK_FAILED, _error_document(error, seed))
    if outcome.exit_code != EXIT_OK:
        logger.warning("Job %s did not pass its checks", job.command.value)
    return outcome


def build_parser() -> argparse.ArgumentParser:
    """Command line parser; every flag defaults to None so absent flags do not override JSON.

    :return: The parser.
    """
    parser = argparse.ArgumentParser(
        prog="coherent-phase",
        description="Geometric phases and symplectic areas of coherent-state triangles.",
    )
    parser.add_argument("command", nargs="?", choices=[command.value for command in JobCommand])
    parser.add_argument("--input", help="JobSpec JSON file, or - for standard input")
    parser.add_argument("--matrices", help="JSON list of matrices given as rows of [re, im] pairs")
    parser.add_argument("--n", type=int)
    parser.add_argument("--m", type=int)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--trials", type=int)
    parser.add_argument("--quad-order", dest="quad_order", type=int)
    parser.add_argument("--tol", type=float)
    parser.add_argument("--suite", choices=list(SUITE_NAMES))
    parser.add_argument("--points", type=int, help="Samples printed by the geodesic command")
    parser.add_argument("--workers", type=int, help="Worker processes for verification suites")
    parser.add_argument("--report", dest="report_path", help="File for the verify report")
    parser.add_argument("--timing", action="store_true", default=None)
    return parser


def job_from_arguments(arguments: argparse.Namespace, stdin: TextIO) -> JobSpec:
    """Merge environment, JSON input and flags into a job, later sources overriding earlier ones.

    :param arguments: Parsed command line.
    :param stdin: Stream read for `--input -`.
    :return: The validated job.
    """
    json_config: Dict[str, Any] = {}
    if arguments.input is not None:
        text = stdin.read() if arguments.input == "-" else Path(arguments.input).read_text("utf-8")
        json_config = load_json_config(text)
    if arguments.matrices is not None:
        try:
            json_config["matrices"] = json.loads(arguments.matrices)
        except json.JSONDecodeError as error:
            raise JobSpecException(
                f"Malformed JSON in --matrices at column {error.colno} (char {error.pos}): "
                f"{error.msg}"
            ) from error
    for key in (
        "command",
        "n",
        "m",
        "seed",
        "trials",
        "quad_order",
        "tol",
        "suite",
        "points",
        "workers",
        "report_path",
        "timing",
    ):
        value = getattr(arguments, key)
        if value is not None:
            json_config[key] = value
    return JobSpec.from_json_config(json_config, EnvVerificationConfig())


def main(argv: Optional[List[str]] = None, stdin: TextIO = sys.stdin) -> int:
    """Entry point of the coherent-phase command.

    :param argv: Arguments without the program name, defaults to sys.argv.
    :param stdin: Stream read for `--input -`.
    :return: Exit status.
    """
    arguments = build_parser().parse_args(argv)
    try:
        job = job_from_arguments(arguments, stdin)
    except (ValueError, OSError) as error:
        logger.error("Invalid job specification: %s", error)
        sys.stdout.write(render(_error_document(error)))
        return EXIT_INPUT_ERROR

    outcome = run(job)
    sys.stdout.write(render(outcome.document))
    if job.report_path is not None and outcome.report_text is not None:
        with open(job.report_path, "w", encoding="utf-8", newline="\n") as report_file:
            report_file.write(outcome.report_text)
        logger.info("Wrote verification report to %s", job.report_path)
    return outcome.exit_code


if __name__ == "__main__":
    sys.exit(main())
