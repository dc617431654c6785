"""Three-point invariant, geometric phase and symplectic area of Grassmannian triangles."""

import cmath
import logging
import math
from dataclasses import dataclass
from typing import Optional

from coherent_phase.grassmann_geometry import (
    UNIQUENESS_MARGIN,
    CutLocusError,
    GrassmannPoint,
    cayley_distance,
    moebius_apply,
    moebius_to_origin,
    overlap_kernel,
)
from coherent_phase.holonomy_integrals import (
    ConnectionKind,
    QuadratureSpec,
    loop_connection_integral,
    surface_area_quad,
)
from coherent_phase.mat_core import NumericalError

logger = logging.getLogger("coherent_phase")

TWO_PI = 2.0 * math.pi
ORTHOGONAL_TOL = 1e-14
"""Normalized overlaps below this modulus count as orthogonal states."""


class UndefinedPhaseError(NumericalError):
    """Thrown when a phase is requested of zero, e.g. the overlap of orthogonal states."""

    ...  # pragma: no cover


@dataclass
class TriangleReport:
    """Sides, invariant, phase and areas of a geodesic triangle.

    `shape_invariant_check` fills the sides, psi and residual_shape only; `triangle_report` fills
    every field.
    """

    side_a: float
    """Cayley distance between the second and third vertex."""
    side_b: float
    """Cayley distance between the third and first vertex."""
    side_c: float
    """Cayley distance between the first and second vertex."""
    psi: complex
    psi_abs: float
    residual_shape: float
    """| |psi| - cos a cos b cos c |."""
    phase: Optional[float] = None
    """Argument of psi in [0, 2 pi)."""
    area_closed: Optional[float] = None
    area_quad: Optional[float] = None
    area_loop: Optional[float] = None
    """Half the Berry connection integral around the loop."""
    residual_phase_area: Optional[float] = None
    """Circular distance between phase and -2 area_quad."""


def fold_phase(angle: float) -> float:
    """Reduce an angle to [0, 2 pi).

    :param angle: Any finite angle.
    :return: The representative in [0, 2 pi).
    """
    folded = math.fmod(angle, TWO_PI)
    if folded < 0.0:
        folded += TWO_PI
    if folded >= TWO_PI:
        folded -= TWO_PI
    return folded


def signed_phase(angle: float) -> float:
    """Reduce an angle to (-pi, pi].

    :param angle: Any finite angle.
    :return: The representative in (-pi, pi].
    """
    folded = fold_phase(angle)
    return folded - TWO_PI if folded > math.pi else folded


def circular_distance(first: float, second: float) -> float:
    """Length of the shorter arc between two angles.

    :param first: An angle.
    :param second: Another angle.
    :return: Distance in [0, pi].
    """
    difference = fold_phase(first - second)
    return min(difference, TWO_PI - difference)


def phase_of(v: complex) -> float:
    """Argument of a nonzero complex number in [0, 2 pi).

    :param v: The number.
    :raises UndefinedPhaseError: If v is zero.
    :return: The phase.
    """
    if v == 0:
        raise UndefinedPhaseError("The phase of zero is undefined.")
    return fold_phase(math.atan2(v.imag, v.real))


def bargmann_three_point(x: GrassmannPoint, y: GrassmannPoint, z: GrassmannPoint) -> complex:
    """Three-point function K(x,y) K(y,z) K(z,x) / (K(x,x) K(y,y) K(z,z)).

    :param x: First vertex.
    :param y: Second vertex.
    :param z: Third vertex.
    :raises DimensionError: If the points belong to different Grassmannians.
    :return: The invariant, of modulus at most 1.
    """
    numerator = overlap_kernel(x, y) * overlap_kernel(y, z) * overlap_kernel(z, x)
    denominator = (
        overlap_kernel(x, x).real * overlap_kernel(y, y).real * overlap_kernel(z, z).real
    )
    return numerator / denominator


def shape_invariant_check(
    x: GrassmannPoint, y: GrassmannPoint, z: GrassmannPoint
) -> TriangleReport:
    """Compare |psi| with the product of the cosines of the triangle sides.

    :param x: First vertex.
    :param y: Second vertex.
    :param z: Third vertex.
    :return: Report with sides, psi and residual_shape filled in.
    """
    side_a = cayley_distance(y, z)
    side_b = cayley_distance(z, x)
    side_c = cayley_distance(x, y)
    psi = bargmann_three_point(x, y, z)
    psi_abs = abs(psi)
    return TriangleReport(
        side_a=side_a,
        side_b=side_b,
        side_c=side_c,
        psi=psi,
        psi_abs=psi_abs,
        residual_shape=abs(psi_abs - math.cos(side_a) * math.cos(side_b) * math.cos(side_c)),
    )


def _require_overlap(z1: GrassmannPoint, z2: GrassmannPoint) -> complex:
    kernel = overlap_kernel(z1, z2)
    norm = math.sqrt(overlap_kernel(z1, z1).real * overlap_kernel(z2, z2).real)
    if abs(kernel) <= ORTHOGONAL_TOL * norm:
        raise UndefinedPhaseError("The states are orthogonal, their relative phase is undefined.")
    return kernel


def closed_form_area(z1: GrassmannPoint, z2: GrassmannPoint) -> float:
    """Symplectic area of the geodesic triangle (0, z1, z2).

    (1/4i) log[det(1 + Z1 Z2^+) / det(1 + Z2 Z1^+)] on the principal branch.

    :param z1: Second vertex.
    :param z2: Third vertex.
    :raises UndefinedPhaseError: If the two states are orthogonal.
    :return: The signed area, -arg K(z1, z2) / 2.
    """
    backward = _require_overlap(z1, z2)
    forward = overlap_kernel(z2, z1)
    return (cmath.log(forward / backward) / 4j).real


def closed_form_phase(z1: GrassmannPoint, z2: GrassmannPoint) -> float:
    """Geometric phase of (0, z1, z2), twice the closed form area.

    :param z1: Second vertex.
    :param z2: Third vertex.
    :raises UndefinedPhaseError: If the two states are orthogonal.
    :return: The phase in [0, 2 pi).
    """
    return fold_phase(2.0 * closed_form_area(z1, z2))


def normalized_overlap(z1: GrassmannPoint, z2: GrassmannPoint) -> complex:
    """Overlap of the normalized coherent states, K(z2, z1) / sqrt(K(z1, z1) K(z2, z2)).

    Its modulus is cos of the Cayley distance and its phase equals `closed_form_phase(z1, z2)`.

    :param z1: First point.
    :param z2: Second point.
    :return: The overlap.
    """
    norm = math.sqrt(overlap_kernel(z1, z1).real * overlap_kernel(z2, z2).real)
    return overlap_kernel(z2, z1) / norm


def triangle_report(
    x: GrassmannPoint,
    y: GrassmannPoint,
    z: GrassmannPoint,
    quad_order: int = 32,
    fd_step: float = 1e-5,
) -> TriangleReport:
    """Evaluate every route to the phase and area of a triangle.

    The closed form is applied after moving x to the origin.

    :param x: First vertex.
    :param y: Second vertex.
    :param z: Third vertex.
    :param quad_order: Gauss-Legendre nodes per axis.
    :param fd_step: Step of the central difference along the fan base.
    :raises CutLocusError: If a side reaches pi/2.
    :raises UndefinedPhaseError: If psi vanishes.
    :raises ChartExitError: If the fan from x leaves the big cell of the chart.
    :return: The complete report.
    """
    report = shape_invariant_check(x, y, z)
    longest = max(report.side_a, report.side_b, report.side_c)
    if longest >= math.pi / 2 - UNIQUENESS_MARGIN:
        raise CutLocusError(longest)
    spec = QuadratureSpec(order=quad_order, fd_step=fd_step)

    report.phase = phase_of(report.psi)
    transport = moebius_to_origin(x)
    report.area_closed = closed_form_area(moebius_apply(transport, y), moebius_apply(transport, z))
    report.area_quad = surface_area_quad(x, y, z, spec)
    report.area_loop = loop_connection_integral(x, y, z, ConnectionKind.BERRY, quad_order) / 2.0
    report.residual_phase_area = circular_distance(report.phase, -2.0 * report.area_quad)
    logger.debug(
        "Triangle phase %s, closed area %s, quadrature area %s",
        report.phase,
        report.area_closed,
        report.area_quad,
    )
    return report
