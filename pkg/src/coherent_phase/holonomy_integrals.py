"""Symplectic area and connection loop integrals over geodesic triangles.

Surface integrals run over the geodesic fan from one vertex to the opposite side, on a
Gauss-Legendre tensor grid. The fan is evaluated in the frame where the apex is the origin: the
Kahler form is invariant under the unitary Moebius transport, and in that frame the fan geodesics
and both resolvents have closed forms in the SVD of the base point.
"""

import cmath
import logging
import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Tuple, Union

import numpy as np

from coherent_phase.grassmann_geometry import (
    ChartExitError,
    GeodesicSegment,
    GrassmannPoint,
    MoebiusMap,
    cayley_distance,
    check_uniqueness,
    geodesic_between,
    geodesic_velocity,
    kahler_form_from_resolvents,
    moebius_apply,
    moebius_inverse,
    moebius_to_origin,
    overlap_kernel,
)
from coherent_phase.mat_core import (
    ConvergenceError,
    DimensionError,
    MatrixLike,
    NumericalError,
    as_complex_matrix,
    dagger,
    identity,
    inverse,
    svd,
)
from coherent_phase.types import ComplexMatrix, RealArray

logger = logging.getLogger("coherent_phase")

NEWTON_MAX_ITERATIONS = 100
NEWTON_STEP_TOL = 1e-14
SPHERE_RADIUS = 1e3
CHART_GUARD_SAMPLES = 16
CHART_GUARD_MAX_SAMPLES = 1024
CHART_GUARD_MAX_STEP = math.pi / 4


class NumericalDomainError(NumericalError):
    """Thrown when an integrand becomes non-finite or a triangle is too degenerate to evaluate."""

    ...  # pragma: no cover


class ConnectionKind(Enum):
    """Connection one-forms that can be integrated around a loop."""

    BUNDLE = "bundle"
    """i Tr[dZ Z^+ (1 + Z Z^+)^-1], complex valued."""
    BERRY = "berry"
    """(i/2) Tr[(dZ Z^+ - Z dZ^+)(1 + Z Z^+)^-1], real valued."""


@dataclass(frozen=True)
class QuadratureSpec:
    """Settings of the surface quadrature."""

    order: int = 32
    """Gauss-Legendre nodes per axis."""
    fd_step: float = 1e-5
    """Step of the central difference along the fan base."""

    def __post_init__(self) -> None:
        """Validate the settings."""
        if self.order < 2:
            raise ValueError(f"Quadrature order must be at least 2 but was {self.order}.")
        if not 1e-8 < self.fd_step < 1e-3:
            raise ValueError(
                f"Finite difference step must lie in (1e-8, 1e-3), got {self.fd_step}."
            )


@dataclass(frozen=True, eq=False)
class FanSurface:
    """Surface swept by the geodesics from `apex` to the points of `base`.

    S(s, t) is the point at parameter t on the geodesic from the apex to base.point_at(s).
    """

    apex: GrassmannPoint
    base: GeodesicSegment
    """Geodesic from the second to the third vertex."""
    apex_index: int
    """Which vertex of the triangle (0, 1 or 2) is the apex."""
    transport: MoebiusMap
    """Map sending the apex to the origin."""
    inverse_transport: MoebiusMap
    local_base: GeodesicSegment
    """The base segment in the frame where the apex is the origin."""

    def local_point_at(self, s: float, t: float) -> ComplexMatrix:
        """Chart coordinate of S(s, t) in the apex-at-origin frame.

        :param s: Parameter along the base.
        :param t: Parameter from the apex towards the base.
        :return: n x m matrix.
        """
        return _fan_points(self, s, np.array([t], dtype=np.float64))[0]

    def point_at(self, s: float, t: float) -> GrassmannPoint:
        """The point S(s, t).

        :param s: Parameter along the base.
        :param t: Parameter from the apex towards the base.
        :return: The point in the original chart.
        """
        local = GrassmannPoint.from_matrix(self.local_point_at(s, t))
        return moebius_apply(self.inverse_transport, local)


@dataclass(frozen=True)
class DeformationReport:
    """Fan areas of one triangle with each vertex in turn as the apex."""

    area_x: float
    area_y: float
    area_z: float

    @property
    def residual(self) -> float:
        """|area_x - area_y|."""
        return abs(self.area_x - self.area_y)

    @property
    def spread(self) -> float:
        """Largest difference between any two of the three areas."""
        areas = (self.area_x, self.area_y, self.area_z)
        return max(areas) - min(areas)


@dataclass(frozen=True)
class SolidAngleCheck:
    """Geometric phase of a CP^1 triangle against half its solid angle on the sphere."""

    phase: float
    """Closed form phase, signed representative in (-pi, pi]."""
    half_solid_angle: float
    residual: float
    """||phase| - half_solid_angle|."""


@dataclass(frozen=True)
class SphereAreaReport:
    """Symplectic area of the CP^1 chart up to a cutoff radius."""

    area: float
    tail_bound: float
    """Area of the chart beyond the cutoff radius, pi / (1 + R^2)."""
    radius: float


@lru_cache(maxsize=None)
def _gauss_legendre_cached(order: int) -> Tuple[Tuple[float, ...], Tuple[float, ...]]:
    roots = np.cos(math.pi * (np.arange(order) + 0.75) / (order + 0.5))

    def legendre(x: RealArray) -> Tuple[RealArray, RealArray]:
        previous = np.ones_like(x)
        current = x.copy()
        for degree in range(2, order + 1):
            previous, current = current, (
                (2 * degree - 1) * x * current - (degree - 1) * previous
            ) / degree
        derivative = order * (x * current - previous) / (x * x - 1.0)
        return current, derivative

    for _ in range(NEWTON_MAX_ITERATIONS):
        value, derivative = legendre(roots)
        step = value / derivative
        roots = roots - step
        if float(np.max(np.abs(step))) < NEWTON_STEP_TOL:
            break
    else:
        raise ConvergenceError(
            NEWTON_MAX_ITERATIONS, f"Legendre root finding did not converge for order {order}."
        )

    _, derivative = legendre(roots)
    weights = 2.0 / ((1.0 - roots * roots) * derivative * derivative)
    # [-1, 1] -> [0, 1], ascending nodes
    nodes = (1.0 + roots[::-1]) / 2.0
    logger.debug("Computed %s Gauss-Legendre nodes", order)
    return tuple(nodes.tolist()), tuple((weights[::-1] / 2.0).tolist())


def gauss_legendre(order: int) -> Tuple[RealArray, RealArray]:
    """Gauss-Legendre nodes and weights on [0, 1].

    Roots of the Legendre polynomial are found by Newton iteration on the three-term recurrence.
    Results are cached per order.

    :param order: Number of nodes, at least 1.
    :raises ConvergenceError: If Newton iteration does not settle.
    :return: Ascending nodes and their weights; the weights sum to 1.
    """
    if order < 1:
        raise ValueError(f"Gauss-Legendre order must be positive but was {order}.")
    nodes, weights = _gauss_legendre_cached(order)
    return np.array(nodes, dtype=np.float64), np.array(weights, dtype=np.float64)


def chart_winding(x: GrassmannPoint, y: GrassmannPoint, z: GrassmannPoint) -> int:
    """Winding number of K(x, .) around the geodesic loop x -> y -> z -> x.

    Along the loop, det(1 + Z X^+) = K(x, Z) is the inverse of the denominator det(cY + d) of the
    map from the frame where x is the origin back to the chart, up to a constant. A nonzero winding
    means the geodesic fan from x covers points where that denominator vanishes, which lie outside
    the big cell of the chart. The sampling is refined until no step turns by more than
    CHART_GUARD_MAX_STEP.

    :param x: Apex of the fan.
    :param y: Second vertex.
    :param z: Third vertex.
    :raises CutLocusError: If a side leaves the uniqueness domain.
    :raises NumericalDomainError: If the phase along the loop cannot be resolved.
    :return: The signed winding number.
    """
    segments = [geodesic_between(start, end) for start, end in ((x, y), (y, z), (z, x))]
    samples = CHART_GUARD_SAMPLES
    while True:
        ts = np.arange(samples, dtype=np.float64) / samples
        values = np.array(
            [overlap_kernel(x, segment.point_at(float(t))) for segment in segments for t in ts]
        )
        steps = np.angle(np.roll(values, -1) / values)
        if float(np.max(np.abs(steps))) < CHART_GUARD_MAX_STEP:
            return int(round(float(np.sum(steps)) / (2.0 * math.pi)))
        if samples >= CHART_GUARD_MAX_SAMPLES:
            raise NumericalDomainError(
                f"Phase of the kernel along the loop is unresolved at {3 * samples} samples."
            )
        samples *= 2


def _require_fan_in_chart(apex: GrassmannPoint, b1: GrassmannPoint, b2: GrassmannPoint) -> None:
    winding = chart_winding(apex, b1, b2)
    if winding != 0:
        raise ChartExitError(
            f"Geodesic fan leaves the big cell of the chart (kernel winding number {winding})."
        )


def fan_surface(
    apex: GrassmannPoint, b1: GrassmannPoint, b2: GrassmannPoint, apex_index: int = 0
) -> FanSurface:
    """Geodesic fan from apex over the arc from b1 to b2.

    :param apex: Apex of the fan.
    :param b1: Start of the base arc.
    :param b2: End of the base arc.
    :param apex_index: Position of the apex in the triangle, recorded in the result.
    :raises CutLocusError: If an arc leaves the uniqueness domain.
    :raises ChartExitError: If the fan covers points outside the big cell of the chart.
    :return: The surface.
    """
    _require_fan_in_chart(apex, b1, b2)
    transport = moebius_to_origin(apex)
    return FanSurface(
        apex=apex,
        base=geodesic_between(b1, b2),
        apex_index=apex_index,
        transport=transport,
        inverse_transport=moebius_inverse(transport),
        local_base=geodesic_between(moebius_apply(transport, b1), moebius_apply(transport, b2)),
    )


def _fan_factors(fan: FanSurface, s: float) -> Tuple[ComplexMatrix, RealArray, ComplexMatrix]:
    factors = svd(fan.local_base.point_at(s).z)
    return factors.u, np.arctan(factors.sigma), factors.v


def _fan_points(fan: FanSurface, s: float, ts: RealArray) -> ComplexMatrix:
    u, theta, v = _fan_factors(fan, s)
    angles = np.outer(ts, theta)
    check_uniqueness(angles)
    return np.einsum("ik,tk,jk->tij", u, np.tan(angles), np.conj(v))


def _fan_column(
    fan: FanSurface, s: float, ts: RealArray
) -> Tuple[ComplexMatrix, ComplexMatrix, ComplexMatrix]:
    """Radial velocities and both resolvents along the fan geodesic ending at base(s)."""
    u, theta, v = _fan_factors(fan, s)
    angles = np.outer(ts, theta)
    check_uniqueness(angles)
    velocities = np.einsum("ik,tk,jk->tij", u, theta / np.cos(angles) ** 2, np.conj(v))
    sines = np.sin(angles) ** 2
    left = identity(fan.apex.n) - np.einsum("ik,tk,jk->tij", u, sines, np.conj(u))
    right = identity(fan.apex.m) - np.einsum("ik,tk,jk->tij", v, sines, np.conj(v))
    return velocities, left, right


def fan_area(fan: FanSurface, spec: QuadratureSpec) -> float:
    """Integral of the Kahler form over a fan surface.

    The integrand is omega(dS/ds, dS/dt) with dS/dt analytic and dS/ds from a 4th-order central
    difference.

    :param fan: The surface.
    :param spec: Quadrature settings.
    :raises NumericalDomainError: If the integrand is not finite.
    :return: Signed symplectic area.
    """
    nodes, weights = gauss_legendre(spec.order)
    step = spec.fd_step
    values = np.empty((spec.order, spec.order), dtype=np.float64)
    for row, s in enumerate(nodes):
        velocities, left, right = _fan_column(fan, float(s), nodes)
        far_back, back, ahead, far_ahead = (
            _fan_points(fan, float(s) + shift * step, nodes) for shift in (-2, -1, 1, 2)
        )
        base_derivative = (far_back - 8.0 * back + 8.0 * ahead - far_ahead) / (12.0 * step)
        values[row] = kahler_form_from_resolvents(base_derivative, velocities, left, right)
    if not np.all(np.isfinite(values)):
        raise NumericalDomainError("Kahler form integrand is not finite on the fan surface.")
    return float(np.sum(np.outer(weights, weights) * values))


def surface_area_quad(
    x: GrassmannPoint, y: GrassmannPoint, z: GrassmannPoint, spec: QuadratureSpec
) -> float:
    """Symplectic area of the geodesic triangle (x, y, z) by quadrature over the fan from x.

    :param x: Apex.
    :param y: Second vertex.
    :param z: Third vertex.
    :param spec: Quadrature settings.
    :return: Signed area; swapping y and z flips the sign.
    """
    area = fan_area(fan_surface(x, y, z), spec)
    logger.debug("Fan quadrature of order %s gives area %s", spec.order, area)
    return area


def connection_form_eval(
    at: GrassmannPoint, x: MatrixLike, which: Union[ConnectionKind, str]
) -> complex:
    """Evaluate a connection one-form on a chart tangent.

    :param at: Base point.
    :param x: n x m tangent.
    :param which: Bundle or Berry connection.
    :raises DimensionError: If the tangent does not have the shape of the chart.
    :return: The value; the Berry connection has zero imaginary part.
    """
    kind = ConnectionKind(which)
    tangent = as_complex_matrix(x)
    if tangent.shape != at.shape:
        raise DimensionError(f"Tangent of shape {tangent.shape} does not fit point {at.shape}.")
    left = inverse(identity(at.n) + at.z @ dagger(at.z))
    forward = complex(np.trace(tangent @ dagger(at.z) @ left))
    if kind is ConnectionKind.BUNDLE:
        return 1j * forward
    backward = complex(np.trace(at.z @ dagger(tangent) @ left))
    return complex((0.5j * (forward - backward)).real, 0.0)


def _loop_integral(
    x: GrassmannPoint, y: GrassmannPoint, z: GrassmannPoint, kind: ConnectionKind, order: int
) -> complex:
    # the connection is integrated in the chart itself, so Stokes needs the fan inside it
    _require_fan_in_chart(x, y, z)
    nodes, weights = gauss_legendre(order)
    total = complex(0.0)
    for start, end in ((x, y), (y, z), (z, x)):
        segment = geodesic_between(start, end)
        samples = np.array(
            [
                connection_form_eval(
                    segment.point_at(float(t)), geodesic_velocity(segment, float(t)), kind
                )
                for t in nodes
            ]
        )
        total += complex(np.dot(weights, samples))
    return total


def loop_connection_integral(
    x: GrassmannPoint,
    y: GrassmannPoint,
    z: GrassmannPoint,
    which: Union[ConnectionKind, str],
    order: int,
) -> float:
    """Integral of a connection around the geodesic loop x -> y -> z -> x.

    Equals twice the symplectic area of the triangle for either connection.

    :param x: First vertex.
    :param y: Second vertex.
    :param z: Third vertex.
    :param which: Bundle or Berry connection.
    :param order: Gauss-Legendre nodes per arc.
    :raises ChartExitError: If the fan from x covers points outside the big cell of the chart.
    :return: Real part of the loop integral.
    """
    kind = ConnectionKind(which)
    total = _loop_integral(x, y, z, kind, order)
    if kind is ConnectionKind.BUNDLE:
        logger.debug("Bundle connection loop has imaginary residue %s", abs(total.imag))
    return total.real


def bundle_loop_integral(
    x: GrassmannPoint, y: GrassmannPoint, z: GrassmannPoint, order: int
) -> complex:
    """Complex integral of the bundle connection around the loop x -> y -> z -> x.

    The real part is `loop_connection_integral` for the bundle connection and the imaginary part is
    the residue reported by `loop_connection_residue`.

    :param x: First vertex.
    :param y: Second vertex.
    :param z: Third vertex.
    :param order: Gauss-Legendre nodes per arc.
    :raises ChartExitError: If the fan from x covers points outside the big cell of the chart.
    :return: The loop integral.
    """
    return _loop_integral(x, y, z, ConnectionKind.BUNDLE, order)


def loop_connection_residue(
    x: GrassmannPoint, y: GrassmannPoint, z: GrassmannPoint, order: int
) -> float:
    """Imaginary part of the bundle connection around the loop, zero up to quadrature error.

    :param x: First vertex.
    :param y: Second vertex.
    :param z: Third vertex.
    :param order: Gauss-Legendre nodes per arc.
    :raises ChartExitError: If the fan from x covers points outside the big cell of the chart.
    :return: |Im of the loop integral|.
    """
    return abs(bundle_loop_integral(x, y, z, order).imag)


def parallel_transport_factor(
    x: GrassmannPoint, y: GrassmannPoint, z: GrassmannPoint, spec: QuadratureSpec
) -> complex:
    """Holonomy exp(2i area) of the loop x -> y -> z -> x.

    :param x: First vertex.
    :param y: Second vertex.
    :param z: Third vertex.
    :param spec: Quadrature settings.
    :return: Unit complex number.
    """
    return cmath.exp(2j * surface_area_quad(x, y, z, spec))


def deformation_residual(
    x: GrassmannPoint, y: GrassmannPoint, z: GrassmannPoint, spec: QuadratureSpec
) -> DeformationReport:
    """Fan areas of the triangle with every vertex as the apex, keeping the orientation.

    :param x: First vertex.
    :param y: Second vertex.
    :param z: Third vertex.
    :param spec: Quadrature settings.
    :return: The three areas.
    """
    return DeformationReport(
        area_x=fan_area(fan_surface(x, y, z, apex_index=0), spec),
        area_y=fan_area(fan_surface(y, z, x, apex_index=1), spec),
        area_z=fan_area(fan_surface(z, x, y, apex_index=2), spec),
    )


def spherical_excess(a: float, b: float, c: float) -> float:
    """Solid angle of a spherical triangle on the unit sphere from its sides (L'Huilier).

    :param a: Side length in radians.
    :param b: Side length in radians.
    :param c: Side length in radians.
    :return: The spherical excess.
    """
    s = (a + b + c) / 2.0
    product = (
        math.tan(s / 2.0)
        * math.tan((s - a) / 2.0)
        * math.tan((s - b) / 2.0)
        * math.tan((s - c) / 2.0)
    )
    return 4.0 * math.atan(math.sqrt(max(product, 0.0)))


def sphere_solid_angle_check(z1: complex, z2: complex) -> SolidAngleCheck:
    """Compare the geometric phase of the CP^1 triangle (0, z1, z2) with half its solid angle.

    Side lengths on the unit sphere are twice the Cayley distances.

    :param z1: Chart coordinate of the second vertex.
    :param z2: Chart coordinate of the third vertex.
    :raises NumericalDomainError: If the triangle is degenerate.
    :return: The comparison.
    """
    # coherent_phases builds on this module
    from coherent_phase.coherent_phases import closed_form_phase, signed_phase

    origin = GrassmannPoint.origin(1, 1)
    first = GrassmannPoint.from_matrix([[z1]])
    second = GrassmannPoint.from_matrix([[z2]])
    sides = (
        2.0 * cayley_distance(first, second),
        2.0 * cayley_distance(origin, second),
        2.0 * cayley_distance(origin, first),
    )
    if min(sides) <= 1e-12:
        raise NumericalDomainError(f"Triangle (0, {z1}, {z2}) has a vanishing side.")
    half_solid_angle = spherical_excess(*sides) / 2.0
    if half_solid_angle == 0.0:
        raise NumericalDomainError(f"Triangle (0, {z1}, {z2}) encloses no area.")
    phase = signed_phase(closed_form_phase(first, second))
    return SolidAngleCheck(
        phase=phase,
        half_solid_angle=half_solid_angle,
        residual=abs(abs(phase) - half_solid_angle),
    )


def sphere_total_area(order: int = 64, radius: float = SPHERE_RADIUS) -> SphereAreaReport:
    """Symplectic area of the CP^1 chart inside |z| <= radius.

    Polar grid with r = tan(u), u in [0, arctan(radius)], which keeps the integrand smooth.

    :param order: Gauss-Legendre nodes per axis.
    :param radius: Cutoff radius.
    :return: The area and the analytic bound of the remaining tail.
    """
    nodes, weights = gauss_legendre(order)
    upper = math.atan(radius)
    u = nodes * upper
    radial_weights = weights * upper
    phi = nodes * 2.0 * math.pi
    angular_weights = weights * 2.0 * math.pi

    r = np.tan(u)[:, None]
    rotation = np.exp(1j * phi)[None, :]
    # dz/du and dz/dphi at z = r e^{i phi}
    radial = (rotation / np.cos(u)[:, None] ** 2)[..., None, None]
    angular = (1j * r * rotation)[..., None, None]
    resolvent = (1.0 / (1.0 + r * r) * np.ones_like(rotation))[..., None, None]
    values = kahler_form_from_resolvents(radial, angular, resolvent, resolvent)
    area = float(np.sum(np.outer(radial_weights, angular_weights) * values))
    return SphereAreaReport(area=area, tail_bound=math.pi / (1.0 + radius * radius), radius=radius)
