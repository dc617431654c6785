"""Points, kernel, geodesics and Moebius transport on G_n(C^(m+n)) in the big-cell chart.

A point is an n x m matrix Z standing for the n-plane spanned by the rows of [1_n | Z]. The
origin Z = 0 is special: geodesics through it are U tan(Sigma t) V^+, and every other geodesic is
obtained by transporting one end point to the origin with a Moebius map.
"""

import logging
import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from typing_extensions import Self

from coherent_phase.mat_core import (
    DimensionError,
    MatrixLike,
    NumericalError,
    SingularMatrixError,
    as_complex_matrix,
    dagger,
    det,
    herm_fun,
    identity,
    inverse,
    inverse_sqrt,
    max_abs,
    svd,
)
from coherent_phase.types import ComplexMatrix, RealArray

logger = logging.getLogger("coherent_phase")

UNIQUENESS_MARGIN = 1e-9
"""Geodesic arctan parameters must stay below pi/2 minus this margin."""
DEFAULT_COLLINEAR_TOL = 1e-9


class CutLocusError(NumericalError):
    """Thrown when a geodesic parameter reaches the tan pole at pi/2 (outside uniqueness domain)."""

    parameter: float
    """Largest arctan parameter that was encountered."""

    def __init__(self, parameter: float):
        """Create the exception.

        :param parameter: Largest arctan parameter that was encountered.
        """
        super().__init__(
            f"Geodesic parameter {parameter!r} reaches the cut locus bound "
            f"pi/2 - {UNIQUENESS_MARGIN}."
        )
        self.parameter = parameter


class ChartExitError(NumericalError):
    """Thrown when the image of a Moebius map leaves the big cell of the chart."""

    ...  # pragma: no cover


@dataclass(frozen=True, eq=False)
class GrassmannPoint:
    """A point of G_n(C^(m+n)) in the chart around the origin."""

    n: int
    """Dimension of the subspace."""
    m: int
    """Codimension of the subspace."""
    z: ComplexMatrix
    """Chart coordinate, an n x m matrix. Read-only."""

    def __post_init__(self) -> None:
        """Validate the shape and freeze the coordinate matrix."""
        if self.n < 1 or self.m < 1:
            raise DimensionError(f"Grassmannian needs n, m >= 1 but received ({self.n}, {self.m}).")
        z = as_complex_matrix(self.z)
        if z.shape != (self.n, self.m):
            raise DimensionError(
                f"Chart coordinate has shape {z.shape} but the point lives in ({self.n}, {self.m})."
            )
        z.setflags(write=False)
        object.__setattr__(self, "z", z)

    @classmethod
    def from_matrix(cls, z: MatrixLike) -> Self:
        """Create a point from its chart coordinate, taking (n, m) from the shape.

        :param z: n x m matrix.
        :return: The point.
        """
        matrix = as_complex_matrix(z)
        rows, cols = matrix.shape
        return cls(n=rows, m=cols, z=matrix)

    @classmethod
    def origin(cls, n: int, m: int) -> Self:
        """The point Z = 0.

        :param n: Dimension of the subspace.
        :param m: Codimension of the subspace.
        :return: The origin of the chart.
        """
        return cls(n=n, m=m, z=np.zeros((n, m), dtype=np.complex128))

    @property
    def shape(self) -> Tuple[int, int]:
        """(n, m) of the Grassmannian this point belongs to."""
        return self.n, self.m


@dataclass(frozen=True, eq=False)
class MoebiusMap:
    """Linear fractional map Z -> (aZ + b)(cZ + d)^-1 of the chart.

    Equality is projective: the blocks are determined up to a common nonzero scalar, see
    `is_projectively_equal`.
    """

    a: ComplexMatrix
    """n x n block."""
    b: ComplexMatrix
    """n x m block."""
    c: ComplexMatrix
    """m x n block."""
    d: ComplexMatrix
    """m x m block."""

    def __post_init__(self) -> None:
        """Validate that the four blocks fit together."""
        blocks = [as_complex_matrix(block) for block in (self.a, self.b, self.c, self.d)]
        n, m = blocks[0].shape[0], blocks[3].shape[0]
        expected = [(n, n), (n, m), (m, n), (m, m)]
        for name, block, shape in zip("abcd", blocks, expected):
            if block.shape != shape:
                raise DimensionError(f"Block {name} has shape {block.shape}, expected {shape}.")
            block.setflags(write=False)
            object.__setattr__(self, name, block)

    @classmethod
    def identity(cls, n: int, m: int) -> Self:
        """The identity map of G_n(C^(m+n)).

        :param n: Dimension of the subspace.
        :param m: Codimension of the subspace.
        :return: Map with a = 1, b = 0, c = 0, d = 1.
        """
        return cls(
            a=identity(n),
            b=np.zeros((n, m), dtype=np.complex128),
            c=np.zeros((m, n), dtype=np.complex128),
            d=identity(m),
        )

    @property
    def n(self) -> int:
        """Dimension of the subspaces the map acts on."""
        return int(self.a.shape[0])

    @property
    def m(self) -> int:
        """Codimension of the subspaces the map acts on."""
        return int(self.d.shape[0])

    def as_block_matrix(self) -> ComplexMatrix:
        """Assemble [[a, b], [c, d]].

        :return: (n + m) x (n + m) matrix.
        """
        return np.block([[self.a, self.b], [self.c, self.d]])

    def is_projectively_equal(self, other: "MoebiusMap", tol: float = 1e-10) -> bool:
        """Compare two maps up to a common nonzero scalar on all blocks.

        :param other: Map to compare with.
        :param tol: Absolute tolerance on the rescaled block matrices.
        :return: True if other = lambda * self for some nonzero lambda.
        """
        if (self.n, self.m) != (other.n, other.m):
            return False
        mine = self.as_block_matrix()
        theirs = other.as_block_matrix()
        index = np.unravel_index(int(np.argmax(np.abs(mine))), mine.shape)
        if theirs[index] == 0:
            return False
        scale = mine[index] / theirs[index]
        return max_abs(mine - scale * theirs) <= tol * max(1.0, max_abs(mine))


@dataclass(frozen=True, eq=False)
class GeodesicSegment:
    """Geodesic arc from `start` to `end`, parametrized over [0, 1].

    In the frame where `start` is the origin the arc is U tan(Sigma t) V^+ with the thin SVD
    factors of the origin-chart velocity B = U Sigma V^+.
    """

    start: GrassmannPoint
    end: GrassmannPoint
    transport: MoebiusMap
    """Moebius map sending `start` to the origin."""
    inverse_transport: MoebiusMap
    velocity_u: ComplexMatrix
    velocity_sigma: RealArray
    """Singular values of B, which are the principal angles between start and end."""
    velocity_v: ComplexMatrix
    length_param: float = 1.0

    def local_point_at(self, t: float) -> ComplexMatrix:
        """Chart coordinate of the arc at parameter t, in the frame where `start` is the origin.

        :param t: Curve parameter.
        :return: n x m matrix.
        """
        return _origin_geodesic_point(self.velocity_u, self.velocity_sigma, self.velocity_v, t)

    def point_at(self, t: float) -> GrassmannPoint:
        """Point of the arc at parameter t.

        :param t: Curve parameter, 0 at `start` and 1 at `end`.
        :raises CutLocusError: If t leaves the uniqueness domain.
        :return: The point.
        """
        local = GrassmannPoint.from_matrix(self.local_point_at(t))
        return moebius_apply(self.inverse_transport, local)


def _require_same_shape(*points: GrassmannPoint) -> None:
    shapes = {point.shape for point in points}
    if len(shapes) != 1:
        raise DimensionError(f"Points belong to different Grassmannians: {sorted(shapes)}.")


def check_uniqueness(angles: RealArray) -> None:
    """Require every principal angle to stay inside the uniqueness domain of the geodesics.

    :param angles: Principal angles in radians; an empty array always passes.
    :raises CutLocusError: If the largest |angle| reaches pi/2 - UNIQUENESS_MARGIN.
    """
    worst = float(np.max(np.abs(angles))) if angles.size else 0.0
    if worst >= math.pi / 2 - UNIQUENESS_MARGIN:
        raise CutLocusError(worst)


def _origin_geodesic_point(
    u: ComplexMatrix, sigma: RealArray, v: ComplexMatrix, t: float
) -> ComplexMatrix:
    angles = sigma * t
    check_uniqueness(angles)
    return (u * np.tan(angles)) @ dagger(v)


def _raw_kernel(p: GrassmannPoint, q: GrassmannPoint) -> complex:
    return det(identity(p.n) + q.z @ dagger(p.z))


def overlap_kernel(p: GrassmannPoint, q: GrassmannPoint) -> complex:
    """Coherent state overlap K(p, q) = det(1_n + Z_q Z_p^+).

    The kernel is linear in its second argument. The arguments are evaluated in a canonical order
    and the swapped order returns the conjugate, so K(p, q) == conj(K(q, p)) holds bit for bit and
    K(p, p) has a zero imaginary part.

    :param p: First point.
    :param q: Second point.
    :raises DimensionError: If the points belong to different Grassmannians.
    :return: K(p, q).
    """
    _require_same_shape(p, q)
    if p is q or np.array_equal(p.z, q.z):
        return complex(_raw_kernel(p, p).real, 0.0)
    if p.z.tobytes() > q.z.tobytes():
        return _raw_kernel(q, p).conjugate()
    return _raw_kernel(p, q)


def cayley_distance(p: GrassmannPoint, q: GrassmannPoint) -> float:
    """Cayley distance arccos(|K(p, q)| / sqrt(K(p, p) K(q, q))).

    :param p: First point.
    :param q: Second point.
    :raises DimensionError: If the points belong to different Grassmannians.
    :return: Distance in [0, pi/2].
    """
    kernel = overlap_kernel(p, q)
    norm = math.sqrt(overlap_kernel(p, p).real * overlap_kernel(q, q).real)
    ratio = abs(kernel) / norm
    return math.acos(min(1.0, max(0.0, ratio)))


def geodesic_from_origin(b: MatrixLike, t: float) -> GrassmannPoint:
    """Point at parameter t of the geodesic through the origin with initial velocity b.

    :param b: n x m velocity at the origin.
    :param t: Curve parameter.
    :raises CutLocusError: If some singular value times t reaches pi/2 - UNIQUENESS_MARGIN.
    :return: U tan(Sigma t) V^+ for b = U Sigma V^+.
    """
    factors = svd(b)
    local = _origin_geodesic_point(factors.u, factors.sigma, factors.v, t)
    return GrassmannPoint.from_matrix(local)


def log_origin(p: GrassmannPoint) -> ComplexMatrix:
    """Initial velocity of the geodesic from the origin that reaches p at t = 1.

    :param p: Target point.
    :return: U arctan(Sigma) V^+ for Z_p = U Sigma V^+.
    """
    factors = svd(p.z)
    return (factors.u * np.arctan(factors.sigma)) @ dagger(factors.v)


def moebius_to_origin(p: GrassmannPoint) -> MoebiusMap:
    """Unitary Moebius map sending p to the origin.

    :param p: Point to move.
    :return: Map with a = (1 + Z Z^+)^(-1/2), b = -a Z, c = (1 + Z^+ Z)^(-1/2) Z^+,
        d = (1 + Z^+ Z)^(-1/2).
    """
    z = p.z
    left = herm_fun(identity(p.n) + z @ dagger(z), inverse_sqrt)
    right = herm_fun(identity(p.m) + dagger(z) @ z, inverse_sqrt)
    return MoebiusMap(a=left, b=-(left @ z), c=right @ dagger(z), d=right)


def _check_map_fits(moebius: MoebiusMap, p: GrassmannPoint) -> None:
    if (moebius.n, moebius.m) != p.shape:
        raise DimensionError(
            f"Map acts on ({moebius.n}, {moebius.m}) but the point lives in {p.shape}."
        )


def moebius_apply(moebius: MoebiusMap, p: GrassmannPoint) -> GrassmannPoint:
    """Image (aZ + b)(cZ + d)^-1 of a point.

    :param moebius: The map.
    :param p: The point.
    :raises ChartExitError: If cZ + d is singular, the image is outside the chart.
    :return: The image point.
    """
    _check_map_fits(moebius, p)
    numerator = moebius.a @ p.z + moebius.b
    denominator = moebius.c @ p.z + moebius.d
    try:
        denominator_inverse = inverse(denominator)
    except SingularMatrixError as error:
        raise ChartExitError("Moebius image leaves the big cell of the chart.") from error
    return GrassmannPoint.from_matrix(numerator @ denominator_inverse)


def moebius_apply_closed_form(z1: GrassmannPoint, z: GrassmannPoint) -> GrassmannPoint:
    """Image of z under `moebius_to_origin(z1)`, by its closed form.

    (1 + Z1 Z1^+)^(-1/2) (Z - Z1) (1 + Z1^+ Z)^-1 (1 + Z1^+ Z1)^(1/2)

    :param z1: Point sent to the origin.
    :param z: Point to map.
    :raises ChartExitError: If 1 + Z1^+ Z is singular.
    :return: The image point.
    """
    _require_same_shape(z1, z)
    left = herm_fun(identity(z1.n) + z1.z @ dagger(z1.z), inverse_sqrt)
    right = herm_fun(identity(z1.m) + dagger(z1.z) @ z1.z, math.sqrt)
    try:
        middle = inverse(identity(z1.m) + dagger(z1.z) @ z.z)
    except SingularMatrixError as error:
        raise ChartExitError("Moebius image leaves the big cell of the chart.") from error
    return GrassmannPoint.from_matrix(left @ (z.z - z1.z) @ middle @ right)


def moebius_inverse(moebius: MoebiusMap) -> MoebiusMap:
    """Inverse map, from the inverse of the assembled block matrix.

    :param moebius: The map.
    :raises SingularMatrixError: If the block matrix is singular.
    :return: The inverse map.
    """
    block = inverse(moebius.as_block_matrix())
    n = moebius.n
    return MoebiusMap(a=block[:n, :n], b=block[:n, n:], c=block[n:, :n], d=block[n:, n:])


def geodesic_between(p: GrassmannPoint, q: GrassmannPoint) -> GeodesicSegment:
    """Geodesic arc from p to q.

    p is transported to the origin, the straight origin geodesic towards the image of q is taken and
    the result is transported back.

    :param p: Start point.
    :param q: End point.
    :raises CutLocusError: If the principal angles between p and q reach the uniqueness bound.
    :return: The segment.
    """
    _require_same_shape(p, q)
    transport = moebius_to_origin(p)
    image = moebius_apply(transport, q)
    factors = svd(image.z)
    angles = np.arctan(factors.sigma)
    check_uniqueness(angles)
    return GeodesicSegment(
        start=p,
        end=q,
        transport=transport,
        inverse_transport=moebius_inverse(transport),
        velocity_u=factors.u,
        velocity_sigma=angles,
        velocity_v=factors.v,
    )


def geodesic_velocity(seg: GeodesicSegment, t: float) -> ComplexMatrix:
    """Chart velocity dZ/dt of a segment.

    With Y(t) the arc in the start-at-origin frame and F(Y) = (aY + b)(cY + d)^-1 the transport
    back, dZ/dt = (a - F c) dY/dt (cY + d)^-1.

    :param seg: The segment.
    :param t: Curve parameter.
    :return: n x m matrix.
    """
    angles = seg.velocity_sigma * t
    check_uniqueness(angles)
    local = (seg.velocity_u * np.tan(angles)) @ dagger(seg.velocity_v)
    local_velocity = (seg.velocity_u * (seg.velocity_sigma / np.cos(angles) ** 2)) @ dagger(
        seg.velocity_v
    )
    back = seg.inverse_transport
    denominator_inverse = inverse(back.c @ local + back.d)
    image = (back.a @ local + back.b) @ denominator_inverse
    return (back.a - image @ back.c) @ local_velocity @ denominator_inverse


def collinear(
    p: GrassmannPoint, q: GrassmannPoint, r: GrassmannPoint, tol: float = DEFAULT_COLLINEAR_TOL
) -> bool:
    """Test whether three points lie on one geodesic.

    After moving p to the origin the images Z of q and Z0 of r must satisfy Z0 Z^+ = Z Z0^+ and
    Z0^+ Z = Z^+ Z0.

    :param p: First point.
    :param q: Second point.
    :param r: Third point.
    :param tol: Absolute tolerance on the largest entry of both differences.
    :return: True if both conditions hold.
    """
    _require_same_shape(p, q, r)
    transport = moebius_to_origin(p)
    z = moebius_apply(transport, q).z
    z0 = moebius_apply(transport, r).z
    rows_defect = max_abs(z0 @ dagger(z) - z @ dagger(z0))
    cols_defect = max_abs(dagger(z0) @ z - dagger(z) @ z0)
    logger.debug("Collinearity defects %s and %s (tol %s)", rows_defect, cols_defect, tol)
    return rows_defect <= tol and cols_defect <= tol


def kahler_form_from_resolvents(
    x: ComplexMatrix, y: ComplexMatrix, left: ComplexMatrix, right: ComplexMatrix
) -> RealArray:
    """Kahler form on (stacks of) tangent pairs with precomputed resolvents.

    :param x: Tangent(s), shape (..., n, m).
    :param y: Tangent(s), shape (..., n, m).
    :param left: (1 + Z Z^+)^-1, shape (..., n, n).
    :param right: (1 + Z^+ Z)^-1, shape (..., m, m).
    :return: (i/2) Tr[x R y^+ L - y R x^+ L], shape (...).
    """
    forward = np.einsum("...ij,...jk,...lk,...li->...", x, right, np.conj(y), left)
    backward = np.einsum("...ij,...jk,...lk,...li->...", y, right, np.conj(x), left)
    return np.real(0.5j * (forward - backward))


def kahler_form_eval(at: GrassmannPoint, x: MatrixLike, y: MatrixLike) -> float:
    """Kahler form omega evaluated on two chart tangents.

    :param at: Base point.
    :param x: n x m tangent.
    :param y: n x m tangent.
    :raises DimensionError: If a tangent does not have the shape of the chart.
    :return: omega(x, y), antisymmetric and real.
    """
    first = as_complex_matrix(x)
    second = as_complex_matrix(y)
    if first.shape != at.shape or second.shape != at.shape:
        raise DimensionError(
            f"Tangents of shapes {first.shape} and {second.shape} do not fit point {at.shape}."
        )
    left = inverse(identity(at.n) + at.z @ dagger(at.z))
    right = inverse(identity(at.m) + dagger(at.z) @ at.z)
    return float(kahler_form_from_resolvents(first, second, left, right))


def pullback_resolvent(moebius: MoebiusMap, z_image: GrassmannPoint) -> ComplexMatrix:
    """Recover 1 + Z Z^+ from the image Z' of Z under a unitary Moebius map.

    1 + Z Z^+ = (a - Z'c)^-1 (1 + Z'Z'^+) (a^+ - c^+ Z'^+)^-1

    :param moebius: Unitary map with Z' = moebius(Z).
    :param z_image: The image Z'.
    :return: n x n matrix.
    """
    _check_map_fits(moebius, z_image)
    factor = inverse(moebius.a - z_image.z @ moebius.c)
    return factor @ (identity(z_image.n) + z_image.z @ dagger(z_image.z)) @ dagger(factor)


def pullback_adjoint(moebius: MoebiusMap, z_image: GrassmannPoint) -> ComplexMatrix:
    """Recover Z^+ from the image Z' of Z under a unitary Moebius map.

    Z^+ = (d^+ Z'^+ - b^+)(a^+ - c^+ Z'^+)^-1

    :param moebius: Unitary map with Z' = moebius(Z).
    :param z_image: The image Z'.
    :return: m x n matrix.
    """
    _check_map_fits(moebius, z_image)
    image_adjoint = dagger(z_image.z)
    return (dagger(moebius.d) @ image_adjoint - dagger(moebius.b)) @ inverse(
        dagger(moebius.a) - dagger(moebius.c) @ image_adjoint
    )
