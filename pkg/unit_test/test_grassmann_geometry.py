import math
import unittest

import numpy as np

from coherent_phase.grassmann_geometry import (
    ChartExitError,
    CutLocusError,
    GrassmannPoint,
    MoebiusMap,
    cayley_distance,
    collinear,
    geodesic_between,
    geodesic_from_origin,
    geodesic_velocity,
    kahler_form_eval,
    log_origin,
    moebius_apply,
    moebius_apply_closed_form,
    moebius_inverse,
    moebius_to_origin,
    overlap_kernel,
    pullback_adjoint,
    pullback_resolvent,
)
from coherent_phase.holonomy_integrals import connection_form_eval, gauss_legendre
from coherent_phase.mat_core import DimensionError, dagger, identity, max_abs

P = GrassmannPoint.from_matrix([[0.2 + 0.1j, -0.3j], [0.1, 0.25 - 0.05j]])
Q = GrassmannPoint.from_matrix([[-0.1, 0.2 + 0.2j], [0.3j, -0.15]])
R = GrassmannPoint.from_matrix([[0.05j, 0.1], [-0.2 + 0.1j, 0.3]])


class GrassmannPointTest(unittest.TestCase):
    def test__from_matrix__takes_shape(self) -> None:
        # Act
        point = GrassmannPoint.from_matrix(np.zeros((2, 3)))

        # Assert
        self.assertEqual(point.shape, (2, 3))

    def test__init__shape_mismatch(self) -> None:
        # Act / Assert
        with self.assertRaises(DimensionError):
            GrassmannPoint(n=2, m=2, z=np.zeros((2, 3)))

    def test__init__coordinate_is_read_only(self) -> None:
        # Arrange
        point = GrassmannPoint.origin(1, 1)

        # Act / Assert
        with self.assertRaises(ValueError):
            point.z[0, 0] = 1.0


class OverlapKernelTest(unittest.TestCase):
    def test__overlap_kernel__cp1_value(self) -> None:
        # Arrange
        first = GrassmannPoint.from_matrix([[1.0]])
        second = GrassmannPoint.from_matrix([[1j]])

        # Act
        result = overlap_kernel(first, second)

        # Assert
        self.assertAlmostEqual(result, 1 + 1j)

    def test__overlap_kernel__with_origin_is_one(self) -> None:
        # Act
        result = overlap_kernel(GrassmannPoint.origin(2, 2), Q)

        # Assert
        self.assertAlmostEqual(result, 1.0)

    def test__overlap_kernel__swapping_arguments_conjugates_exactly(self) -> None:
        # Act
        forward = overlap_kernel(P, Q)
        backward = overlap_kernel(Q, P)

        # Assert
        self.assertEqual(forward, backward.conjugate())

    def test__overlap_kernel__diagonal_is_real(self) -> None:
        # Act
        result = overlap_kernel(P, P)

        # Assert
        self.assertEqual(result.imag, 0.0)
        self.assertGreater(result.real, 1.0)

    def test__overlap_kernel__different_grassmannians(self) -> None:
        # Act / Assert
        with self.assertRaises(DimensionError):
            overlap_kernel(GrassmannPoint.origin(1, 1), GrassmannPoint.origin(1, 2))


class CayleyDistanceTest(unittest.TestCase):
    def test__cayley_distance__cp1(self) -> None:
        # Act
        result = cayley_distance(GrassmannPoint.origin(1, 1), GrassmannPoint.from_matrix([[1.0]]))

        # Assert
        self.assertAlmostEqual(result, math.pi / 4)

    def test__cayley_distance__same_point_is_zero(self) -> None:
        # Act
        result = cayley_distance(P, P)

        # Assert
        self.assertAlmostEqual(result, 0.0, places=7)

    def test__cayley_distance__invariant_under_transport(self) -> None:
        # Arrange
        transport = moebius_to_origin(R)

        # Act
        before = cayley_distance(P, Q)
        after = cayley_distance(moebius_apply(transport, P), moebius_apply(transport, Q))

        # Assert
        self.assertAlmostEqual(before, after, places=12)

    def test__cayley_distance__triangle_inequality(self) -> None:
        # Act
        pq = cayley_distance(P, Q)
        qr = cayley_distance(Q, R)
        pr = cayley_distance(P, R)

        # Assert
        self.assertLessEqual(pr, pq + qr)
        self.assertLessEqual(pq, pr + qr)
        self.assertLessEqual(qr, pq + pr)


class GeodesicFromOriginTest(unittest.TestCase):
    def test__geodesic_from_origin__cp1(self) -> None:
        # Act
        result = geodesic_from_origin([[1.0]], 0.5)

        # Assert
        self.assertAlmostEqual(result.z[0, 0], math.tan(0.5))

    def test__geodesic_from_origin__cut_locus(self) -> None:
        # Act / Assert
        with self.assertRaises(CutLocusError) as context:
            geodesic_from_origin([[2.0]], 1.0)
        self.assertAlmostEqual(context.exception.parameter, 2.0)

    def test__log_origin__inverts_geodesic(self) -> None:
        # Arrange
        velocity = np.array([[0.3, 0.2j], [-0.1, 0.4 + 0.1j]])
        point = geodesic_from_origin(velocity, 1.0)

        # Act
        result = log_origin(point)

        # Assert
        self.assertLess(max_abs(result - velocity), 1e-12)


class MoebiusTest(unittest.TestCase):
    def test__moebius_to_origin__sends_point_to_origin(self) -> None:
        # Act
        result = moebius_apply(moebius_to_origin(P), P)

        # Assert
        self.assertLess(max_abs(result.z), 1e-14)

    def test__moebius_to_origin__is_unitary(self) -> None:
        # Act
        block = moebius_to_origin(P).as_block_matrix()

        # Assert
        self.assertLess(max_abs(block @ dagger(block) - identity(4)), 1e-13)

    def test__moebius_apply_closed_form__matches_block_form(self) -> None:
        # Act
        closed = moebius_apply_closed_form(P, Q)
        blocks = moebius_apply(moebius_to_origin(P), Q)

        # Assert
        self.assertLess(max_abs(closed.z - blocks.z), 1e-13)

    def test__moebius_inverse__returns_to_start(self) -> None:
        # Arrange
        transport = moebius_to_origin(P)

        # Act
        result = moebius_apply(moebius_inverse(transport), GrassmannPoint.origin(2, 2))

        # Assert
        self.assertLess(max_abs(result.z - P.z), 1e-13)

    def test__moebius_inverse__applied_twice_is_projectively_the_map(self) -> None:
        # Arrange
        transport = moebius_to_origin(Q)

        # Act
        result = moebius_inverse(moebius_inverse(transport))

        # Assert
        self.assertTrue(result.is_projectively_equal(transport))

    def test__moebius_apply__leaves_chart(self) -> None:
        # Arrange
        transport = moebius_to_origin(GrassmannPoint.from_matrix([[1.0]]))

        # Act / Assert
        with self.assertRaises(ChartExitError):
            moebius_apply(transport, GrassmannPoint.from_matrix([[-1.0]]))

    def test__moebius_apply_closed_form__leaves_chart(self) -> None:
        # Act / Assert
        with self.assertRaises(ChartExitError):
            moebius_apply_closed_form(
                GrassmannPoint.from_matrix([[1.0]]), GrassmannPoint.from_matrix([[-1.0]])
            )

    def test__is_projectively_equal__rescaled_map(self) -> None:
        # Arrange
        transport = moebius_to_origin(P)
        rescaled = MoebiusMap(
            a=2j * transport.a, b=2j * transport.b, c=2j * transport.c, d=2j * transport.d
        )

        # Act
        result = transport.is_projectively_equal(rescaled)

        # Assert
        self.assertTrue(result)
        self.assertFalse(transport.is_projectively_equal(MoebiusMap.identity(2, 2)))

    def test__init__blocks_do_not_fit(self) -> None:
        # Act / Assert
        with self.assertRaises(DimensionError):
            MoebiusMap(a=identity(2), b=np.zeros((2, 1)), c=np.zeros((2, 2)), d=identity(1))

    def test__pullback_resolvent__recovers_resolvent(self) -> None:
        # Arrange
        transport = moebius_to_origin(P)
        image = moebius_apply(transport, Q)

        # Act
        result = pullback_resolvent(transport, image)

        # Assert
        self.assertLess(max_abs(result - (identity(2) + Q.z @ dagger(Q.z))), 1e-12)

    def test__pullback_adjoint__recovers_adjoint(self) -> None:
        # Arrange
        transport = moebius_to_origin(P)
        image = moebius_apply(transport, Q)

        # Act
        result = pullback_adjoint(transport, image)

        # Assert
        self.assertLess(max_abs(result - dagger(Q.z)), 1e-12)


class GeodesicBetweenTest(unittest.TestCase):
    def test__geodesic_between__end_points(self) -> None:
        # Act
        segment = geodesic_between(P, Q)

        # Assert
        self.assertLess(max_abs(segment.point_at(0.0).z - P.z), 1e-13)
        self.assertLess(max_abs(segment.point_at(1.0).z - Q.z), 1e-12)

    def test__geodesic_between__angle_is_cayley_distance_on_cp1(self) -> None:
        # Arrange
        start = GrassmannPoint.from_matrix([[0.3 + 0.2j]])
        end = GrassmannPoint.from_matrix([[-0.4j]])

        # Act
        segment = geodesic_between(start, end)

        # Assert
        self.assertAlmostEqual(float(segment.velocity_sigma[0]), cayley_distance(start, end))

    def test__geodesic_between__antipodal_on_cp1(self) -> None:
        # Arrange
        start = GrassmannPoint.from_matrix([[1.0]])
        end = GrassmannPoint.from_matrix([[-1.0]])

        # Act / Assert
        with self.assertRaises(ChartExitError):
            geodesic_between(start, end)

    def test__geodesic_between__midpoint_is_equidistant(self) -> None:
        # Arrange
        segment = geodesic_between(P, Q)

        # Act
        midpoint = segment.point_at(0.5)

        # Assert
        self.assertLess(abs(cayley_distance(P, midpoint) - cayley_distance(midpoint, Q)), 1e-12)

    def test__geodesic_between__midpoint_halves_distance_on_cp1(self) -> None:
        # Arrange
        start = GrassmannPoint.from_matrix([[0.3 + 0.1j]])
        end = GrassmannPoint.from_matrix([[-0.2 + 0.4j]])

        # Act
        midpoint = geodesic_between(start, end).point_at(0.5)

        # Assert
        halves = cayley_distance(start, midpoint) + cayley_distance(midpoint, end)
        self.assertLess(abs(halves - cayley_distance(start, end)), 1e-12)

    def test__geodesic_velocity__matches_finite_difference(self) -> None:
        # Arrange
        segment = geodesic_between(P, Q)
        step = 1e-5

        # Act
        result = geodesic_velocity(segment, 0.4)

        # Assert
        difference = (segment.point_at(0.4 + step).z - segment.point_at(0.4 - step).z) / (
            2 * step
        )
        self.assertLess(max_abs(result - difference), 1e-7)

    def test__collinear__points_of_one_geodesic(self) -> None:
        # Arrange
        segment = geodesic_between(P, Q)

        # Act
        result = collinear(P, segment.point_at(0.3), Q)

        # Assert
        self.assertTrue(result)

    def test__collinear__generic_triangle(self) -> None:
        # Act
        result = collinear(P, Q, R)

        # Assert
        self.assertFalse(result)


class KahlerFormTest(unittest.TestCase):
    def test__kahler_form_eval__at_origin(self) -> None:
        # Act
        result = kahler_form_eval(GrassmannPoint.origin(1, 1), [[1.0]], [[1j]])

        # Assert
        self.assertAlmostEqual(result, 1.0)

    def test__kahler_form_eval__cp1_conformal_factor(self) -> None:
        # Arrange
        point = GrassmannPoint.from_matrix([[0.5j]])

        # Act
        result = kahler_form_eval(point, [[1.0]], [[1j]])

        # Assert
        self.assertAlmostEqual(result, 1.0 / 1.25**2)

    def test__kahler_form_eval__antisymmetric(self) -> None:
        # Arrange
        x = np.array([[0.3, 1j], [0.2 - 0.1j, 0.5]])
        y = np.array([[-0.2j, 0.4], [0.1, 0.3 + 0.3j]])

        # Act
        forward = kahler_form_eval(P, x, y)
        backward = kahler_form_eval(P, y, x)

        # Assert
        self.assertEqual(forward, -backward)

    def test__kahler_form_eval__tangent_shape(self) -> None:
        # Act / Assert
        with self.assertRaises(DimensionError):
            kahler_form_eval(P, np.zeros((1, 2)), np.zeros((2, 2)))

    def test__kahler_form_eval__is_curvature_of_berry_connection(self) -> None:
        # Arrange
        h = 1e-3
        x = np.array([[0.3, 1j], [0.2 - 0.1j, 0.5]])
        y = np.array([[-0.2j, 0.4], [0.1, 0.3 + 0.3j]])
        corner = P.z - 0.5 * h * (x + y)
        edges = [h * x, h * y, -h * x, -h * y]
        nodes, weights = gauss_legendre(8)

        # Act
        circulation = 0.0
        for edge in edges:
            for node, weight in zip(nodes, weights):
                point = GrassmannPoint.from_matrix(corner + node * edge)
                circulation += weight * connection_form_eval(point, edge, "berry").real
            corner = corner + edge

        # Assert
        expected = -2.0 * kahler_form_eval(P, x, y)
        self.assertLess(abs(circulation / h**2 - expected), 1e-5)
