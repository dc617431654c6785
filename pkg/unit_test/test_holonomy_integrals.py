import cmath
import math
import unittest

import numpy as np

from coherent_phase.grassmann_geometry import ChartExitError, GrassmannPoint
from coherent_phase.holonomy_integrals import (
    ConnectionKind,
    DeformationReport,
    NumericalDomainError,
    QuadratureSpec,
    bundle_loop_integral,
    chart_winding,
    connection_form_eval,
    deformation_residual,
    fan_surface,
    gauss_legendre,
    loop_connection_integral,
    loop_connection_residue,
    parallel_transport_factor,
    sphere_solid_angle_check,
    sphere_total_area,
    spherical_excess,
    surface_area_quad,
)
from coherent_phase.mat_core import DimensionError, max_abs

ORIGIN = GrassmannPoint.origin(1, 1)
ONE = GrassmannPoint.from_matrix([[1.0]])
IMAG = GrassmannPoint.from_matrix([[1j]])

X = GrassmannPoint.from_matrix([[0.2, -0.1j]])
Y = GrassmannPoint.from_matrix([[-0.1 + 0.3j, 0.2]])
Z = GrassmannPoint.from_matrix([[0.1j, -0.25 + 0.05j]])

# small triangle on CP^1 whose fans cover the point at infinity of the chart
FAR = tuple(
    GrassmannPoint.from_matrix([[10.0 * cmath.exp(2j * math.pi * k / 3)]]) for k in range(3)
)


class GaussLegendreTest(unittest.TestCase):
    def test__gauss_legendre__weights_sum_to_one(self) -> None:
        # Act
        nodes, weights = gauss_legendre(16)

        # Assert
        self.assertAlmostEqual(float(np.sum(weights)), 1.0, places=14)
        self.assertTrue(np.all(np.diff(nodes) > 0.0))
        self.assertTrue(0.0 < nodes[0] and nodes[-1] < 1.0)

    def test__gauss_legendre__exact_for_degree_nine(self) -> None:
        # Arrange
        nodes, weights = gauss_legendre(5)

        # Act
        result = float(np.dot(weights, nodes**9))

        # Assert
        self.assertAlmostEqual(result, 0.1, places=14)

    def test__gauss_legendre__single_node(self) -> None:
        # Act
        nodes, weights = gauss_legendre(1)

        # Assert
        self.assertAlmostEqual(float(nodes[0]), 0.5)
        self.assertAlmostEqual(float(weights[0]), 1.0)

    def test__gauss_legendre__order_zero(self) -> None:
        # Act / Assert
        with self.assertRaises(ValueError):
            gauss_legendre(0)

    def test__quadrature_spec__invalid_settings(self) -> None:
        # Act / Assert
        with self.assertRaises(ValueError):
            QuadratureSpec(order=1)
        with self.assertRaises(ValueError):
            QuadratureSpec(fd_step=1e-2)


class SurfaceAreaTest(unittest.TestCase):
    def test__surface_area_quad__anchor_triangle(self) -> None:
        # Act
        result = surface_area_quad(ORIGIN, ONE, IMAG, QuadratureSpec(order=32))

        # Assert
        self.assertLess(abs(result + math.pi / 8), 1e-6)

    def test__surface_area_quad__swapping_vertices_flips_sign(self) -> None:
        # Arrange
        spec = QuadratureSpec(order=16)

        # Act
        forward = surface_area_quad(X, Y, Z, spec)
        backward = surface_area_quad(X, Z, Y, spec)

        # Assert
        self.assertLess(abs(forward + backward), 1e-6)

    def test__fan_surface__corners(self) -> None:
        # Arrange
        fan = fan_surface(X, Y, Z)

        # Act
        apex = fan.point_at(0.3, 0.0)
        start = fan.point_at(0.0, 1.0)
        end = fan.point_at(1.0, 1.0)

        # Assert
        self.assertLess(max_abs(apex.z - X.z), 1e-13)
        self.assertLess(max_abs(start.z - Y.z), 1e-12)
        self.assertLess(max_abs(end.z - Z.z), 1e-12)

    def test__deformation_residual__every_apex_gives_the_same_area(self) -> None:
        # Act
        report = deformation_residual(X, Y, Z, QuadratureSpec(order=16))

        # Assert
        self.assertLess(report.spread, 1e-6)
        self.assertLessEqual(report.residual, report.spread)

    def test__deformation_report__spread(self) -> None:
        # Arrange
        report = DeformationReport(area_x=0.1, area_y=0.3, area_z=0.2)

        # Act / Assert
        self.assertAlmostEqual(report.residual, 0.2)
        self.assertAlmostEqual(report.spread, 0.2)

    def test__parallel_transport_factor__anchor_triangle(self) -> None:
        # Act
        result = parallel_transport_factor(ORIGIN, ONE, IMAG, QuadratureSpec(order=32))

        # Assert
        self.assertLess(abs(result - cmath.exp(-0.25j * math.pi)), 1e-6)


class ConnectionTest(unittest.TestCase):
    def test__connection_form_eval__berry_angular_tangent(self) -> None:
        # Arrange
        point = GrassmannPoint.from_matrix([[0.5]])

        # Act
        result = connection_form_eval(point, [[1j]], "berry")

        # Assert
        self.assertAlmostEqual(result, -0.4 + 0j)
        self.assertEqual(result.imag, 0.0)

    def test__connection_form_eval__bundle_angular_tangent(self) -> None:
        # Arrange
        point = GrassmannPoint.from_matrix([[0.5]])

        # Act
        result = connection_form_eval(point, [[1j]], ConnectionKind.BUNDLE)

        # Assert
        self.assertAlmostEqual(result, -0.4 + 0j)

    def test__connection_form_eval__vanishes_at_origin(self) -> None:
        # Act
        result = connection_form_eval(ORIGIN, [[0.3 + 0.2j]], ConnectionKind.BERRY)

        # Assert
        self.assertEqual(result, 0j)

    def test__connection_form_eval__tangent_shape(self) -> None:
        # Act / Assert
        with self.assertRaises(DimensionError):
            connection_form_eval(X, [[1.0]], ConnectionKind.BERRY)

    def test__connection_form_eval__unknown_kind(self) -> None:
        # Act / Assert
        with self.assertRaises(ValueError):
            connection_form_eval(ORIGIN, [[1.0]], "levi-civita")

    def test__loop_connection_integral__twice_the_area(self) -> None:
        # Arrange
        area = surface_area_quad(X, Y, Z, QuadratureSpec(order=16))

        # Act
        berry = loop_connection_integral(X, Y, Z, ConnectionKind.BERRY, 32)
        bundle = loop_connection_integral(X, Y, Z, ConnectionKind.BUNDLE, 32)

        # Assert
        self.assertLess(abs(berry - 2.0 * area), 1e-6)
        self.assertLess(abs(bundle - berry), 1e-8)

    def test__loop_connection_residue__vanishes(self) -> None:
        # Act
        result = loop_connection_residue(X, Y, Z, 32)

        # Assert
        self.assertLess(result, 1e-10)


class SphereTest(unittest.TestCase):
    def test__spherical_excess__octant(self) -> None:
        # Act
        result = spherical_excess(math.pi / 2, math.pi / 2, math.pi / 2)

        # Assert
        self.assertAlmostEqual(result, math.pi / 2, places=12)

    def test__sphere_solid_angle_check__anchor(self) -> None:
        # Act
        check = sphere_solid_angle_check(1.0, 1j)

        # Assert
        self.assertAlmostEqual(check.phase, -math.pi / 4, places=12)
        self.assertAlmostEqual(check.half_solid_angle, math.pi / 4, places=8)
        self.assertLess(check.residual, 1e-8)

    def test__sphere_solid_angle_check__generic_triangle(self) -> None:
        # Act
        check = sphere_solid_angle_check(0.4 - 0.3j, -0.2 + 0.7j)

        # Assert
        self.assertLess(check.residual, 1e-8)

    def test__sphere_solid_angle_check__thin_triangle(self) -> None:
        # Act
        check = sphere_solid_angle_check(0.5, 0.5 + 0.01j)

        # Assert
        self.assertLess(check.residual, 1e-8)

    def test__sphere_solid_angle_check__vanishing_side(self) -> None:
        # Act / Assert
        with self.assertRaises(NumericalDomainError):
            sphere_solid_angle_check(0.5, 0.5)

    def test__sphere_total_area__adds_up_to_pi(self) -> None:
        # Act
        report = sphere_total_area()

        # Assert
        self.assertLess(abs(report.area - math.pi), 1e-4)
        self.assertAlmostEqual(report.area + report.tail_bound, math.pi, places=10)


class ChartGuardTest(unittest.TestCase):
    def test__chart_winding__triangles_inside_the_chart(self) -> None:
        # Act
        anchor = chart_winding(ORIGIN, ONE, IMAG)
        generic = chart_winding(X, Y, Z)
        from_other_apex = chart_winding(IMAG, ORIGIN, ONE)

        # Assert
        self.assertEqual(anchor, 0)
        self.assertEqual(generic, 0)
        self.assertEqual(from_other_apex, 0)

    def test__chart_winding__triangle_around_point_at_infinity(self) -> None:
        # Act
        result = chart_winding(*FAR)

        # Assert
        self.assertEqual(abs(result), 1)

    def test__loop_connection_integral__fan_leaves_chart(self) -> None:
        # Act / Assert
        with self.assertRaises(ChartExitError):
            loop_connection_integral(*FAR, ConnectionKind.BERRY, 32)
        with self.assertRaises(ChartExitError):
            bundle_loop_integral(*FAR, 32)

    def test__surface_area_quad__fan_leaves_chart(self) -> None:
        # Act / Assert
        with self.assertRaises(ChartExitError):
            surface_area_quad(*FAR, QuadratureSpec(order=16))
        with self.assertRaises(ChartExitError):
            deformation_residual(*FAR, QuadratureSpec(order=16))

    def test__bundle_loop_integral__real_part_is_the_bundle_loop(self) -> None:
        # Act
        total = bundle_loop_integral(X, Y, Z, 32)
        bundle = loop_connection_integral(X, Y, Z, ConnectionKind.BUNDLE, 32)

        # Assert
        self.assertEqual(total.real, bundle)
        self.assertLess(abs(total.imag), 1e-10)
