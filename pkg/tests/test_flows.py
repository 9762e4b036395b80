import csv
import math
import os
import tempfile
import unittest

import numpy as np

from contactkit.adcalc.calculus import finite_difference_jacobian
from contactkit.adcalc.chart import ChartPoint, ChartSpec
from contactkit.errors import OffSurfaceError, SingularDenominatorError
from contactkit.flows.fields import TimeDependentField, double_equiv_field, gray_field
from contactkit.flows.integrator import integrate_batch, integrate_flow, integrate_flows, write_trajectory_csv
from contactkit.flows.maps import (
    commutation_residual,
    conformality_residual,
    double_equivalence_many,
    hat_psi_pullback_residual,
    psi_c,
    psi_c_many,
    psi_c_map,
    psi_map,
    psi_rotation,
)
from contactkit.weinstein.double import cutoff_equation, double, sample_surface_points, shifted_potential
from contactkit.weinstein.models import make_model

PLANE = ChartSpec(2, (False, False), ('x', 'y'))


def rotation_field() -> TimeDependentField:
    return TimeDependentField(PLANE, lambda x, t: [-x[1], x[0]], 'rotation')


def lower_sheet_point(ds, r: float, phi: float, theta: float) -> ChartPoint:
    """A point of ``{f^D = 0}`` with ``s = -1`` where the cut-off sits on its lower plateau."""
    return ChartPoint(ds.chart, [r * math.cos(phi), r * math.sin(phi), -1.0, theta])


class IntegratorTestCase(unittest.TestCase):
    def test_linear_flow_and_its_jacobian(self):
        result = integrate_flow(rotation_field(), ChartPoint(PLANE, [1.0, 0.0]), 0.0, 1.0)
        c, s = math.cos(1.0), math.sin(1.0)
        np.testing.assert_allclose(result.endpoint.coords, [c, s], atol=1e-8)
        np.testing.assert_allclose(result.jacobian, [[c, -s], [s, c]], atol=1e-8)
        self.assertGreater(result.steps, 0)
        self.assertEqual(result.tol_used, (1e-10, 1e-12))

    def test_backward_integration_inverts_the_flow(self):
        start = ChartPoint(PLANE, [0.3, -0.2])
        forward = integrate_flow(rotation_field(), start, 0.0, 2.0)
        backward = integrate_flow(rotation_field(), forward.endpoint, 2.0, 0.0)
        np.testing.assert_allclose(backward.endpoint.coords, start.coords, atol=1e-8)

    def test_time_dependent_field(self):
        field_ = TimeDependentField(PLANE, lambda x, t: [t, 0.0 * x[1]], 'ramp')
        result = integrate_flow(field_, ChartPoint(PLANE, [0.0, 0.0]), 0.0, 2.0)
        self.assertAlmostEqual(result.endpoint.coords[0], 2.0, places=8)

    def test_batch_rows_match_single_integrations(self):
        starts = np.array([[1.0, 0.0], [0.0, 2.0], [0.5, 0.5]])
        batch = integrate_batch(rotation_field(), starts, 0.0, 0.5)
        for row, start in zip(batch.coords, starts):
            single = integrate_flow(rotation_field(), ChartPoint(PLANE, start), 0.0, 0.5)
            np.testing.assert_allclose(row, single.endpoint.coords, atol=1e-9)

    def test_zero_span(self):
        result = integrate_flow(rotation_field(), ChartPoint(PLANE, [1.0, 1.0]), 0.3, 0.3)
        self.assertEqual(result.steps, 0)
        np.testing.assert_array_equal(result.jacobian, np.eye(2))

    def test_drift_monitors_the_constraint(self):
        def radius(coords, t):
            return coords[:, 0] ** 2 + coords[:, 1] ** 2 - 1.0

        result = integrate_flows(rotation_field(), [ChartPoint(PLANE, [1.0, 0.0])], 0.0, 3.0, constraint=radius)[0]
        self.assertLess(result.drift, 1e-8)

    def test_trajectory_dump(self):
        result = integrate_flow(rotation_field(), ChartPoint(PLANE, [1.0, 0.0]), 0.0, 1.0, record=True)
        self.assertEqual(result.trajectory[0][:3], [0.0, 1.0, 0.0])
        with tempfile.TemporaryDirectory() as directory:
            path = os.path.join(directory, 'trajectory.csv')
            write_trajectory_csv(result.trajectory, path, PLANE.coordinate_names)
            with open(path, newline='') as f:
                rows = list(csv.reader(f))
        self.assertEqual(rows[0], ['t', 'x', 'y', 'abs_fD'])
        self.assertEqual(len(rows), len(result.trajectory) + 1)
        self.assertAlmostEqual(float(rows[-1][0]), 1.0)


class FlowFieldsTestCase(unittest.TestCase):
    def setUp(self):
        self.model = make_model('flat', 1)
        self.ds = double(self.model, cutoff_equation(self.model))
        self.points = sample_surface_points(self.ds, 20, np.random.default_rng(2))

    def test_gray_field_is_tangent_and_in_the_kernel(self):
        Y = gray_field(self.ds).evaluate_batch(self.points, np.zeros(len(self.points)))
        gradients = self.ds.fD.gradient_batch(self.points)
        np.testing.assert_allclose(np.sum(gradients * Y, axis=1), 0.0, atol=1e-12)
        alpha = self.ds.lambdaD.evaluate_batch(self.points, Y)
        np.testing.assert_allclose(alpha, 0.0, atol=1e-12)

    def test_gray_field_vanishes_without_rotation_potential(self):
        Y = gray_field(self.ds).evaluate_batch(np.array([[0.0, 0.0, 1.0, 0.3]]), np.zeros(1))
        np.testing.assert_allclose(Y, 0.0)

    def test_singular_denominator(self):
        Y = gray_field(self.ds)
        with self.assertRaises(SingularDenominatorError) as context:
            Y.evaluate_batch(np.array([[0.0, 0.0, 0.0, 0.0]]), np.zeros(1))
        self.assertEqual(context.exception.witness, [0.0, 0.0, 0.0, 0.0])

    def test_double_equivalence_field_vanishes_for_equal_equations(self):
        f = self.ds.f
        X = double_equiv_field(f, f, self.ds).evaluate_batch(self.points, np.full(len(self.points), 0.5))
        np.testing.assert_array_equal(X, 0.0)


class PsiCTestCase(unittest.TestCase):
    def setUp(self):
        self.model = make_model('flat', 1)
        self.ds = double(self.model, cutoff_equation(self.model))
        coords = sample_surface_points(self.ds, 6, np.random.default_rng(4))
        self.points = [ChartPoint(self.ds.chart, c) for c in coords]

    def test_zero_iterates_are_the_identity(self):
        results = psi_c_many(self.ds, self.points, 0)
        for p, result in zip(self.points, results):
            self.assertEqual(result.endpoint, p)
            np.testing.assert_array_equal(result.jacobian, np.eye(4))

    def test_negative_iterates_are_rejected(self):
        with self.assertRaises(ValueError):
            psi_c_many(self.ds, self.points, -1)

    def test_images_stay_on_the_surface(self):
        for result in psi_c_many(self.ds, self.points, 2):
            self.assertLess(abs(self.ds.fD(result.endpoint)), 1e-8)

    def test_start_point_off_the_surface(self):
        with self.assertRaises(OffSurfaceError):
            psi_c(self.ds, ChartPoint(self.ds.chart, [0.1, 0.1, 2.0, 0.0]), 1)

    def test_psi_c_is_a_contactomorphism(self):
        smooth_map = psi_c_map(self.ds, 1)
        for p in self.points[:3]:
            factor, residual = conformality_residual(smooth_map, self.ds, p)
            self.assertGreater(factor, 0.0)
            self.assertLess(residual, 1e-6)

    def test_plain_rotation_is_not_a_contactomorphism(self):
        p = ChartPoint(self.ds.chart, [0.5, 0.0, -1.0, 0.0])
        self.assertLess(abs(self.ds.fD(p)), 1e-12)
        _, residual = conformality_residual(psi_map(self.ds), self.ds, p)
        self.assertGreater(residual, 1e-3)

    def test_rotation_pulls_lambda_back_to_the_deformed_form(self):
        for p in self.points:
            self.assertLess(hat_psi_pullback_residual(self.ds, p), 1e-12)

    def test_analytic_rotation_jacobian(self):
        p = self.points[0]
        image, jacobian = psi_rotation(self.ds, p)
        ad_image, ad_jacobian = psi_map(self.ds).apply_with_jacobian(p)
        self.assertEqual(image, ad_image)
        np.testing.assert_allclose(jacobian, ad_jacobian, atol=1e-14)


class LowerSheetTestCase(unittest.TestCase):
    """On ``s = -1`` with ``r^2 <= 1/2`` the Gray field is ``-r^3/4 d/dr``."""

    def setUp(self):
        self.model = make_model('flat', 1)
        self.ds = double(self.model, cutoff_equation(self.model))

    def test_gray_field_closed_form(self):
        samples = ((0.1, 0.0, 0.0), (0.5, 1.2, 2.0), (0.65, -2.5, 5.5), (0.3, 3.0, 1.0))
        coords = np.array([lower_sheet_point(self.ds, *sample).coords for sample in samples])
        Y = gray_field(self.ds).evaluate_batch(coords, np.zeros(len(coords)))
        r2 = coords[:, 0] ** 2 + coords[:, 1] ** 2
        Z = 0.5 * coords[:, :2]
        np.testing.assert_allclose(Y[:, :2], -0.5 * r2[:, None] * Z, atol=1e-15)
        np.testing.assert_allclose(Y[:, 2:], 0.0, atol=1e-15)
        radial = np.sum(Y[:, :2] * coords[:, :2], axis=1) / np.sqrt(r2)
        np.testing.assert_allclose(radial, -(r2**1.5) / 4.0, atol=1e-15)

    def test_flow_keeps_s_at_minus_one(self):
        result = psi_c(self.ds, lower_sheet_point(self.ds, 0.5, 0.4, 1.3), 2, record=True)
        self.assertGreater(len(result.trajectory), 2)
        s = np.array([row[3] for row in result.trajectory])
        self.assertLess(float(np.max(np.abs(s + 1.0))), 1e-10)
        self.assertLess(abs(result.endpoint.coords[2] + 1.0), 1e-10)

    def test_iterates_rotate_by_theta_and_shrink_the_radius(self):
        theta = 0.9
        for k in range(4):
            endpoint = psi_c(self.ds, lower_sheet_point(self.ds, 0.5, 0.0, theta), k).endpoint.coords
            angle = math.atan2(endpoint[1], endpoint[0])
            self.assertAlmostEqual(math.remainder(angle - k * theta, 2.0 * math.pi), 0.0, places=8)
            self.assertAlmostEqual(2.0 / (endpoint[0] ** 2 + endpoint[1] ** 2), 8.0 + k, places=7)
            self.assertAlmostEqual(endpoint[2], -1.0, places=10)
            self.assertAlmostEqual(endpoint[3], theta, places=12)

    def test_iterates_compose(self):
        coords = sample_surface_points(self.ds, 3, np.random.default_rng(13))
        points = [ChartPoint(self.ds.chart, c) for c in coords]
        points.append(lower_sheet_point(self.ds, 0.6, 2.0, 4.0))
        for p in points:
            for j, k in ((1, 1), (1, 2)):
                whole = psi_c(self.ds, p, j + k).endpoint
                split = psi_c(self.ds, psi_c(self.ds, p, k).endpoint, j).endpoint
                self.assertLess(whole.distance(split), 1e-8)

    def test_variational_jacobian_matches_finite_differences(self):
        tight = (1e-12, 1e-14)
        # finite-difference neighbours leave the hypersurface by about the step
        smooth_map = psi_c_map(self.ds, 1, tight, surface_tol=1e-2)
        points = [
            lower_sheet_point(self.ds, 0.5, 0.3, 0.7),
            ChartPoint(self.ds.chart, sample_surface_points(self.ds, 1, np.random.default_rng(21))[0]),
        ]
        for p in points:
            exact = smooth_map.jacobian(p)
            approx = finite_difference_jacobian(smooth_map, p, step=1e-4)
            np.testing.assert_allclose(exact, approx, atol=1e-5)

    def test_endpoints_converge_as_tolerances_tighten(self):
        p = lower_sheet_point(self.ds, 0.5, 0.8, 2.2)
        r1 = 1.0 / math.sqrt(4.5)
        exact = np.array([r1 * math.cos(3.0), r1 * math.sin(3.0), -1.0, 2.2])
        errors = [
            float(np.max(np.abs(psi_c(self.ds, p, 1, tol).endpoint.coords - exact)))
            for tol in ((1e-6, 1e-8), (1e-10, 1e-12))
        ]
        self.assertLess(errors[0], 1e-4)
        self.assertLess(errors[1], 1e-8)
        self.assertLessEqual(errors[1], errors[0])


class DoubleEquivalenceTestCase(unittest.TestCase):
    def setUp(self):
        self.model = make_model('flat', 1)
        self.ds = double(self.model, cutoff_equation(self.model))
        self.f0 = shifted_potential(self.model)
        self.f1 = self.ds.f
        coords = sample_surface_points(self.ds, 6, np.random.default_rng(8))
        self.points = [ChartPoint(self.ds.chart, c) for c in coords]

    def test_images_land_on_the_uncut_double(self):
        target = double(self.model, self.f0, samples=0).fD
        for result in double_equivalence_many(self.f0, self.f1, self.ds, self.points):
            self.assertLess(abs(target(result.endpoint)), 1e-8)
            self.assertLess(result.drift, 1e-8)

    def test_flow_commutes_with_the_rotation(self):
        residuals = commutation_residual(self.f0, self.f1, self.ds, self.points)
        self.assertEqual(residuals.shape, (len(self.points),))
        self.assertLess(float(residuals.max()), 1e-8)

    def test_equal_equations_give_the_identity(self):
        for p, result in zip(self.points, double_equivalence_many(self.f1, self.f1, self.ds, self.points)):
            self.assertLess(p.distance(result.endpoint), 1e-14)


if __name__ == '__main__':
    unittest.main()
