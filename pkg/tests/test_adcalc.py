import math
import unittest

import numpy as np

from contactkit.adcalc.calculus import (
    d_oneform,
    exterior_derivative,
    finite_difference_gradient,
    finite_difference_jacobian,
    level_set_frame,
    lie_derivative_oneform,
    pullback_oneform,
    tangent_basis_of_level_set,
)
from contactkit.adcalc.chart import ChartPoint, ChartSpec, TangentVector
from contactkit.adcalc.dual import Dual, cos, exp, jvp, lift, linearize, log, new_tag, primal, sin, sqrt
from contactkit.adcalc.fields import OneForm, ScalarField, SmoothMap, VectorField
from contactkit.errors import CriticalPointError, EvaluationError, OffSurfaceError

PLANE = ChartSpec(2, (False, False), ('x', 'y'))
CYLINDER = ChartSpec(2, (False, True), ('s', 'theta'))


def liouville_form() -> OneForm:
    return OneForm(PLANE, lambda x, v: x[0] * v[1] - x[1] * v[0], 'lambda')


def radial_field() -> VectorField:
    return VectorField(PLANE, lambda x: [0.5 * x[0], 0.5 * x[1]], 'Z')


class DualArithmeticTestCase(unittest.TestCase):
    def test_product_rule(self):
        tag = new_tag()
        x = Dual(3.0, 1.0, tag)
        y = x * x * 2.0 + 1.0
        self.assertEqual(y.value, 19.0)
        self.assertEqual(y.tangent, 12.0)

    def test_quotient_and_reflected_operators(self):
        tag = new_tag()
        x = Dual(2.0, 1.0, tag)
        y = 1.0 / x
        self.assertAlmostEqual(y.value, 0.5)
        self.assertAlmostEqual(y.tangent, -0.25)
        z = 5.0 - x
        self.assertEqual((z.value, z.tangent), (3.0, -1.0))

    def test_power_with_constant_exponent(self):
        tag = new_tag()
        y = Dual(2.0, 1.0, tag) ** 3
        self.assertEqual((y.value, y.tangent), (8.0, 12.0))
        with self.assertRaises(TypeError):
            Dual(2.0, 1.0, tag) ** Dual(1.0, 0.0, tag)

    def test_elementary_functions(self):
        value, tangent = jvp(lambda x: sin(x[0]) * exp(x[0]) + log(x[0]) + sqrt(x[0]) + cos(x[0]), [1.3], [1.0])
        x = 1.3
        expected = (
            math.cos(x) * math.exp(x) + math.sin(x) * math.exp(x) + 1.0 / x + 0.5 / math.sqrt(x) - math.sin(x)
        )
        self.assertAlmostEqual(tangent, expected, places=12)
        self.assertAlmostEqual(value, math.sin(x) * math.exp(x) + math.log(x) + math.sqrt(x) + math.cos(x))

    def test_nested_duals_give_second_derivative(self):
        def f(x):
            return x[0] ** 3

        def df(x):
            return jvp(f, x, [1.0])[1]

        _, second = jvp(df, [2.0], [1.0])
        self.assertAlmostEqual(second, 12.0)

    def test_lift_consumes_one_derivative_per_nesting_level(self):
        tower = [np.sin, np.cos, lambda t: -np.sin(t)]
        _, first = jvp(lambda x: lift(x[0], tower), [0.4], [1.0])
        self.assertAlmostEqual(first, math.cos(0.4))
        second = jvp(lambda y: jvp(lambda x: lift(x[0], tower), y, [1.0])[1], [0.4], [1.0])[1]
        self.assertAlmostEqual(second, -math.sin(0.4))
        with self.assertRaises(ValueError):
            jvp(lambda y: jvp(lambda x: lift(x[0], tower[:1]), y, [1.0])[1], [0.4], [1.0])

    def test_batched_payloads(self):
        xs = np.array([0.0, 1.0, 2.0])
        value, tangent = jvp(lambda x: x[0] * x[0], [xs], [np.ones(3)])
        np.testing.assert_allclose(value, xs**2)
        np.testing.assert_allclose(tangent, 2.0 * xs)

    def test_linearize_returns_one_column_per_coordinate(self):
        value, columns = linearize(lambda x: [x[0] * x[1], x[0] + x[1]], [2.0, 3.0])
        self.assertEqual(value, [6.0, 5.0])
        self.assertEqual(columns, [[3.0, 1.0], [2.0, 1.0]])

    def test_primal_strips_nested_duals(self):
        inner = Dual(1.5, 1.0, new_tag())
        outer = Dual(inner, 0.0, new_tag())
        self.assertEqual(primal(outer), 1.5)


class ChartTestCase(unittest.TestCase):
    def test_periodic_coordinates_are_reduced(self):
        p = ChartPoint(CYLINDER, [0.5, 2.0 * math.pi + 0.25])
        self.assertAlmostEqual(p['theta'], 0.25)
        q = ChartPoint(CYLINDER, [0.5, -0.25])
        self.assertAlmostEqual(q['theta'], 2.0 * math.pi - 0.25)

    def test_points_compare_across_the_seam(self):
        p = ChartPoint(CYLINDER, [0.5, 1e-14])
        q = ChartPoint(CYLINDER, [0.5, 2.0 * math.pi - 1e-14])
        self.assertEqual(p, q)
        self.assertLess(p.distance(q), 1e-12)

    def test_non_finite_coordinates_are_rejected(self):
        with self.assertRaises(EvaluationError):
            ChartPoint(PLANE, [0.0, float('nan')])

    def test_wrong_dimension_is_rejected(self):
        with self.assertRaises(ValueError):
            ChartPoint(PLANE, [0.0, 1.0, 2.0])

    def test_coordinates_are_read_only(self):
        p = ChartPoint(PLANE, [1.0, 2.0])
        with self.assertRaises(ValueError):
            p.coords[0] = 3.0

    def test_tangent_vectors_combine_only_at_the_same_base(self):
        p, q = ChartPoint(PLANE, [0.0, 0.0]), ChartPoint(PLANE, [1.0, 0.0])
        u, v = TangentVector(p, [1.0, 0.0]), TangentVector(q, [0.0, 1.0])
        with self.assertRaises(ValueError):
            u + v
        w = u + TangentVector.coordinate(p, 1) * 2.0
        np.testing.assert_array_equal(w.components, [1.0, 2.0])

    def test_product_chart(self):
        product = PLANE.product(CYLINDER)
        self.assertEqual(product.dim, 4)
        self.assertEqual(product.periodic_mask, (False, False, False, True))
        self.assertEqual(product.index('theta'), 3)


class FieldsTestCase(unittest.TestCase):
    def setUp(self):
        self.p = ChartPoint(PLANE, [0.3, -0.7])

    def test_gradient(self):
        f = ScalarField(PLANE, lambda x: x[0] * x[0] + 3.0 * x[0] * x[1])
        np.testing.assert_allclose(f.gradient(self.p), [2 * 0.3 + 3 * -0.7, 3 * 0.3])
        np.testing.assert_allclose(exterior_derivative(f, self.p).components, f.gradient(self.p))

    def test_non_finite_gradient_names_the_coordinate(self):
        f = ScalarField(PLANE, lambda x: sqrt(x[0] * x[0]))
        with self.assertRaises(EvaluationError):
            f.gradient(ChartPoint(PLANE, [0.0, 1.0]))

    def test_derivative_along(self):
        psi = ScalarField(PLANE, lambda x: x[0] * x[0] + x[1] * x[1], 'psi')
        self.assertAlmostEqual(psi.derivative_along(radial_field())(self.p), psi(self.p))

    def test_exterior_derivative_of_liouville_form(self):
        W = liouville_form().exterior_derivative_matrix(self.p)
        np.testing.assert_allclose(W, [[0.0, 2.0], [-2.0, 0.0]])
        u, v = TangentVector.coordinate(self.p, 0), TangentVector.coordinate(self.p, 1)
        self.assertAlmostEqual(d_oneform(liouville_form(), self.p, u, v), 2.0)
        self.assertAlmostEqual(liouville_form().exterior_derivative()(self.p, u, v), 2.0)

    def test_two_form_contraction_recovers_liouville_form(self):
        form = liouville_form()
        contracted = form.exterior_derivative().contract(radial_field())
        np.testing.assert_allclose(contracted.at(self.p).components, form.at(self.p).components)

    def test_lie_derivative_along_liouville_field(self):
        form = liouville_form()
        for j in range(2):
            u = TangentVector.coordinate(self.p, j)
            self.assertAlmostEqual(lie_derivative_oneform(form, radial_field(), self.p, u), form(self.p, u))

    def test_non_finite_form_derivative(self):
        form = OneForm(PLANE, lambda x, v: sqrt(x[0] * x[0]) * v[1], 'kink')
        p = ChartPoint(PLANE, [0.0, 1.0])
        u, v = TangentVector.coordinate(p, 0), TangentVector.coordinate(p, 1)
        with np.errstate(invalid='ignore', divide='ignore'):
            with self.assertRaises(EvaluationError) as context:
                d_oneform(form, p, u, v)
            self.assertIn('coordinate x', str(context.exception))
            self.assertEqual(context.exception.witness, [0.0, 1.0])
            with self.assertRaises(EvaluationError):
                lie_derivative_oneform(form, radial_field(), p, v)

    def test_batch_helpers(self):
        coords = np.array([[0.3, -0.7], [1.0, 2.0]])
        form = liouville_form()
        np.testing.assert_allclose(form.coefficients_batch(coords), [[0.7, 0.3], [-2.0, 1.0]])
        np.testing.assert_allclose(form.exterior_derivative_batch(coords)[1], [[0.0, 2.0], [-2.0, 0.0]])
        np.testing.assert_allclose(radial_field().evaluate_batch(coords), 0.5 * coords)


class SmoothMapTestCase(unittest.TestCase):
    def setUp(self):
        self.rotate = SmoothMap(
            PLANE, PLANE, lambda x: [cos(0.3) * x[0] - sin(0.3) * x[1], sin(0.3) * x[0] + cos(0.3) * x[1]], name='R'
        )
        self.p = ChartPoint(PLANE, [1.0, 0.5])

    def test_needs_exactly_one_implementation(self):
        with self.assertRaises(ValueError):
            SmoothMap(PLANE, PLANE)

    def test_jacobian_matches_finite_differences(self):
        np.testing.assert_allclose(
            self.rotate.jacobian(self.p), finite_difference_jacobian(self.rotate, self.p), atol=1e-8
        )

    def test_composition_with_transport(self):
        scale = SmoothMap(
            PLANE,
            PLANE,
            transport=lambda p: (ChartPoint(PLANE, 2.0 * p.coords), 2.0 * np.eye(2)),
            name='scale',
        )
        composed = scale.compose(self.rotate)
        image, jacobian = composed.apply_with_jacobian(self.p)
        np.testing.assert_allclose(jacobian, 2.0 * self.rotate.jacobian(self.p))
        np.testing.assert_allclose(image.coords, 2.0 * self.rotate(self.p).coords)
        self.assertEqual(SmoothMap.identity(PLANE)(self.p), self.p)

    def test_pullback_is_functorial(self):
        shear = SmoothMap(PLANE, PLANE, lambda x: [x[0] + sin(x[1]), x[1] + 0.1 * x[0] * x[0]], name='S')
        form = liouville_form()
        middle, inner_jacobian = self.rotate.apply_with_jacobian(self.p)
        for j in range(2):
            u = TangentVector.coordinate(self.p, j)
            composed = pullback_oneform(shear.compose(self.rotate), form, self.p, u)
            stepwise = pullback_oneform(shear, form, middle, TangentVector(middle, inner_jacobian @ u.components))
            self.assertAlmostEqual(composed, stepwise, places=12)

    def test_rotation_preserves_liouville_form(self):
        form = liouville_form()
        for j in range(2):
            u = TangentVector.coordinate(self.p, j)
            self.assertAlmostEqual(pullback_oneform(self.rotate, form, self.p, u), form(self.p, u))


class LevelSetTestCase(unittest.TestCase):
    def setUp(self):
        self.sphere = ScalarField(
            ChartSpec(3, (False,) * 3), lambda x: x[0] * x[0] + x[1] * x[1] + x[2] * x[2] - 1.0, 'sphere'
        )
        self.p = ChartPoint(self.sphere.chart, [0.6, 0.0, 0.8])

    def test_frame_is_orthonormal_tangent_and_oriented(self):
        frame = level_set_frame(self.sphere, self.p)
        gradient = self.sphere.gradient(self.p)
        np.testing.assert_allclose(frame.T @ frame, np.eye(2), atol=1e-12)
        np.testing.assert_allclose(gradient @ frame, 0.0, atol=1e-12)
        self.assertGreater(np.linalg.det(np.column_stack([gradient, frame])), 0.0)

    def test_random_seeds_keep_the_orientation(self):
        frame = level_set_frame(self.sphere, self.p, rng=np.random.default_rng(3))
        gradient = self.sphere.gradient(self.p)
        self.assertGreater(np.linalg.det(np.column_stack([gradient, frame])), 0.0)
        basis = tangent_basis_of_level_set(self.sphere, self.p, rng=np.random.default_rng(4))
        self.assertEqual(len(basis), 2)

    def test_off_surface_point(self):
        with self.assertRaises(OffSurfaceError) as context:
            level_set_frame(self.sphere, ChartPoint(self.sphere.chart, [1.0, 1.0, 0.0]))
        self.assertAlmostEqual(context.exception.residual, 1.0)

    def test_critical_point(self):
        cone = ScalarField(self.sphere.chart, lambda x: x[0] * x[0] + x[1] * x[1] - x[2] * x[2])
        with self.assertRaises(CriticalPointError):
            level_set_frame(cone, ChartPoint(cone.chart, [0.0, 0.0, 0.0]))

    def test_finite_difference_gradient(self):
        np.testing.assert_allclose(
            finite_difference_gradient(self.sphere, self.p), self.sphere.gradient(self.p), atol=1e-8
        )


if __name__ == '__main__':
    unittest.main()
