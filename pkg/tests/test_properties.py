import math
import unittest

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from contactkit.adcalc.calculus import finite_difference_gradient
from contactkit.adcalc.chart import ChartPoint, ChartSpec
from contactkit.adcalc.dual import exp, jvp, sin
from contactkit.adcalc.fields import OneForm, ScalarField
from contactkit.flows.fields import gray_field
from contactkit.flows.maps import psi_c
from contactkit.invariant.matrices import synthetic_loop
from contactkit.invariant.winding import winding_number
from contactkit.weinstein.cutoff import CutoffSpec
from contactkit.weinstein.double import cutoff_equation, double
from contactkit.weinstein.models import make_model

CHART = ChartSpec(3, (False, False, True), ('x', 'y', 'theta'))

coordinate = st.floats(min_value=-2.0, max_value=2.0, allow_nan=False)
coefficient = st.floats(min_value=-3.0, max_value=3.0, allow_nan=False)
angle = st.floats(min_value=0.0, max_value=6.28, allow_nan=False)


def sample_field(a: float, b: float, c: float) -> ScalarField:
    def evaluator(x):
        return a * sin(x[0]) * exp(0.5 * x[1]) + b * x[0] * x[1] * x[1] + c * sin(x[2]) * x[0]

    return ScalarField(CHART, evaluator, 'g')


def sample_form(a: float, b: float, c: float) -> OneForm:
    def evaluator(x, v):
        return a * x[1] * v[0] + b * sin(x[0]) * x[2] * v[1] + c * x[0] * x[1] * v[2]

    return OneForm(CHART, evaluator, 'beta')


class DerivativePropertiesTestCase(unittest.TestCase):
    @settings(max_examples=50, deadline=None)
    @given(coordinate, coordinate, coordinate, coefficient, coefficient, coefficient)
    def test_gradient_agrees_with_finite_differences(self, x, y, theta, a, b, c):
        field_ = sample_field(a, b, c)
        p = ChartPoint(CHART, [x, y, theta])
        exact = field_.gradient(p)
        approx = finite_difference_gradient(field_, p)
        np.testing.assert_allclose(exact, approx, atol=1e-6 * max(1.0, np.max(np.abs(exact))))

    @settings(max_examples=50, deadline=None)
    @given(coordinate, coordinate, coordinate, coefficient, coefficient, coefficient)
    def test_exterior_derivative_of_an_exact_form_vanishes(self, x, y, theta, a, b, c):
        g = sample_field(a, b, c).evaluator
        exact_form = OneForm(CHART, lambda z, v: jvp(g, z, v)[1], 'dg', closed=True, exact=True)
        W = exact_form.exterior_derivative_matrix(ChartPoint(CHART, [x, y, theta]))
        np.testing.assert_allclose(W, 0.0, atol=1e-9)

    @settings(max_examples=50, deadline=None)
    @given(coordinate, coordinate, coordinate, coefficient, coefficient, coefficient)
    def test_exterior_derivative_is_antisymmetric(self, x, y, theta, a, b, c):
        form = sample_form(a, b, c)
        p = ChartPoint(CHART, [x, y, theta])
        W = form.exterior_derivative_matrix(p)
        np.testing.assert_array_equal(W, -W.T)
        np.testing.assert_allclose(form.exterior_derivative().matrix(p), W, atol=1e-12)


class ChartPropertiesTestCase(unittest.TestCase):
    @settings(max_examples=100, deadline=None)
    @given(coordinate, st.floats(min_value=0.0, max_value=6.28, allow_nan=False), st.integers(-5, 5))
    def test_periodic_shifts_name_the_same_point(self, x, theta, turns):
        p = ChartPoint(CHART, [x, 0.0, theta])
        q = ChartPoint(CHART, [x, 0.0, theta + 2.0 * math.pi * turns])
        self.assertLess(p.distance(q), 1e-12)
        self.assertGreaterEqual(q['theta'], 0.0)
        self.assertLess(q['theta'], 2.0 * math.pi)


class CutoffPropertiesTestCase(unittest.TestCase):
    @settings(max_examples=100, deadline=None)
    @given(st.floats(min_value=0.01, max_value=0.45), st.floats(min_value=-3.0, max_value=3.0, allow_nan=False))
    def test_odd_bounded_and_non_decreasing(self, a, x):
        chi = CutoffSpec(a=a)
        self.assertAlmostEqual(chi(-x), -chi(x), places=12)
        self.assertLessEqual(abs(chi(x)), 1.0 + 1e-12)
        self.assertGreaterEqual(chi.derivatives[1](x), -1e-12)


class GrayFlowPropertiesTestCase(unittest.TestCase):
    def setUp(self):
        model = make_model('flat', 1)
        self.ds = double(model, cutoff_equation(model))

    @settings(max_examples=100, deadline=None)
    @given(st.floats(min_value=0.05, max_value=0.7), angle, angle)
    def test_gray_field_on_the_lower_sheet_is_radial(self, r, phi, theta):
        coords = np.array([[r * math.cos(phi), r * math.sin(phi), -1.0, theta]])
        Y = gray_field(self.ds).evaluate_batch(coords, np.zeros(1))[0]
        np.testing.assert_allclose(Y[:2], -(r**2) / 4.0 * coords[0, :2], atol=1e-14)
        np.testing.assert_allclose(Y[2:], 0.0, atol=1e-14)

    @settings(max_examples=10, deadline=None)
    @given(st.floats(min_value=0.3, max_value=0.7), angle, angle, st.integers(0, 2))
    def test_iterates_keep_the_angle_structure(self, r, phi, theta, k):
        p = ChartPoint(self.ds.chart, [r * math.cos(phi), r * math.sin(phi), -1.0, theta])
        endpoint = psi_c(self.ds, p, k).endpoint.coords
        turned = math.atan2(endpoint[1], endpoint[0]) - phi - k * theta
        self.assertAlmostEqual(math.remainder(turned, 2.0 * math.pi), 0.0, places=7)
        self.assertAlmostEqual(1.0 / (endpoint[0] ** 2 + endpoint[1] ** 2), 1.0 / r**2 + k / 2.0, places=6)
        self.assertAlmostEqual(endpoint[2], -1.0, places=10)


class WindingPropertiesTestCase(unittest.TestCase):
    @settings(max_examples=30, deadline=None)
    @given(st.lists(st.integers(-4, 4), min_size=1, max_size=4))
    def test_synthetic_winding_is_the_exponent_sum(self, exponents):
        samples = 8 * sum(abs(e) for e in exponents) + 8
        self.assertEqual(winding_number(synthetic_loop(exponents, samples)).winding, sum(exponents))


if __name__ == '__main__':
    unittest.main()
