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
from contactkit.adcalc.chart import ChartPoint, ChartSpec, Covector, TangentVector
from contactkit.adcalc.dual import Dual, jvp, linearize, primal
from contactkit.adcalc.fields import OneForm, ScalarField, SmoothMap, TwoForm, VectorField

__all__ = [
    'ChartPoint',
    'ChartSpec',
    'Covector',
    'Dual',
    'OneForm',
    'ScalarField',
    'SmoothMap',
    'TangentVector',
    'TwoForm',
    'VectorField',
    'd_oneform',
    'exterior_derivative',
    'finite_difference_gradient',
    'finite_difference_jacobian',
    'jvp',
    'level_set_frame',
    'lie_derivative_oneform',
    'linearize',
    'primal',
    'pullback_oneform',
    'tangent_basis_of_level_set',
]
