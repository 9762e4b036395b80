"""
The odd, non-decreasing cut-off function used to flatten ``psi - c`` away from its zero set.

On ``|x| < a`` it is the identity, on ``|x| > 2a`` it equals the plateau
``+-1``, and on ``[a, 2a]`` it is the quintic Hermite blend matching value, first
and second derivative at both ends. Derivatives up to third order are available
so that fields containing ``df(Z)`` can themselves be differentiated.
"""

from dataclasses import dataclass, field
from typing import Any, Callable, List

import numpy as np

from contactkit.adcalc.dual import lift
from contactkit.errors import ConfigurationError


def _smoothstep(u, order: int):
    # 10u^3 - 15u^4 + 6u^5 and derivatives
    if order == 0:
        return u**3 * (10.0 - 15.0 * u + 6.0 * u**2)
    if order == 1:
        return 30.0 * u**2 - 60.0 * u**3 + 30.0 * u**4
    if order == 2:
        return 60.0 * u - 180.0 * u**2 + 120.0 * u**3
    return 60.0 - 360.0 * u + 360.0 * u**2


def _slope_bump(u, order: int):
    # u - 6u^3 + 8u^4 - 3u^5: value 0 at both ends, unit slope at 0, flat at 1
    if order == 0:
        return u - 6.0 * u**3 + 8.0 * u**4 - 3.0 * u**5
    if order == 1:
        return 1.0 - 18.0 * u**2 + 32.0 * u**3 - 15.0 * u**4
    if order == 2:
        return -36.0 * u + 96.0 * u**2 - 60.0 * u**3
    return -36.0 + 192.0 * u - 180.0 * u**2


@dataclass(frozen=True)
class CutoffSpec:
    a: float
    plateau: float = 1.0
    blend: str = 'quintic-hermite'
    derivatives: List[Callable[[Any], Any]] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.a > 0.0:
            raise ConfigurationError(f'Cut-off scale must be positive, got a={self.a}.')
        if self.plateau != 1.0:
            raise ConfigurationError('Only the +-1 plateau is supported.')
        if self.blend != 'quintic-hermite':
            raise ConfigurationError(f'Unknown cut-off blend {self.blend!r}.')
        if self.a >= 0.5:
            raise ConfigurationError(
                f'Cut-off scale a={self.a} cannot reach the plateau +-1 monotonically (need a < 1/2).'
            )
        object.__setattr__(
            self, 'derivatives', [self._make_derivative(order) for order in range(4)]
        )

    def _profile(self, t, order: int):
        """k-th derivative of the even/odd extension on |x| = t."""
        a = self.a
        u = (t - a) / a
        blend = (
            (1.0 - a) * _smoothstep(u, order) + a * _slope_bump(u, order)
        ) / a**order
        if order == 0:
            inner, outer = t, 1.0
            blend = blend + a
        elif order == 1:
            inner, outer = 1.0, 0.0
        else:
            inner, outer = 0.0, 0.0
        return np.where(t < a, inner, np.where(t <= 2.0 * a, blend, outer))

    def _make_derivative(self, order: int) -> Callable[[Any], Any]:
        def derivative(x):
            x_arr = np.asarray(x, dtype=float)
            sign = np.where(x_arr < 0.0, -1.0, 1.0)
            value = self._profile(np.abs(x_arr), order)
            # odd function: even-order derivatives flip sign, odd-order ones do not
            if order % 2 == 0:
                value = sign * value
            return float(value) if np.ndim(value) == 0 else value

        return derivative

    def __call__(self, x):
        """chi(x) for plain values, arrays or dual numbers."""
        return lift(x, self.derivatives)
