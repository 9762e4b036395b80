"""
Forward-mode automatic differentiation with tagged dual numbers.

A :class:`Dual` carries a value, a directional derivative (its tangent) and a
perturbation tag. Tags come from a global counter, so a dual created while
another one is being differentiated always has the larger tag. Arithmetic
between duals with different tags treats the older one as a constant of the
newer one; this is what allows derivatives to be nested (the derivative of a
field that itself contains ``df(Z)``) without mixing up perturbations.

Values and tangents may be Python floats or NumPy arrays of equal shape, so the
same evaluator works for one point and for a batch of points.
"""

import itertools
from typing import Any, Callable, List, Sequence, Tuple

import numpy as np

_TAGS = itertools.count(1)


def new_tag() -> int:
    return next(_TAGS)


class Dual:
    __slots__ = ('value', 'tangent', 'tag')

    # Lets NumPy arrays and scalars hand binary operations back to Dual.
    __array_ufunc__ = None

    def __init__(self, value: Any, tangent: Any, tag: int):
        self.value = value
        self.tangent = tangent
        self.tag = tag

    def _split(self, other):
        """
        Returns ``(value, tangent)`` of ``other`` as seen by this tag, or ``None``
        when ``other`` belongs to a newer perturbation and must handle the operation.
        """
        if isinstance(other, Dual):
            if other.tag == self.tag:
                return other.value, other.tangent
            if other.tag > self.tag:
                return None
        return other, 0.0

    def __add__(self, other):
        parts = self._split(other)
        if parts is None:
            return NotImplemented
        value, tangent = parts
        return Dual(self.value + value, self.tangent + tangent, self.tag)

    def __radd__(self, other):
        parts = self._split(other)
        if parts is None:
            return NotImplemented
        value, tangent = parts
        return Dual(value + self.value, tangent + self.tangent, self.tag)

    def __sub__(self, other):
        parts = self._split(other)
        if parts is None:
            return NotImplemented
        value, tangent = parts
        return Dual(self.value - value, self.tangent - tangent, self.tag)

    def __rsub__(self, other):
        parts = self._split(other)
        if parts is None:
            return NotImplemented
        value, tangent = parts
        return Dual(value - self.value, tangent - self.tangent, self.tag)

    def __mul__(self, other):
        parts = self._split(other)
        if parts is None:
            return NotImplemented
        value, tangent = parts
        return Dual(
            self.value * value, self.value * tangent + self.tangent * value, self.tag
        )

    def __rmul__(self, other):
        parts = self._split(other)
        if parts is None:
            return NotImplemented
        value, tangent = parts
        return Dual(
            value * self.value, tangent * self.value + value * self.tangent, self.tag
        )

    def __truediv__(self, other):
        parts = self._split(other)
        if parts is None:
            return NotImplemented
        value, tangent = parts
        quotient = self.value / value
        return Dual(quotient, (self.tangent - quotient * tangent) / value, self.tag)

    def __rtruediv__(self, other):
        parts = self._split(other)
        if parts is None:
            return NotImplemented
        value, tangent = parts
        quotient = value / self.value
        return Dual(quotient, (tangent - quotient * self.tangent) / self.value, self.tag)

    def __pow__(self, exponent):
        if isinstance(exponent, Dual):
            raise TypeError('Dual exponents are not supported, use exp(log(x) * y).')
        if exponent == 0:
            return Dual(self.value**0, 0.0, self.tag)
        return Dual(
            self.value**exponent,
            exponent * self.value ** (exponent - 1) * self.tangent,
            self.tag,
        )

    def __neg__(self):
        return Dual(-self.value, -self.tangent, self.tag)

    def __pos__(self):
        return self

    def __abs__(self):
        sign = np.sign(primal(self.value))
        return self * sign

    def __repr__(self):
        return f'Dual(value={self.value!r}, tangent={self.tangent!r}, tag={self.tag})'


def primal(x: Any) -> Any:
    """Strips every perturbation and returns the plain float or array underneath."""
    while isinstance(x, Dual):
        x = x.value
    return x


def value_of(x: Any, tag: int) -> Any:
    if isinstance(x, Dual) and x.tag == tag:
        return x.value
    return x


def tangent_of(x: Any, tag: int) -> Any:
    if isinstance(x, Dual) and x.tag == tag:
        return x.tangent
    return 0.0


def sin(x):
    if isinstance(x, Dual):
        return Dual(sin(x.value), cos(x.value) * x.tangent, x.tag)
    return np.sin(x)


def cos(x):
    if isinstance(x, Dual):
        return Dual(cos(x.value), -sin(x.value) * x.tangent, x.tag)
    return np.cos(x)


def exp(x):
    if isinstance(x, Dual):
        value = exp(x.value)
        return Dual(value, value * x.tangent, x.tag)
    return np.exp(x)


def log(x):
    if isinstance(x, Dual):
        return Dual(log(x.value), x.tangent / x.value, x.tag)
    return np.log(x)


def sqrt(x):
    if isinstance(x, Dual):
        value = sqrt(x.value)
        return Dual(value, x.tangent / (2.0 * value), x.tag)
    return np.sqrt(x)


def lift(x, derivatives: Sequence[Callable[[Any], Any]]):
    """
    Applies a scalar function given by its derivative tower to a (possibly nested) jet.

    Args:
        x: Plain value or dual number.
        derivatives: ``[f, f', f'', ...]``, each acting on plain floats or arrays.
            Every level of dual nesting consumes one derivative.
    """
    if isinstance(x, Dual):
        if len(derivatives) < 2:
            raise ValueError('Derivative tower exhausted by nested dual numbers.')
        return Dual(
            lift(x.value, derivatives), lift(x.value, derivatives[1:]) * x.tangent, x.tag
        )
    return derivatives[0](x)


def jvp(fn: Callable[[List[Any]], Any], x: Sequence[Any], direction: Sequence[Any]) -> Tuple[Any, Any]:
    """
    Evaluates ``fn`` at ``x`` together with its derivative along ``direction``.

    ``fn`` may return a single jet or a sequence of jets; the value and the
    derivative come back in the same shape.
    """
    tag = new_tag()
    out = fn([Dual(xi, vi, tag) for xi, vi in zip(x, direction)])
    if isinstance(out, (list, tuple)):
        return [value_of(o, tag) for o in out], [tangent_of(o, tag) for o in out]
    return value_of(out, tag), tangent_of(out, tag)


def linearize(fn: Callable[[List[Any]], Any], x: Sequence[Any]) -> Tuple[Any, List[Any]]:
    """
    Value of ``fn`` at ``x`` and its partial derivatives, one forward pass per coordinate.

    :return: ``(value, columns)`` with ``columns[j]`` the derivative along coordinate ``j``
        (a jet, or a list of jets when ``fn`` returns a sequence).
    """
    dim = len(x)
    value = None
    columns = []
    for j in range(dim):
        direction = [1.0 if i == j else 0.0 for i in range(dim)]
        out_value, out_tangent = jvp(fn, x, direction)
        if value is None:
            value = out_value
        columns.append(out_tangent)
    if value is None:
        value = fn(list(x))
    return value, columns
