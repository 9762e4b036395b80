"""
Fields and forms on a chart, represented by evaluators.

Every evaluator receives the coordinates as a list of jets (floats, NumPy
arrays for batches, or :class:`~contactkit.adcalc.dual.Dual` numbers) and must
only use arithmetic and the functions of :mod:`contactkit.adcalc.dual`, so
derivatives come out exact.
"""

from dataclasses import dataclass
from typing import Any, Callable, List, Optional, Sequence, Tuple

import numpy as np

from contactkit.adcalc.chart import ChartPoint, ChartSpec, Covector, TangentVector
from contactkit.adcalc.dual import jvp, linearize, primal
from contactkit.errors import EvaluationError

Coords = Sequence[Any]


def columns_of(coords: np.ndarray) -> List[Any]:
    """Splits a point ``(dim,)`` or a batch ``(B, dim)`` into one jet per coordinate."""
    coords = np.asarray(coords, dtype=float)
    if coords.ndim == 1:
        return [float(x) for x in coords]
    return [coords[:, i] for i in range(coords.shape[1])]


def unit_vector(dim: int, index: int) -> List[float]:
    return [1.0 if i == index else 0.0 for i in range(dim)]


def to_array(jets: Sequence[Any], batch: Optional[int] = None) -> np.ndarray:
    """Stacks plain jets into ``(len,)`` or ``(B, len)``; constant entries are broadcast."""
    values = [primal(j) for j in jets]
    if batch is None:
        return np.array([float(v) for v in values])
    return np.stack([np.broadcast_to(np.asarray(v, dtype=float), (batch,)) for v in values], axis=1)


def check_finite(values: np.ndarray, chart: ChartSpec, where: np.ndarray, what: str):
    """Raises :class:`EvaluationError` naming the first coordinate whose jet overflowed."""
    bad = ~np.isfinite(values)
    if np.any(bad):
        index = int(np.argwhere(bad)[0][-1])
        name = chart.coordinate_names[index] if index < chart.dim else str(index)
        raise EvaluationError(f'Non-finite {what} along coordinate {name}.', np.ravel(where)[: chart.dim])


@dataclass(frozen=True)
class VectorField:
    chart: ChartSpec
    evaluator: Callable[[Coords], List[Any]]
    name: str = ''

    def __call__(self, p: ChartPoint) -> TangentVector:
        return TangentVector(p, to_array(self.evaluator(columns_of(p.coords))))

    def evaluate_batch(self, coords: np.ndarray) -> np.ndarray:
        coords = np.asarray(coords, dtype=float)
        return to_array(self.evaluator(columns_of(coords)), coords.shape[0])

    def jacobian(self, p: ChartPoint) -> np.ndarray:
        """``J[i, j] = d X_i / d x_j`` at ``p``."""
        _, columns = linearize(self.evaluator, columns_of(p.coords))
        return np.stack([to_array(col) for col in columns], axis=1)

    @classmethod
    def zero(cls, chart: ChartSpec) -> 'VectorField':
        return cls(chart, lambda x: [0.0] * chart.dim, 'zero')


@dataclass(frozen=True)
class ScalarField:
    chart: ChartSpec
    evaluator: Callable[[Coords], Any]
    name: str = ''

    def __call__(self, p: ChartPoint) -> float:
        return float(primal(self.evaluator(columns_of(p.coords))))

    def evaluate_batch(self, coords: np.ndarray) -> np.ndarray:
        coords = np.asarray(coords, dtype=float)
        value = primal(self.evaluator(columns_of(coords)))
        return np.broadcast_to(np.asarray(value, dtype=float), (coords.shape[0],)).copy()

    def gradient(self, p: ChartPoint) -> np.ndarray:
        _, columns = linearize(self.evaluator, columns_of(p.coords))
        gradient = to_array(columns)
        check_finite(gradient, self.chart, p.coords, 'gradient')
        return gradient

    def gradient_batch(self, coords: np.ndarray) -> np.ndarray:
        coords = np.asarray(coords, dtype=float)
        _, columns = linearize(self.evaluator, columns_of(coords))
        return to_array(columns, coords.shape[0])

    def derivative_along(self, field: VectorField) -> 'ScalarField':
        """The scalar field ``df(V)``."""
        evaluator = self.evaluator

        def along(x):
            return jvp(evaluator, x, field.evaluator(x))[1]

        return ScalarField(self.chart, along, f'd{self.name}({field.name})')

    def __sub__(self, other: 'ScalarField') -> 'ScalarField':
        first, second = self.evaluator, other.evaluator
        return ScalarField(self.chart, lambda x: first(x) - second(x), f'{self.name}-{other.name}')

    @classmethod
    def constant(cls, chart: ChartSpec, value: float) -> 'ScalarField':
        return cls(chart, lambda x: value, str(value))


@dataclass(frozen=True)
class OneForm:
    chart: ChartSpec
    evaluator: Callable[[Coords, Sequence[Any]], Any]
    name: str = ''
    closed: bool = False
    exact: bool = False

    def __call__(self, p: ChartPoint, u: TangentVector) -> float:
        return float(primal(self.evaluator(columns_of(p.coords), list(u.components))))

    def coefficients(self, x: Coords) -> List[Any]:
        return [self.evaluator(x, unit_vector(self.chart.dim, j)) for j in range(self.chart.dim)]

    def at(self, p: ChartPoint) -> Covector:
        return Covector(p, to_array(self.coefficients(columns_of(p.coords))))

    def evaluate_batch(self, coords: np.ndarray, vectors: np.ndarray) -> np.ndarray:
        coords = np.asarray(coords, dtype=float)
        value = primal(self.evaluator(columns_of(coords), columns_of(vectors)))
        return np.broadcast_to(np.asarray(value, dtype=float), (coords.shape[0],)).copy()

    def coefficients_batch(self, coords: np.ndarray) -> np.ndarray:
        coords = np.asarray(coords, dtype=float)
        return to_array(self.coefficients(columns_of(coords)), coords.shape[0])

    def exterior_derivative_batch(self, coords: np.ndarray) -> np.ndarray:
        """``(B, dim, dim)`` matrices of ``d(omega)`` over a batch of points."""
        coords = np.asarray(coords, dtype=float)
        _, columns = linearize(self.coefficients, columns_of(coords))
        partials = np.stack([to_array(col, coords.shape[0]) for col in columns], axis=1)
        return partials - np.swapaxes(partials, 1, 2)

    def exterior_derivative_matrix(self, p: ChartPoint) -> np.ndarray:
        """Matrix ``W[i, j] = d(omega)(e_i, e_j)``, antisymmetric by construction."""
        _, columns = linearize(self.coefficients, columns_of(p.coords))
        partials = np.stack([to_array(col) for col in columns], axis=0)
        # partials[i, j] = d a_j / d x_i
        return partials - partials.T

    def exterior_derivative(self) -> 'TwoForm':
        evaluator = self.evaluator

        def d_form(x, u, v):
            return jvp(lambda y: evaluator(y, v), x, u)[1] - jvp(lambda y: evaluator(y, u), x, v)[1]

        return TwoForm(self.chart, d_form, f'd{self.name}')


@dataclass(frozen=True)
class TwoForm:
    chart: ChartSpec
    evaluator: Callable[[Coords, Sequence[Any], Sequence[Any]], Any]
    name: str = ''

    def __call__(self, p: ChartPoint, u: TangentVector, v: TangentVector) -> float:
        return float(
            primal(self.evaluator(columns_of(p.coords), list(u.components), list(v.components)))
        )

    def matrix(self, p: ChartPoint) -> np.ndarray:
        dim = self.chart.dim
        x = columns_of(p.coords)
        result = np.zeros((dim, dim))
        for i in range(dim):
            for j in range(i + 1, dim):
                value = float(primal(self.evaluator(x, unit_vector(dim, i), unit_vector(dim, j))))
                result[i, j] = value
                result[j, i] = -value
        return result

    def contract(self, field: VectorField) -> OneForm:
        """The one-form ``iota_X omega``."""
        evaluator = self.evaluator
        return OneForm(
            self.chart, lambda x, v: evaluator(x, field.evaluator(x), v), f'i_{field.name}{self.name}'
        )


@dataclass(frozen=True)
class SmoothMap:
    """
    A map between charts.

    Maps given by an ``evaluator`` get exact Jacobians by forward-mode AD. Maps
    that come out of a numerical flow are given by ``transport`` instead, a
    callable returning the image point together with its Jacobian.
    """

    source: ChartSpec
    target: ChartSpec
    evaluator: Optional[Callable[[Coords], List[Any]]] = None
    transport: Optional[Callable[[ChartPoint], Tuple[ChartPoint, np.ndarray]]] = None
    name: str = ''

    def __post_init__(self):
        if (self.evaluator is None) == (self.transport is None):
            raise ValueError('A smooth map needs exactly one of evaluator or transport.')

    def __call__(self, p: ChartPoint) -> ChartPoint:
        if self.evaluator is not None:
            return ChartPoint(self.target, to_array(self.evaluator(columns_of(p.coords))))
        return self.transport(p)[0]

    def jacobian(self, p: ChartPoint) -> np.ndarray:
        return self.apply_with_jacobian(p)[1]

    def apply_with_jacobian(self, p: ChartPoint) -> Tuple[ChartPoint, np.ndarray]:
        if self.evaluator is None:
            return self.transport(p)
        value, columns = linearize(self.evaluator, columns_of(p.coords))
        jacobian = np.stack([to_array(col) for col in columns], axis=1)
        check_finite(jacobian, self.source, p.coords, 'jacobian')
        return ChartPoint(self.target, to_array(value)), jacobian

    def compose(self, inner: 'SmoothMap') -> 'SmoothMap':
        """``self o inner``."""
        if inner.target != self.source:
            raise ValueError('Cannot compose maps whose charts do not match.')
        name = f'{self.name}*{inner.name}'
        if self.evaluator is not None and inner.evaluator is not None:
            outer_eval, inner_eval = self.evaluator, inner.evaluator
            return SmoothMap(inner.source, self.target, lambda x: outer_eval(inner_eval(x)), name=name)

        def transport(p: ChartPoint) -> Tuple[ChartPoint, np.ndarray]:
            middle, inner_jacobian = inner.apply_with_jacobian(p)
            image, outer_jacobian = self.apply_with_jacobian(middle)
            return image, outer_jacobian @ inner_jacobian

        return SmoothMap(inner.source, self.target, transport=transport, name=name)

    @classmethod
    def identity(cls, chart: ChartSpec) -> 'SmoothMap':
        return cls(chart, chart, lambda x: list(x), name='id')
