"""
Time-dependent vector fields and the two explicit fields of the construction:
the uniqueness field ``X_t`` between two regular equations and the Gray field ``Y``.
"""

from dataclasses import dataclass
from typing import Any, Callable, List, Optional, Sequence, Tuple

import numpy as np

from contactkit.adcalc.chart import ChartPoint, ChartSpec, TangentVector
from contactkit.adcalc.dual import jvp, linearize, primal
from contactkit.adcalc.fields import ScalarField, VectorField, columns_of, to_array
from contactkit.errors import SingularDenominatorError
from contactkit.weinstein.double import DoubledSpace

SINGULAR_DENOMINATOR = 1e-8

Coords = Sequence[Any]


@dataclass(frozen=True)
class TimeDependentField:
    chart: ChartSpec
    evaluator: Callable[[Coords, Any], List[Any]]
    name: str = ''

    def __call__(self, p: ChartPoint, t: float) -> TangentVector:
        return TangentVector(p, to_array(self.evaluator(columns_of(p.coords), t)))

    def spatial_jacobian(self, p: ChartPoint, t: float) -> np.ndarray:
        return self.linearize_batch(p.coords[None, :], np.array([t]))[1][0]

    def evaluate_batch(self, coords: np.ndarray, t: np.ndarray) -> np.ndarray:
        coords = np.asarray(coords, dtype=float)
        return to_array(self.evaluator(columns_of(coords), t), coords.shape[0])

    def linearize_batch(self, coords: np.ndarray, t: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Values ``(B, m)`` and spatial Jacobians ``(B, m, m)`` in one sweep of dual passes."""
        coords = np.asarray(coords, dtype=float)
        batch = coords.shape[0]
        value, columns = linearize(lambda x: self.evaluator(x, t), columns_of(coords))
        jacobian = np.stack([to_array(col, batch) for col in columns], axis=2)
        return to_array(value, batch), jacobian

    def negated(self) -> 'TimeDependentField':
        evaluator = self.evaluator
        return TimeDependentField(
            self.chart, lambda x, t: [-v for v in evaluator(x, t)], f'-{self.name}'
        )

    @classmethod
    def from_vector_field(cls, field: VectorField) -> 'TimeDependentField':
        evaluator = field.evaluator
        return cls(field.chart, lambda x, t: evaluator(x), field.name)


def _guard(denominator: Any, x: Coords, what: str):
    value = np.asarray(primal(denominator), dtype=float)
    small = np.abs(value) < SINGULAR_DENOMINATOR
    if not np.any(small):
        return
    index = int(np.flatnonzero(np.ravel(small))[0])
    witness = []
    for c in x:
        c = np.asarray(primal(c), dtype=float)
        witness.append(float(np.ravel(c)[index]) if c.ndim else float(c))
    raise SingularDenominatorError(
        f'|{what}| = {float(np.ravel(value)[index]):.3e} below {SINGULAR_DENOMINATOR:g}.', witness
    )


def double_equiv_field(f0: ScalarField, f1: ScalarField, ds: DoubledSpace) -> TimeDependentField:
    """
    ``X_t = (f_1 - f_0) / df^D_t(Z^D) * Z^D`` with ``f_t = t f_1 + (1 - t) f_0``.

    Along ``-X_t`` the function ``s^2 + f_t`` is conserved, so integrating
    ``-X_t`` from ``t = 1`` down to ``t = 0`` carries ``{f_1^D = 0}`` onto ``{f_0^D = 0}``.
    """
    w = ds.w_dim
    f0_eval, f1_eval = f0.evaluator, f1.evaluator
    Z, ZD = ds.model.Z.evaluator, ds.ZD.evaluator

    def field(x, t):
        xw, s = x[:w], x[w]
        z = Z(xw)
        df0 = jvp(f0_eval, xw, z)[1]
        df1 = jvp(f1_eval, xw, z)[1]
        denominator = 2.0 * s * s + t * df1 + (1.0 - t) * df0
        _guard(denominator, x, 'df^D_t(Z^D)')
        coefficient = (f1_eval(xw) - f0_eval(xw)) / denominator
        return [coefficient * v for v in ZD(x)]

    return TimeDependentField(ds.chart, field, 'X_t')


def gray_field(ds: DoubledSpace, h: Optional[ScalarField] = None) -> TimeDependentField:
    """
    ``Y = h / (2 df^D(Z^D)) * (2 s Z - df(Z) d/ds)``.

    ``h`` defaults to ``h_theta = lambda(X_theta)`` of the model; ``Y`` is
    tangent to ``{f^D = 0}`` and annihilated by every ``lambda^D_t``.
    """
    h = h or ds.h_theta
    w = ds.w_dim
    f_eval, h_eval, Z = ds.f.evaluator, h.evaluator, ds.model.Z.evaluator

    def field(x, t):
        xw, s = x[:w], x[w]
        z = Z(xw)
        df_z = jvp(f_eval, xw, z)[1]
        denominator = 2.0 * s * s + df_z
        _guard(denominator, x, 'df^D(Z^D)')
        coefficient = h_eval(xw) / (2.0 * denominator)
        return [coefficient * 2.0 * s * v for v in z] + [-coefficient * df_z, 0.0]

    return TimeDependentField(ds.chart, field, 'Y')
