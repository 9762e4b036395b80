"""
Exterior-calculus operators evaluated at chart points.
"""

import logging
from typing import List, Optional

import numpy as np

from contactkit.adcalc.chart import ChartPoint, Covector, TangentVector
from contactkit.adcalc.dual import jvp, primal
from contactkit.adcalc.fields import (
    OneForm,
    ScalarField,
    SmoothMap,
    VectorField,
    check_finite,
    columns_of,
    to_array,
)
from contactkit.errors import CriticalPointError, EvaluationError, OffSurfaceError

FD_STEP = 1e-5
CRITICAL_GRADIENT = 1e-10
ON_SURFACE_TOLERANCE = 1e-8


def _check_base(p: ChartPoint, *vectors: TangentVector):
    for vector in vectors:
        if vector.base != p:
            raise ValueError('Tangent vector is not based at the evaluation point.')


def exterior_derivative(field: ScalarField, p: ChartPoint) -> Covector:
    return Covector(p, field.gradient(p))


def _directional(form: OneForm, p: ChartPoint, x, argument: List[float], direction: List[float]) -> float:
    """``D_direction(omega(argument))``, naming the overflowing coordinate on failure."""
    value = float(primal(jvp(lambda y: form.evaluator(y, argument), x, direction)[1]))
    if not np.isfinite(value):
        gradient = np.array(
            [
                float(primal(jvp(lambda y: form.evaluator(y, argument), x, list(e))[1]))
                for e in np.eye(p.chart.dim)
            ]
        )
        check_finite(gradient, p.chart, p.coords, 'form derivative')
        raise EvaluationError('Non-finite form derivative.', p.coords)
    return value


def d_oneform(form: OneForm, p: ChartPoint, u: TangentVector, v: TangentVector) -> float:
    """``d(omega)(u, v) = D_u(omega(v)) - D_v(omega(u))`` with constant ``u``, ``v``."""
    _check_base(p, u, v)
    x = columns_of(p.coords)
    u_c, v_c = list(u.components), list(v.components)
    return _directional(form, p, x, v_c, u_c) - _directional(form, p, x, u_c, v_c)


def lie_derivative_oneform(form: OneForm, X: VectorField, p: ChartPoint, u: TangentVector) -> float:
    """Cartan's formula, ``(iota_X d(omega) + d(omega(X)))(u)``."""
    _check_base(p, u)
    x = columns_of(p.coords)
    u_c = list(u.components)
    x_p = list(X(p).components)
    contraction = _directional(form, p, x, u_c, x_p) - _directional(form, p, x, x_p, u_c)
    differential = float(primal(jvp(lambda y: form.evaluator(y, X.evaluator(y)), x, u_c)[1]))
    if not np.isfinite(differential):
        raise EvaluationError(f'Non-finite derivative of {form.name or "form"}({X.name or "X"}).', p.coords)
    return contraction + differential


def pullback_oneform(smooth_map: SmoothMap, form: OneForm, p: ChartPoint, u: TangentVector) -> float:
    _check_base(p, u)
    image, jacobian = smooth_map.apply_with_jacobian(p)
    return form(image, TangentVector(image, jacobian @ u.components))


def level_set_frame(
    field: ScalarField,
    p: ChartPoint,
    tol: float = ON_SURFACE_TOLERANCE,
    rng: Optional[np.random.Generator] = None,
) -> np.ndarray:
    """
    Orthonormal basis of ``ker d(field)`` at ``p`` as the columns of a ``(dim, dim-1)`` matrix.

    Gram-Schmidt runs over the coordinate basis in index order, or over random
    seeds drawn from ``rng``. The basis is oriented so that ``(grad, e_1, ...)``
    has positive determinant.
    """
    residual = field(p)
    if abs(residual) >= tol:
        raise OffSurfaceError(
            f'Point is off the level set of {field.name or "field"} by {residual:.3e}.',
            p.coords,
            residual,
        )
    gradient = field.gradient(p)
    norm = np.linalg.norm(gradient)
    if norm < CRITICAL_GRADIENT:
        raise CriticalPointError('Critical point on level set.', p.coords)
    normal = gradient / norm

    dim = p.chart.dim
    seeds = np.eye(dim) if rng is None else rng.standard_normal((dim, dim))
    basis: List[np.ndarray] = []
    for seed in seeds:
        vector = seed - np.dot(seed, normal) * normal
        for other in basis:
            vector = vector - np.dot(vector, other) * other
        length = np.linalg.norm(vector)
        if length > 1e-8 * max(1.0, np.linalg.norm(seed)):
            basis.append(vector / length)
        if len(basis) == dim - 1:
            break
    if len(basis) < dim - 1:
        raise CriticalPointError('Could not complete a tangent basis on the level set.', p.coords)

    frame = np.stack(basis, axis=1)
    if np.linalg.det(np.column_stack([normal, frame])) < 0:
        frame[:, -1] = -frame[:, -1]
    logging.debug(f'Level-set frame at {p.as_list()} with |grad| = {norm:.3e}')
    return frame


def tangent_basis_of_level_set(
    field: ScalarField,
    p: ChartPoint,
    tol: float = ON_SURFACE_TOLERANCE,
    rng: Optional[np.random.Generator] = None,
) -> List[TangentVector]:
    frame = level_set_frame(field, p, tol, rng)
    return [TangentVector(p, frame[:, i]) for i in range(frame.shape[1])]


def finite_difference_gradient(field: ScalarField, p: ChartPoint, step: float = FD_STEP) -> np.ndarray:
    """Central differences; used as the oracle for AD consistency checks."""
    coords = np.array(p.coords)
    gradient = np.zeros(p.chart.dim)
    for i in range(p.chart.dim):
        forward, backward = coords.copy(), coords.copy()
        forward[i] += step
        backward[i] -= step
        gradient[i] = (
            primal(field.evaluator(columns_of(forward))) - primal(field.evaluator(columns_of(backward)))
        ) / (2.0 * step)
    return gradient


def finite_difference_jacobian(smooth_map: SmoothMap, p: ChartPoint, step: float = FD_STEP) -> np.ndarray:
    """Central differences of a map, with periodic target coordinates unwrapped."""
    coords = np.array(p.coords)
    columns = []
    for i in range(p.chart.dim):
        forward, backward = coords.copy(), coords.copy()
        forward[i] += step
        backward[i] -= step
        image_forward = smooth_map(ChartPoint(p.chart, forward)).coords
        image_backward = smooth_map(ChartPoint(p.chart, backward)).coords
        columns.append(smooth_map.target.difference(image_forward, image_backward) / (2.0 * step))
    return np.stack(columns, axis=1)


def coefficients(form: OneForm, p: ChartPoint) -> np.ndarray:
    return to_array(form.coefficients(columns_of(p.coords)))
