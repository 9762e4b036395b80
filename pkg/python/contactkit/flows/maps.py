"""
The maps built from the flows: the fiber rotation ``Psi``, the contactomorphism
``Psi_c = Psi o psi_Y^1``, the equivalence between doubles of two regular
equations, and the conformality test they all have to pass.
"""

import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np

from contactkit.adcalc.calculus import coefficients, level_set_frame
from contactkit.adcalc.chart import ChartPoint
from contactkit.adcalc.dual import cos, sin
from contactkit.adcalc.fields import OneForm, ScalarField, SmoothMap
from contactkit.errors import CoorientationError, FlowEscapeError
from contactkit.flows.fields import double_equiv_field, gray_field
from contactkit.flows.integrator import DEFAULT_TOLERANCES, FlowResult, integrate_batch
from contactkit.weinstein.double import SURFACE_TOLERANCE, DoubledSpace, Hypersurface, lambda_t

ESCAPE_FACTOR = 10.0


def _rotation_indices(ds: DoubledSpace) -> Tuple[int, int, int]:
    ix, iy = ds.model.complex_index
    return ix, iy, ds.theta_index


def psi_map(ds: DoubledSpace) -> SmoothMap:
    """``Psi(q, z, s, theta) = (q, e^{i theta} z, s, theta)`` as an AD-differentiable map."""
    ix, iy, it = _rotation_indices(ds)

    def rotate(x):
        out = list(x)
        c, s = cos(x[it]), sin(x[it])
        out[ix] = c * x[ix] - s * x[iy]
        out[iy] = s * x[ix] + c * x[iy]
        return out

    return SmoothMap(ds.chart, ds.chart, rotate, name='Psi')


def psi_rotation_batch(ds: DoubledSpace, coords: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """``Psi`` and its analytic Jacobian on a batch ``(B, m)``."""
    ix, iy, it = _rotation_indices(ds)
    coords = np.asarray(coords, dtype=float)
    batch, dim = coords.shape
    c, s = np.cos(coords[:, it]), np.sin(coords[:, it])
    x, y = coords[:, ix], coords[:, iy]
    image = coords.copy()
    image[:, ix] = c * x - s * y
    image[:, iy] = s * x + c * y

    jacobian = np.broadcast_to(np.eye(dim), (batch, dim, dim)).copy()
    jacobian[:, ix, ix] = c
    jacobian[:, ix, iy] = -s
    jacobian[:, iy, ix] = s
    jacobian[:, iy, iy] = c
    jacobian[:, ix, it] = -s * x - c * y
    jacobian[:, iy, it] = c * x - s * y
    return image, jacobian


def psi_rotation(ds: DoubledSpace, p: ChartPoint) -> Tuple[ChartPoint, np.ndarray]:
    image, jacobian = psi_rotation_batch(ds, p.coords[None, :])
    return ChartPoint(ds.chart, image[0]), jacobian[0]


def psi_c_many(
    ds: DoubledSpace,
    points: Sequence[ChartPoint],
    k: int,
    tol: Tuple[float, float] = DEFAULT_TOLERANCES,
    surface_tol: float = SURFACE_TOLERANCE,
    with_jacobian: bool = True,
    record: bool = False,
) -> List[FlowResult]:
    """
    Applies ``Psi_c`` ``k`` times to every point, composing Jacobians.

    With ``record`` every result carries the Gray-flow segments of all iterates,
    with ``t`` shifted by the iterate index.
    """
    if k < 0:
        raise ValueError(f'Iterate index must be non-negative, got k={k}.')
    if not points:
        return []
    coords = np.stack([p.coords for p in points])
    drift = ds.surface(surface_tol).check_batch(coords)
    batch, dim = coords.shape
    jacobian = np.broadcast_to(np.eye(dim), (batch, dim, dim)).copy()
    steps = np.zeros(batch, dtype=int)
    rejected = np.zeros(batch, dtype=int)
    Y = gray_field(ds)
    histories: List[List[List[float]]] = [[] for _ in range(batch)]

    for iterate in range(k):
        flow = integrate_batch(Y, coords, 0.0, 1.0, tol, ds.fD, with_jacobian)
        coords, rotation = psi_rotation_batch(ds, flow.coords)
        if with_jacobian:
            jacobian = np.matmul(rotation, np.matmul(flow.jacobian, jacobian))
        drift = np.maximum(drift, np.maximum(flow.drift, np.abs(ds.fD.evaluate_batch(coords))))
        steps += flow.steps
        rejected += flow.rejected
        for b in range(batch):
            histories[b].extend([row[0] + iterate, *row[1:]] for row in flow.histories[b])
        logging.log(15, f'Psi_c iterate {iterate + 1}/{k}: max drift {drift.max():.3e}')

    escaped = np.flatnonzero(drift > ESCAPE_FACTOR * surface_tol)
    if escaped.size:
        b = int(escaped[0])
        raise FlowEscapeError(
            f'Psi_c drifted {drift[b]:.3e} off f^D = 0 (limit {ESCAPE_FACTOR * surface_tol:.1e}).',
            points[b].coords,
            drift[b],
            histories[b],
        )
    return [
        FlowResult(
            endpoint=ChartPoint(ds.chart, coords[b]),
            jacobian=jacobian[b] if with_jacobian else np.full((dim, dim), np.nan),
            drift=float(drift[b]),
            steps=int(steps[b]),
            tol_used=(float(tol[0]), float(tol[1])),
            rejected=int(rejected[b]),
            trajectory=histories[b] if record else [],
        )
        for b in range(batch)
    ]


def psi_c(
    ds: DoubledSpace,
    p: ChartPoint,
    k: int,
    tol: Tuple[float, float] = DEFAULT_TOLERANCES,
    surface_tol: float = SURFACE_TOLERANCE,
    record: bool = False,
) -> FlowResult:
    return psi_c_many(ds, [p], k, tol, surface_tol, record=record)[0]


def psi_c_map(
    ds: DoubledSpace,
    k: int = 1,
    tol: Tuple[float, float] = DEFAULT_TOLERANCES,
    surface_tol: float = SURFACE_TOLERANCE,
) -> SmoothMap:
    def transport(p: ChartPoint):
        result = psi_c(ds, p, k, tol, surface_tol)
        return result.endpoint, result.jacobian

    return SmoothMap(ds.chart, ds.chart, transport=transport, name=f'Psi_c^{k}')


def conformality_residual(
    smooth_map: SmoothMap,
    ds: DoubledSpace,
    p: ChartPoint,
    tol: float = SURFACE_TOLERANCE,
    equation: Optional[ScalarField] = None,
    target_equation: Optional[ScalarField] = None,
    form: Optional[OneForm] = None,
) -> Tuple[float, float]:
    """
    Compares the pullback of ``alpha`` with ``alpha`` on the level-set tangent basis at ``p``.

    Args:
        smooth_map: Map with a Jacobian.
        ds: The doubled space.
        p: Base point on ``{equation = 0}``.
        tol: On-surface tolerance for ``p`` and its image.
        equation: Source hypersurface, ``f^D`` by default.
        target_equation: Equation of the hypersurface the image must lie on, ``equation`` by default.
        form: The one-form, ``lambda^D`` by default.

    Returns:
        ``(factor, residual)``: the least-squares conformal factor and the relative
        deviation of the pulled back form from ``factor * alpha``.
    """
    equation = equation or ds.fD
    target_equation = target_equation or equation
    form = form or ds.lambdaD

    frame = level_set_frame(equation, p, tol)
    image, jacobian = smooth_map.apply_with_jacobian(p)
    Hypersurface(ds, target_equation, tol).check(image)

    alpha = frame.T @ coefficients(form, p)
    pulled = (jacobian @ frame).T @ coefficients(form, image)
    factor = float(np.dot(pulled, alpha) / np.dot(alpha, alpha))
    residual = float(np.linalg.norm(pulled - factor * alpha) / max(np.linalg.norm(pulled), 1e-300))
    if factor <= 0.0:
        raise CoorientationError(
            f'{smooth_map.name or "Map"} reverses the coorientation (factor {factor:.3e}).', p.coords, factor
        )
    return factor, residual


def hat_psi_pullback_residual(ds: DoubledSpace, p: ChartPoint) -> float:
    """``max_j |(Psi^* lambda^D)(e_j) - lambda^D_1(e_j)|`` with ``lambda^D_1 = lambda + (2s + h) dtheta``."""
    image, jacobian = psi_map(ds).apply_with_jacobian(p)
    pulled = jacobian.T @ coefficients(ds.lambdaD, image)
    expected = coefficients(lambda_t(ds, ds.h_theta, 1.0), p)
    return float(np.max(np.abs(pulled - expected)))


def doubled_equation(ds: DoubledSpace, f: ScalarField) -> ScalarField:
    """``s^2 + f`` on the doubled chart."""
    w, f_eval = ds.w_dim, f.evaluator
    return ScalarField(ds.chart, lambda x: x[w] * x[w] + f_eval(x[:w]), f'{f.name}^D')


def _interpolated_equation(ds: DoubledSpace, f0: ScalarField, f1: ScalarField):
    w = ds.w_dim
    g0, g1 = f0.evaluate_batch, f1.evaluate_batch

    def values(coords: np.ndarray, t: np.ndarray) -> np.ndarray:
        s = coords[:, w]
        return s * s + t * g1(coords[:, :w]) + (1.0 - t) * g0(coords[:, :w])

    return values


def double_equivalence_many(
    f0: ScalarField,
    f1: ScalarField,
    ds: DoubledSpace,
    points: Sequence[ChartPoint],
    tol: Tuple[float, float] = DEFAULT_TOLERANCES,
    with_jacobian: bool = True,
    record: bool = False,
) -> List[FlowResult]:
    """
    Carries points of ``{f_1^D = 0}`` onto ``{f_0^D = 0}``.

    Integrates ``-X_t`` from ``t = 1`` to ``t = 0``; the drift is the largest
    deviation of ``s^2 + f_t`` from zero along the way.
    """
    if not points:
        return []
    field_ = double_equiv_field(f0, f1, ds).negated()
    coords = np.stack([p.coords for p in points])
    flow = integrate_batch(
        field_, coords, 1.0, 0.0, tol, _interpolated_equation(ds, f0, f1), with_jacobian
    )
    dim = ds.chart.dim
    return [
        FlowResult(
            endpoint=ChartPoint(ds.chart, flow.coords[b]),
            jacobian=flow.jacobian[b] if with_jacobian else np.full((dim, dim), np.nan),
            drift=float(flow.drift[b]),
            steps=int(flow.steps[b]),
            tol_used=(float(tol[0]), float(tol[1])),
            rejected=int(flow.rejected[b]),
            trajectory=flow.histories[b] if record else [],
        )
        for b in range(len(points))
    ]


def double_equivalence_map(
    f0: ScalarField,
    f1: ScalarField,
    ds: DoubledSpace,
    tol: Tuple[float, float] = DEFAULT_TOLERANCES,
) -> SmoothMap:
    def transport(p: ChartPoint):
        result = double_equivalence_many(f0, f1, ds, [p], tol)[0]
        return result.endpoint, result.jacobian

    return SmoothMap(ds.chart, ds.chart, transport=transport, name='psi_X^1')


def commutation_residual(
    f0: ScalarField,
    f1: ScalarField,
    ds: DoubledSpace,
    points: Sequence[ChartPoint],
    tol: Tuple[float, float] = DEFAULT_TOLERANCES,
) -> np.ndarray:
    """Per-point distance between ``psi_X^1(Psi(p))`` and ``Psi(psi_X^1(p))``."""
    if not points:
        return np.zeros(0)
    coords = np.stack([p.coords for p in points])
    rotated, _ = psi_rotation_batch(ds, coords)
    rotated_points = [ChartPoint(ds.chart, c) for c in rotated]
    flow_then_rotate = double_equivalence_many(f0, f1, ds, points, tol, with_jacobian=False)
    rotate_then_flow = double_equivalence_many(f0, f1, ds, rotated_points, tol, with_jacobian=False)
    first, _ = psi_rotation_batch(ds, np.stack([r.endpoint.coords for r in flow_then_rotate]))
    second = np.stack([r.endpoint.coords for r in rotate_then_flow])
    return np.max(np.abs(ds.chart.difference(first, second)), axis=1)
