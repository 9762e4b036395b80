"""
Adaptive Cash-Karp 5(4) integration of time-dependent fields with variational transport.

The state of every trajectory is ``(x, M)`` with ``dx/dt = X(x, t)`` and
``dM/dt = (dX/dx) M``, ``M(t0) = id``. Many trajectories are advanced together,
each with its own clock and step size, so a batch produces the same result as
integrating its members one at a time.
"""

import csv
import logging
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np

from contactkit.adcalc.chart import ChartPoint
from contactkit.adcalc.fields import ScalarField
from contactkit.errors import EvaluationError, StiffnessError
from contactkit.flows.fields import TimeDependentField

DEFAULT_TOLERANCES = (1e-10, 1e-12)
MIN_STEP = 1e-14
MAX_STEPS = 200_000

SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 5.0

# Cash-Karp tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 3 / 5, 1.0, 7 / 8])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [3 / 10, -9 / 10, 6 / 5],
    [-11 / 54, 5 / 2, -70 / 27, 35 / 27],
    [1631 / 55296, 175 / 512, 575 / 13824, 44275 / 110592, 253 / 4096],
]
_B5 = np.array([37 / 378, 0.0, 250 / 621, 125 / 594, 0.0, 512 / 1771])
# fifth minus fourth order weights
_E = np.array([-277 / 64512, 0.0, 6925 / 370944, -6925 / 202752, -277 / 14336, 277 / 7084])

Constraint = Union[ScalarField, Callable[[np.ndarray, np.ndarray], np.ndarray]]


@dataclass(frozen=True, eq=False)
class FlowResult:
    endpoint: ChartPoint
    jacobian: np.ndarray
    drift: float
    steps: int
    tol_used: Tuple[float, float]
    rejected: int = 0
    trajectory: List[List[float]] = field(default_factory=list)


@dataclass
class BatchFlow:
    """Raw integration output: unreduced coordinates, one row per trajectory."""

    coords: np.ndarray
    jacobian: Optional[np.ndarray]
    drift: np.ndarray
    steps: np.ndarray
    rejected: np.ndarray
    histories: List[List[List[float]]]


def _constraint_values(constraint: Optional[Constraint], coords: np.ndarray, t: np.ndarray) -> np.ndarray:
    if constraint is None:
        return np.zeros(coords.shape[0])
    if isinstance(constraint, ScalarField):
        return np.abs(constraint.evaluate_batch(coords))
    return np.abs(np.asarray(constraint(coords, t), dtype=float))


def _rhs(field_: TimeDependentField, coords, M, t, with_jacobian: bool):
    if with_jacobian:
        values, jac = field_.linearize_batch(coords, t)
        dM = np.matmul(jac, M)
    else:
        values, dM = field_.evaluate_batch(coords, t), None
    bad = ~np.isfinite(values).all(axis=1)
    if dM is not None:
        bad |= ~np.isfinite(dM).all(axis=(1, 2))
    if np.any(bad):
        index = int(np.flatnonzero(bad)[0])
        component = int(np.flatnonzero(~np.isfinite(values[index]))[0]) if not np.isfinite(values[index]).all() else 0
        name = field_.chart.coordinate_names[component]
        raise EvaluationError(
            f'{field_.name or "Field"} is not finite along {name} at t={float(t[index]):.6g}.',
            coords[index],
        )
    return values, dM


def integrate_batch(
    field_: TimeDependentField,
    y0: np.ndarray,
    t0: float,
    t1: float,
    tol: Tuple[float, float] = DEFAULT_TOLERANCES,
    constraint: Optional[Constraint] = None,
    with_jacobian: bool = True,
) -> BatchFlow:
    """
    Integrates every row of ``y0`` from ``t0`` to ``t1`` (either direction).

    Args:
        field_: The time-dependent field.
        y0: Initial coordinates, shape ``(B, m)``.
        t0: Start time.
        t1: End time.
        tol: ``(rel, abs)`` tolerances of the error control, applied to ``x`` and ``M``.
        constraint: Monitored function whose maximum modulus over accepted steps is the drift.
        with_jacobian: Transport the variational matrix as well.
    """
    rel, absolute = tol
    x = np.array(y0, dtype=float, copy=True)
    batch, dim = x.shape
    M = np.broadcast_to(np.eye(dim), (batch, dim, dim)).copy() if with_jacobian else None
    t = np.full(batch, float(t0))
    span = float(t1) - float(t0)
    direction = 1.0 if span >= 0 else -1.0
    h = np.full(batch, direction * min(abs(span), 0.1 * max(abs(span), 1e-3)))
    done = np.full(batch, abs(span) == 0.0)
    steps = np.zeros(batch, dtype=int)
    rejected = np.zeros(batch, dtype=int)

    drift = _constraint_values(constraint, x, t)
    histories = [[[float(t[b]), *x[b], float(drift[b])]] for b in range(batch)]

    while not done.all():
        active = np.flatnonzero(~done)
        remaining = float(t1) - t[active]
        h_a = direction * np.minimum(np.abs(h[active]), np.abs(remaining))
        finishing = np.abs(h_a) >= np.abs(remaining)
        x_a, t_a = x[active], t[active]
        M_a = M[active] if with_jacobian else None

        k_x, k_M = [], []
        for stage in range(6):
            xs = x_a.copy()
            Ms = M_a.copy() if with_jacobian else None
            for j, a in enumerate(_A[stage]):
                xs += (h_a * a)[:, None] * k_x[j]
                if with_jacobian:
                    Ms += (h_a * a)[:, None, None] * k_M[j]
            dx, dM = _rhs(field_, xs, Ms, t_a + _C[stage] * h_a, with_jacobian)
            k_x.append(dx)
            k_M.append(dM)

        x_new = x_a + h_a[:, None] * sum(b * k for b, k in zip(_B5, k_x))
        err_x = h_a[:, None] * sum(e * k for e, k in zip(_E, k_x))
        scale_x = absolute + rel * np.maximum(np.abs(x_a), np.abs(x_new))
        squares = np.sum((err_x / scale_x) ** 2, axis=1)
        count = dim
        if with_jacobian:
            M_new = M_a + h_a[:, None, None] * sum(b * k for b, k in zip(_B5, k_M))
            err_M = h_a[:, None, None] * sum(e * k for e, k in zip(_E, k_M))
            scale_M = absolute + rel * np.maximum(np.abs(M_a), np.abs(M_new))
            squares = squares + np.sum((err_M / scale_M) ** 2, axis=(1, 2))
            count += dim * dim
        err = np.sqrt(squares / count)

        accept = err <= 1.0
        with np.errstate(divide='ignore'):
            factor = np.where(err == 0.0, MAX_FACTOR, SAFETY * err ** (-0.2))
        factor = np.clip(factor, MIN_FACTOR, MAX_FACTOR)
        factor = np.where(accept, factor, np.minimum(factor, 1.0))

        accepted = active[accept]
        if accepted.size:
            x[accepted] = x_new[accept]
            if with_jacobian:
                M[accepted] = M_new[accept]
            t[accepted] = np.where(finishing[accept], float(t1), t_a[accept] + h_a[accept])
            done[accepted] = finishing[accept]
            steps[accepted] += 1
            values = _constraint_values(constraint, x[accepted], t[accepted])
            drift[accepted] = np.maximum(drift[accepted], values)
            for b, value in zip(accepted, values):
                histories[b].append([float(t[b]), *x[b], float(value)])
        rejected[active[~accept]] += 1

        h[active] = h_a * factor
        stuck = active[(np.abs(h[active]) < MIN_STEP) & ~done[active]]
        if stuck.size or np.any(steps[active] + rejected[active] > MAX_STEPS):
            b = int(stuck[0]) if stuck.size else int(active[0])
            logging.error(f'Step size underflow for {field_.name or "field"} at t={t[b]:.6g}')
            raise StiffnessError(
                f'Step size underflow integrating {field_.name or "field"} at t={t[b]:.6g}.',
                histories[b],
            )

    logging.debug(
        f'Integrated {batch} trajectories of {field_.name or "field"} over [{t0}, {t1}]: '
        f'max steps {int(steps.max()) if batch else 0}, rejected {int(rejected.sum())}'
    )
    return BatchFlow(x, M, drift, steps, rejected, histories)


def integrate_flows(
    field_: TimeDependentField,
    points: Sequence[ChartPoint],
    t0: float,
    t1: float,
    tol: Tuple[float, float] = DEFAULT_TOLERANCES,
    constraint: Optional[Constraint] = None,
    with_jacobian: bool = True,
    record: bool = False,
) -> List[FlowResult]:
    if not points:
        return []
    chart = points[0].chart
    flow = integrate_batch(
        field_, np.stack([p.coords for p in points]), t0, t1, tol, constraint, with_jacobian
    )
    dim = chart.dim
    return [
        FlowResult(
            endpoint=ChartPoint(chart, flow.coords[b]),
            jacobian=flow.jacobian[b] if with_jacobian else np.full((dim, dim), np.nan),
            drift=float(flow.drift[b]),
            steps=int(flow.steps[b]),
            tol_used=(float(tol[0]), float(tol[1])),
            rejected=int(flow.rejected[b]),
            trajectory=flow.histories[b] if record else [],
        )
        for b in range(len(points))
    ]


def integrate_flow(
    field_: TimeDependentField,
    p0: ChartPoint,
    t0: float,
    t1: float,
    tol: Tuple[float, float] = DEFAULT_TOLERANCES,
    constraint: Optional[Constraint] = None,
    record: bool = False,
) -> FlowResult:
    return integrate_flows(field_, [p0], t0, t1, tol, constraint, True, record)[0]


def write_trajectory_csv(rows: Sequence[Sequence[float]], path: str, coordinate_names: Sequence[str]):
    """Writes a trajectory dump with columns ``t``, the coordinates and ``|f^D|``."""
    with open(path, 'w', newline='') as handle:
        writer = csv.writer(handle)
        writer.writerow(['t', *coordinate_names, 'abs_fD'])
        for row in rows:
            writer.writerow([repr(float(v)) for v in row])
    logging.info(f'Wrote trajectory dump with {len(rows)} rows to {path}')
