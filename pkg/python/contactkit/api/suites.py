"""
Verification suites run by the ``verify`` and ``double-equiv`` subcommands.

Every suite draws its sample points from its own random stream, derived from the
run seed and the suite name, so selecting a subset of suites does not change
the points any other suite sees.
"""

import logging
import time
import zlib
from concurrent.futures import Executor
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from contactkit.adcalc.calculus import (
    finite_difference_gradient,
    finite_difference_jacobian,
    lie_derivative_oneform,
    level_set_frame,
)
from contactkit.adcalc.chart import ChartPoint, TangentVector
from contactkit.adcalc.fields import ScalarField, SmoothMap, VectorField, unit_vector
from contactkit.api.config import RunConfig
from contactkit.api.report import FAIL, PASS, CheckRecord
from contactkit.errors import ContactKitError
from contactkit.flows.fields import double_equiv_field, gray_field
from contactkit.flows.integrator import FlowResult
from contactkit.flows.maps import (
    commutation_residual,
    conformality_residual,
    double_equivalence_many,
    doubled_equation,
    hat_psi_pullback_residual,
    psi_c_many,
    psi_map,
)
from contactkit.weinstein.checks import (
    almost_stein_check,
    complex_structure_residual,
    contact_volume_check,
    dh_theta_residual,
    doubled_liouville_residual,
    liouville_residual,
    taming_check,
)
from contactkit.weinstein.double import (
    DoubledSpace,
    default_cutoff,
    lambda_t,
    sample_chart_points,
    sample_surface_points,
    shifted_potential,
)
from contactkit.weinstein.models import WeinsteinModel

CONFORMALITY_TOLERANCE = 1e-6
UNDEFORMED_CONTRAST = 1e3
AD_TOLERANCE = 1e-6
VOLUME_RATIO = 1e-8
ROBUSTNESS_SAMPLES = 10
LIOUVILLE_TIMES = (0.0, 0.5, 1.0)


@dataclass
class SuiteContext:
    config: RunConfig
    model: WeinsteinModel
    ds: DoubledSpace
    seed: int
    executor: Optional[Executor] = None
    trajectories: Dict[str, List[List[float]]] = field(default_factory=dict)

    @property
    def tolerance(self) -> float:
        return self.config.tolerances.identity

    @property
    def surface_tol(self) -> float:
        return self.config.tolerances.surface

    @property
    def ode_tol(self) -> Tuple[float, float]:
        return self.config.tolerances.ode

    @property
    def record(self) -> bool:
        return self.config.output.trajectories

    def keep_trajectories(self, name: str, results: Sequence[FlowResult]):
        """Collects ``trajectory_<name>-<b>`` dumps when the run asked for them."""
        if self.record:
            for b, result in enumerate(results):
                self.trajectories[f'{name}-{b}'] = result.trajectory

    def rng(self, name: str) -> np.random.Generator:
        return np.random.default_rng([self.seed, zlib.crc32(name.encode('utf-8'))])

    def map(self, fn: Callable, items: Iterable) -> List:
        """Applies ``fn`` to every item, in parallel when an executor is set; order is kept."""
        if self.executor is None:
            return [fn(item) for item in items]
        return list(self.executor.map(fn, items))

    def point(self, coords: np.ndarray) -> ChartPoint:
        return ChartPoint(self.ds.chart, coords)

    def w_point(self, coords: np.ndarray) -> ChartPoint:
        return ChartPoint(self.model.chart, coords)


@dataclass
class SuiteOutcome:
    passed: bool
    max_residual: float
    witness: List[float] = field(default_factory=list)
    message: str = ''
    statistic_name: str = ''
    statistic: float = 0.0


def _worst(residuals: Sequence[float], coords: np.ndarray, threshold: float, what: str) -> SuiteOutcome:
    residuals = np.asarray(residuals, dtype=float)
    index = int(np.argmax(residuals))
    worst = float(residuals[index])
    passed = bool(worst < threshold)
    message = f'max {what} {worst:.3e} over {len(residuals)} samples (threshold {threshold:g})'
    return SuiteOutcome(passed, worst, [] if passed else [float(x) for x in coords[index]], message)


def liouville_suite(ctx: SuiteContext) -> SuiteOutcome:
    coords = sample_chart_points(ctx.ds, ctx.config.samples.identity, ctx.rng('liouville'))
    w = ctx.ds.w_dim

    def residual(c):
        values = [liouville_residual(ctx.model.lambda_, ctx.model.Z, ctx.w_point(c[:w]))]
        values += [doubled_liouville_residual(ctx.ds, ctx.ds.h_theta, t, ctx.point(c)) for t in LIOUVILLE_TIMES]
        return max(values)

    return _worst(ctx.map(residual, coords), coords, ctx.tolerance, 'Liouville residual')


def transversality_suite(ctx: SuiteContext) -> SuiteOutcome:
    coords = sample_surface_points(ctx.ds, ctx.config.samples.identity, ctx.rng('transversality'))
    values = ctx.ds.transversality.evaluate_batch(coords)
    index = int(np.argmin(values))
    minimum = float(values[index])
    passed = minimum > 0.0
    return SuiteOutcome(
        passed,
        max(0.0, -minimum),
        [] if passed else [float(x) for x in coords[index]],
        f'min df^D(Z^D) {minimum:.4e} on {len(values)} surface samples',
        'min_transversality',
        minimum,
    )


def contact_volume_suite(ctx: SuiteContext) -> SuiteOutcome:
    rng = ctx.rng('contact-volume')
    coords = sample_surface_points(ctx.ds, ctx.config.samples.volume, rng)
    values = np.array(ctx.map(lambda c: contact_volume_check(ctx.ds, ctx.point(c), ctx.surface_tol), coords))

    signs = np.sign(values)
    magnitudes = np.abs(values)
    median = float(np.median(magnitudes))
    ratio = float(np.min(magnitudes) / median) if median > 0.0 else 0.0
    flipped = np.flatnonzero(signs != signs[0])

    # the sign must not depend on how the tangent basis was seeded
    reseeded = []
    for c in coords[:ROBUSTNESS_SAMPLES]:
        p = ctx.point(c)
        basis = level_set_frame(ctx.ds.fD, p, ctx.surface_tol, rng)
        reseeded.append(contact_volume_check(ctx.ds, p, ctx.surface_tol, basis))
    unstable = np.flatnonzero(np.sign(reseeded) != signs[:ROBUSTNESS_SAMPLES])

    passed = flipped.size == 0 and unstable.size == 0 and ratio > VOLUME_RATIO
    witness = []
    if flipped.size:
        witness = [float(x) for x in coords[flipped[0]]]
    elif unstable.size:
        witness = [float(x) for x in coords[unstable[0]]]
    elif not passed:
        witness = [float(x) for x in coords[int(np.argmin(magnitudes))]]
    return SuiteOutcome(
        passed,
        0.0 if passed else 1.0,
        witness,
        f'sign {int(signs[0]):+d} at {len(values)} samples, min |vol| {magnitudes.min():.4e}, '
        f'median {median:.4e}, {flipped.size} sign changes',
        'min_over_median',
        ratio,
    )


def almost_stein_suite(ctx: SuiteContext) -> SuiteOutcome:
    coords = ctx.model.sample_sublevel(ctx.rng('almost-stein'), ctx.config.samples.identity, 2.0 * ctx.model.c)
    residuals = ctx.map(lambda c: almost_stein_check(ctx.model, ctx.w_point(c)), coords)
    return _worst(residuals, coords, ctx.tolerance, 'almost-Stein residual')


def dh_theta_suite(ctx: SuiteContext) -> SuiteOutcome:
    coords = ctx.model.sample_sublevel(ctx.rng('dh-theta'), ctx.config.samples.identity, 2.0 * ctx.model.c)
    residuals = ctx.map(lambda c: dh_theta_residual(ctx.model, ctx.w_point(c)), coords)
    return _worst(residuals, coords, ctx.tolerance, '|dh(Z) - h|')


def lie_derivative_suite(ctx: SuiteContext) -> SuiteOutcome:
    """``L_{X_t} lambda^D = (f_1 - f_0) / df^D_t(Z^D) lambda^D`` at random ``t``."""
    rng = ctx.rng('lie-derivative')
    ds, model = ctx.ds, ctx.model
    coords = sample_chart_points(ds, ctx.config.samples.identity, rng)
    times = rng.uniform(0.0, 1.0, len(coords))
    f0, f1 = shifted_potential(model), ds.f
    field_ = double_equiv_field(f0, f1, ds)
    df0, df1 = f0.derivative_along(model.Z), f1.derivative_along(model.Z)
    w, dim = ds.w_dim, ds.chart.dim

    def residual(item):
        c, t = item
        p, pw = ctx.point(c), ctx.w_point(c[:w])
        X = VectorField(ds.chart, lambda x: field_.evaluator(x, t), 'X_t')
        denominator = 2.0 * c[w] ** 2 + t * df1(pw) + (1.0 - t) * df0(pw)
        g = (f1(pw) - f0(pw)) / denominator
        worst = 0.0
        for j in range(dim):
            u = TangentVector(p, unit_vector(dim, j))
            worst = max(worst, abs(lie_derivative_oneform(ds.lambdaD, X, p, u) - g * ds.lambdaD(p, u)))
        return worst

    return _worst(ctx.map(residual, list(zip(coords, times))), coords, ctx.tolerance, 'Lie derivative residual')


def gray_field_suite(ctx: SuiteContext) -> SuiteOutcome:
    """``Y`` is tangent to ``{f^D = 0}`` and lies in the kernel of every ``lambda^D_t``."""
    ds = ctx.ds
    coords = sample_surface_points(ds, ctx.config.samples.identity, ctx.rng('gray-field'))
    Y = gray_field(ds).evaluate_batch(coords, np.zeros(len(coords)))
    residuals = np.abs(np.sum(ds.fD.gradient_batch(coords) * Y, axis=1))
    for t in LIOUVILLE_TIMES:
        residuals = np.maximum(residuals, np.abs(lambda_t(ds, ds.h_theta, t).evaluate_batch(coords, Y)))
    return _worst(residuals, coords, ctx.tolerance, '|df^D(Y)|, |lambda_t(Y)|')


def _transported(results: Sequence[FlowResult], ds: DoubledSpace, name: str) -> List[SmoothMap]:
    maps = []
    for result in results:
        maps.append(
            SmoothMap(ds.chart, ds.chart, transport=lambda p, r=result: (r.endpoint, r.jacobian), name=name)
        )
    return maps


def gray_deformation_suite(ctx: SuiteContext) -> SuiteOutcome:
    """``Psi_c`` is conformal on the contact planes while the undeformed ``Psi`` is not."""
    ds = ctx.ds
    coords = sample_surface_points(ds, ctx.config.samples.flow, ctx.rng('gray-deformation'))
    points = [ctx.point(c) for c in coords]
    results = psi_c_many(ds, points, 1, ctx.ode_tol, ctx.surface_tol, record=ctx.record)
    ctx.keep_trajectories('gray-deformation', results)
    maps = _transported(results, ds, 'Psi_c')
    undeformed = psi_map(ds)

    def residuals(item):
        p, smooth_map = item
        factor, deformed = conformality_residual(smooth_map, ds, p, ctx.surface_tol)
        _, plain = conformality_residual(undeformed, ds, p, ctx.surface_tol)
        return deformed, plain, factor

    rows = np.array(ctx.map(residuals, list(zip(points, maps))))
    outcome = _worst(rows[:, 0], coords, CONFORMALITY_TOLERANCE, 'conformality residual of Psi_c')
    contrast = float(np.max(rows[:, 1]))
    outcome.statistic_name = 'max_undeformed_residual'
    outcome.statistic = contrast
    outcome.message += f'; undeformed Psi reaches {contrast:.3e}, min factor {rows[:, 2].min():.4f}'
    if contrast < UNDEFORMED_CONTRAST * CONFORMALITY_TOLERANCE:
        outcome.passed = False
        outcome.message += ' (contrast too small)'
    return outcome


def complex_structure_suite(ctx: SuiteContext) -> SuiteOutcome:
    rng = ctx.rng('complex-structure')
    model, ds = ctx.model, ctx.ds
    residual = max(complex_structure_residual(model.J), complex_structure_residual(ds.JD))
    w_coords = model.sample_sublevel(rng, ctx.config.samples.identity, 2.0 * model.c)
    d_coords = sample_chart_points(ds, ctx.config.samples.identity, rng)
    taming = [taming_check(model.lambda_, model.J, ctx.w_point(c), rng) for c in w_coords]
    taming += [taming_check(ds.lambdaD, ds.JD, ctx.point(c), rng) for c in d_coords]
    minimum = float(np.min(taming))
    passed = residual < ctx.tolerance and minimum > 0.0
    return SuiteOutcome(
        passed,
        residual,
        [],
        f'|J^2 + id| {residual:.3e}, min d lambda(u, Ju) {minimum:.4e}',
        'min_taming',
        minimum,
    )


def ad_consistency_suite(ctx: SuiteContext) -> SuiteOutcome:
    """Exact derivatives against central finite differences."""
    ds = ctx.ds
    coords = sample_chart_points(ds, ctx.config.samples.identity, ctx.rng('ad-consistency'))
    ZD_map = SmoothMap(ds.chart, ds.chart, ds.ZD.evaluator, name='ZD')
    scalars: List[ScalarField] = [ds.fD, ds.psiD]

    def residual(c):
        p = ctx.point(c)
        worst = 0.0
        for scalar in scalars:
            exact = scalar.gradient(p)
            approx = finite_difference_gradient(scalar, p)
            worst = max(worst, float(np.max(np.abs(exact - approx)) / max(1.0, np.max(np.abs(exact)))))
        exact = ds.ZD.jacobian(p)
        approx = finite_difference_jacobian(ZD_map, p)
        return max(worst, float(np.max(np.abs(exact - approx)) / max(1.0, np.max(np.abs(exact)))))

    return _worst(ctx.map(residual, coords), coords, AD_TOLERANCE, 'AD/FD deviation')


def cutoff_suite(ctx: SuiteContext) -> SuiteOutcome:
    """Identity near zero, plateau beyond ``2a``, oddness, monotonicity and derivative consistency."""
    spec = default_cutoff(ctx.model)
    a = spec.a
    grid = np.linspace(-1.5, 1.5, 3001)
    chi = spec.derivatives[0](grid)
    slope = spec.derivatives[1](grid)

    inner = np.abs(grid) < a
    outer = np.abs(grid) > 2.0 * a
    deviations = [
        np.max(np.abs(chi[inner] - grid[inner])),
        np.max(np.abs(chi[outer] - np.sign(grid[outer]))),
        np.max(np.abs(chi + spec.derivatives[0](-grid))),
        max(0.0, -float(np.min(slope))),
    ]

    step = 1e-7
    kinks = np.array([-2.0 * a, -a, a, 2.0 * a])
    smooth = np.min(np.abs(grid[:, None] - kinks[None, :]), axis=1) > 1e-5
    t = grid[smooth]
    for order in (0, 1):
        derivative = spec.derivatives[order]
        approx = (derivative(t + step) - derivative(t - step)) / (2.0 * step)
        exact = spec.derivatives[order + 1](t)
        deviations.append(np.max(np.abs(approx - exact)) / max(1.0, np.max(np.abs(exact))))

    worst = float(max(deviations))
    threshold = max(ctx.tolerance, AD_TOLERANCE)
    return SuiteOutcome(worst < threshold, worst, [], f'max cut-off deviation {worst:.3e} (a={a:g})')


def psi_pullback_suite(ctx: SuiteContext) -> SuiteOutcome:
    coords = sample_chart_points(ctx.ds, ctx.config.samples.identity, ctx.rng('psi-pullback'))
    residuals = ctx.map(lambda c: hat_psi_pullback_residual(ctx.ds, ctx.point(c)), coords)
    return _worst(residuals, coords, ctx.tolerance, 'Psi pullback residual')


SUITES: Dict[str, Callable[[SuiteContext], SuiteOutcome]] = {
    'liouville': liouville_suite,
    'transversality': transversality_suite,
    'contact-volume': contact_volume_suite,
    'almost-stein': almost_stein_suite,
    'dh-theta': dh_theta_suite,
    'lie-derivative': lie_derivative_suite,
    'gray-field': gray_field_suite,
    'gray-deformation': gray_deformation_suite,
    'complex-structure': complex_structure_suite,
    'ad-consistency': ad_consistency_suite,
    'cutoff': cutoff_suite,
    'psi-pullback': psi_pullback_suite,
}


def record_from_outcome(name: str, outcome: SuiteOutcome) -> CheckRecord:
    return CheckRecord(
        name=name,
        status=PASS if outcome.passed else FAIL,
        max_residual=float(outcome.max_residual),
        statistic_name=outcome.statistic_name,
        statistic=float(outcome.statistic),
        witness=list(outcome.witness),
        message=outcome.message,
    )


def record_from_error(name: str, error: Exception) -> CheckRecord:
    residual = getattr(error, 'residual', getattr(error, 'drift', float('nan')))
    return CheckRecord(
        name=name,
        status=FAIL,
        max_residual=float(residual),
        witness=[float(x) for x in getattr(error, 'witness', [])],
        message=f'{type(error).__name__}: {error}',
    )


def run_check(
    name: str,
    fn: Callable[[], SuiteOutcome],
    trajectories: Optional[Dict[str, List[List[float]]]] = None,
) -> Tuple[CheckRecord, float]:
    """
    Runs one check, turning library errors into failed records; returns the record and wall time.

    When the error carries a trajectory and ``trajectories`` is given, the rows are
    kept there under the check name.
    """
    logging.info(f'Running check {name}')
    start = time.perf_counter()
    try:
        record = record_from_outcome(name, fn())
    except ContactKitError as e:
        logging.error(f'Check {name} failed: {e}')
        record = record_from_error(name, e)
        rows = getattr(e, 'trajectory', None)
        if rows and trajectories is not None:
            trajectories[name] = rows
    except Exception as e:
        logging.exception(f'Unexpected error in check {name}: {e}')
        record = record_from_error(name, e)
    elapsed = time.perf_counter() - start
    logging.log(15, f'{name}: {record.status} ({record.message}) in {elapsed:.2f}s')
    return record, elapsed


def run_suite(ctx: SuiteContext, name: str) -> Tuple[CheckRecord, float]:
    return run_check(name, lambda: SUITES[name](ctx), ctx.trajectories)


def double_equivalence_checks(
    ctx: SuiteContext,
    f0: Optional[ScalarField] = None,
    f1: Optional[ScalarField] = None,
) -> List[Tuple[CheckRecord, float]]:
    """
    Landing, conformality and commutation checks of the flow carrying
    ``{f_1^D = 0}`` onto ``{f_0^D = 0}``; defaults are ``f_0 = psi - c`` and the
    space's own cut-off equation ``f_1``.
    """
    ds = ctx.ds
    f0 = f0 or shifted_potential(ctx.model)
    f1 = f1 or ds.f
    source, target = doubled_equation(ds, f1), doubled_equation(ds, f0)
    coords = sample_surface_points(ds, ctx.config.samples.flow, ctx.rng('double-equiv'), f=f1)
    points = [ctx.point(c) for c in coords]
    state: Dict[str, List[FlowResult]] = {}

    def flows() -> List[FlowResult]:
        if 'results' not in state:
            state['results'] = double_equivalence_many(f0, f1, ds, points, ctx.ode_tol, record=ctx.record)
            ctx.keep_trajectories('double-equiv', state['results'])
        return state['results']

    def landing() -> SuiteOutcome:
        endpoints = np.stack([r.endpoint.coords for r in flows()])
        residuals = np.abs(target.evaluate_batch(endpoints))
        outcome = _worst(residuals, coords, ctx.surface_tol, 'landing residual |f_0^D|')
        outcome.statistic_name = 'max_drift'
        outcome.statistic = float(max(r.drift for r in flows()))
        return outcome

    def conformality() -> SuiteOutcome:
        maps = _transported(flows(), ds, 'psi_X^1')

        def residual(item):
            p, smooth_map = item
            return conformality_residual(smooth_map, ds, p, ctx.surface_tol, source, target)[1]

        residuals = ctx.map(residual, list(zip(points, maps)))
        return _worst(residuals, coords, CONFORMALITY_TOLERANCE, 'conformality residual')

    def commutation() -> SuiteOutcome:
        residuals = commutation_residual(f0, f1, ds, points, ctx.ode_tol)
        return _worst(residuals, coords, ctx.surface_tol, 'commutation residual with Psi')

    return [
        run_check('double-equiv-landing', landing, ctx.trajectories),
        run_check('double-equiv-conformality', conformality, ctx.trajectories),
        run_check('double-equiv-commutation', commutation, ctx.trajectories),
    ]
