"""
The cut-off regular equation and the doubling construction.

The doubled space lives on ``W x R_s x S^1_theta`` with

* ``lambda^D = lambda + 2 s dtheta``
* ``Z^D = Z + s d/ds``
* ``psi^D = psi + s^2``
* ``f^D = s^2 + f``
* ``J^D = J + (d/ds -> d/dtheta)``

and ``DW x S^1 = {f^D = 0}``.
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from contactkit.adcalc.chart import ChartPoint, ChartSpec
from contactkit.adcalc.fields import OneForm, ScalarField, VectorField
from contactkit.errors import ConfigurationError, OffSurfaceError, TransversalityError
from contactkit.weinstein.cutoff import CutoffSpec
from contactkit.weinstein.models import WeinsteinModel

SURFACE_TOLERANCE = 1e-8


def default_cutoff(model: WeinsteinModel) -> CutoffSpec:
    """``a = (c - min psi_F) / 4``."""
    return CutoffSpec(a=(model.c - model.psi_min) / 4.0)


def cutoff_equation(model: WeinsteinModel, spec: Optional[CutoffSpec] = None) -> ScalarField:
    """``f = chi(psi - c)``, a regular equation of ``M = {psi = c}``."""
    spec = spec or default_cutoff(model)
    if model.c - 3.0 * spec.a <= model.psi_min:
        raise ConfigurationError(
            f'Cut-off scale a={spec.a} leaves no plateau below c={model.c} (need c - 3a > min psi_F).'
        )
    psi, c = model.psi.evaluator, model.c
    logging.debug(f'Cut-off equation for {model.name} model with a={spec.a}')
    return ScalarField(model.chart, lambda x: spec(psi(x) - c), 'f')


def shifted_potential(model: WeinsteinModel) -> ScalarField:
    """The uncut regular equation ``psi - c``."""
    psi, c = model.psi.evaluator, model.c
    return ScalarField(model.chart, lambda x: psi(x) - c, 'psi-c')


@dataclass(frozen=True, eq=False)
class DoubledSpace:
    model: WeinsteinModel
    f: ScalarField
    chart: ChartSpec
    lambdaD: OneForm
    ZD: VectorField
    psiD: ScalarField
    fD: ScalarField
    JD: np.ndarray

    @property
    def w_dim(self) -> int:
        return self.model.chart.dim

    @property
    def s_index(self) -> int:
        return self.w_dim

    @property
    def theta_index(self) -> int:
        return self.w_dim + 1

    def lift(self, field: ScalarField) -> ScalarField:
        """Pulls a scalar field on ``W`` back to the doubled chart."""
        w, evaluator = self.w_dim, field.evaluator
        return ScalarField(self.chart, lambda x: evaluator(x[:w]), field.name)

    @property
    def h_theta(self) -> ScalarField:
        return self.model.h_theta

    def surface(self, tol: float = SURFACE_TOLERANCE) -> 'Hypersurface':
        """The doubled contact manifold ``{f^D = 0}``."""
        return Hypersurface(self, self.fD, tol)

    @property
    def transversality(self) -> ScalarField:
        """``df^D(Z^D) = 2 s^2 + df(Z)``."""
        return self.fD.derivative_along(self.ZD)


def doubled_chart(model: WeinsteinModel) -> ChartSpec:
    return model.chart.product(ChartSpec(2, (False, True), ('s', 'theta')))


def double(
    model: WeinsteinModel,
    f: ScalarField,
    samples: int = 256,
    rng: Optional[np.random.Generator] = None,
) -> DoubledSpace:
    """
    Assembles the doubled space of ``model`` along the regular equation ``f``.

    Args:
        model: The Weinstein model.
        f: Regular equation on ``W`` adapted to ``Z``.
        samples: Number of points of ``{f^D = 0}`` on which transversality is checked.
        rng: Source of the sample points; a fixed seed is used when omitted.
    """
    chart = doubled_chart(model)
    w = model.chart.dim
    lam, Z, psi, f_eval = model.lambda_.evaluator, model.Z.evaluator, model.psi.evaluator, f.evaluator

    def lambdaD(x, v):
        return lam(x[:w], v[:w]) + 2.0 * x[w] * v[w + 1]

    def ZD(x):
        return list(Z(x[:w])) + [x[w], 0.0]

    def psiD(x):
        return psi(x[:w]) + x[w] * x[w]

    def fD(x):
        return x[w] * x[w] + f_eval(x[:w])

    JD = np.zeros((w + 2, w + 2))
    JD[:w, :w] = model.J
    JD[w + 1, w] = 1.0
    JD[w, w + 1] = -1.0

    ds = DoubledSpace(
        model=model,
        f=f,
        chart=chart,
        lambdaD=OneForm(chart, lambdaD, 'lambdaD'),
        ZD=VectorField(chart, ZD, 'ZD'),
        psiD=ScalarField(chart, psiD, 'psiD'),
        fD=ScalarField(chart, fD, 'fD'),
        JD=JD,
    )

    if samples > 0:
        rng = rng if rng is not None else np.random.default_rng(0)
        points = sample_surface_points(ds, samples, rng)
        values = ds.transversality.evaluate_batch(points)
        worst = int(np.argmin(values))
        if not values[worst] > 0.0:
            raise TransversalityError(
                f'df^D(Z^D) = {values[worst]:.3e} <= 0 on the zero set of f^D.',
                points[worst],
                values[worst],
            )
        logging.debug(f'Transversality holds on {samples} samples, min df^D(Z^D) = {values[worst]:.4f}')
    return ds


def lambda_t(ds: DoubledSpace, h: ScalarField, t: float) -> OneForm:
    """``lambda^D_t = lambda + (2 s + t h) dtheta``."""
    w, base, h_eval = ds.w_dim, ds.lambdaD.evaluator, h.evaluator

    def form(x, v):
        return base(x, v) + t * h_eval(x[:w]) * v[w + 1]

    return OneForm(ds.chart, form, f'lambdaD_{t:g}')


@dataclass(frozen=True, eq=False)
class Hypersurface:
    """A level set ``{equation = 0}`` in a doubled chart, with its on-surface tolerance."""

    ambient: DoubledSpace
    equation: ScalarField
    on_surface_tol: float = SURFACE_TOLERANCE

    def residual(self, p: ChartPoint) -> float:
        return abs(self.equation(p))

    def check(self, p: ChartPoint) -> ChartPoint:
        residual = self.residual(p)
        if residual >= self.on_surface_tol:
            raise OffSurfaceError(
                f'Point is {residual:.3e} away from {self.equation.name or "the hypersurface"}.',
                p.coords,
                residual,
            )
        return p

    def check_batch(self, coords: np.ndarray) -> np.ndarray:
        """Raises for the worst point of a ``(B, dim)`` batch; returns the residuals."""
        residuals = np.abs(self.equation.evaluate_batch(coords))
        if residuals.size:
            worst = int(np.argmax(residuals))
            if residuals[worst] >= self.on_surface_tol:
                raise OffSurfaceError(
                    f'Point {worst} is {residuals[worst]:.3e} away from '
                    f'{self.equation.name or "the hypersurface"}.',
                    coords[worst],
                    residuals[worst],
                )
        return residuals


def sample_surface_points(
    ds: DoubledSpace,
    count: int,
    rng: np.random.Generator,
    f: Optional[ScalarField] = None,
) -> np.ndarray:
    """
    Random points of ``{s^2 + f = 0}``: a point of ``{psi <= c}``, then ``s = +-sqrt(-f)``.

    ``f`` defaults to the space's own regular equation; any regular equation of
    ``M = {psi = c}`` with ``f <= 0`` exactly on ``{psi <= c}`` works.
    """
    f = f or ds.f
    model = ds.model
    w = model.chart.dim
    points = np.zeros((count, w + 2))
    points[:, :w] = model.sample_sublevel(rng, count, model.c)
    values = f.evaluate_batch(points[:, :w])
    signs = np.where(rng.uniform(size=count) < 0.5, -1.0, 1.0)
    points[:, w] = signs * np.sqrt(np.maximum(-values, 0.0))
    points[:, w + 1] = rng.uniform(0.0, 2.0 * np.pi, count)
    return points


def sample_chart_points(
    ds: DoubledSpace,
    count: int,
    rng: np.random.Generator,
    s_range=(0.25, 1.5),
) -> np.ndarray:
    """Random ambient points with ``|s|`` in ``s_range`` and ``psi <= 2c``."""
    model = ds.model
    w = model.chart.dim
    points = np.zeros((count, w + 2))
    points[:, :w] = model.sample_sublevel(rng, count, 2.0 * model.c)
    signs = np.where(rng.uniform(size=count) < 0.5, -1.0, 1.0)
    points[:, w] = signs * rng.uniform(s_range[0], s_range[1], count)
    points[:, w + 1] = rng.uniform(0.0, 2.0 * np.pi, count)
    return points
