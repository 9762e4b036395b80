"""
Pointwise structural checks: Liouville, almost complex, taming, almost-Stein and contact.
"""

import math
from typing import Optional

import numpy as np
from pfapack import pfaffian as pf

from contactkit.adcalc.calculus import coefficients, level_set_frame
from contactkit.adcalc.chart import ChartPoint
from contactkit.adcalc.fields import OneForm, ScalarField, VectorField
from contactkit.errors import CriticalPointError
from contactkit.weinstein.double import SURFACE_TOLERANCE, DoubledSpace, lambda_t
from contactkit.weinstein.models import WeinsteinModel


def liouville_residual(form: OneForm, Z: VectorField, p: ChartPoint) -> float:
    """``max_j |d(form)(Z, e_j) - form(e_j)|``."""
    W = form.exterior_derivative_matrix(p)
    return float(np.max(np.abs(Z(p).components @ W - coefficients(form, p))))


def doubled_liouville_residual(ds: DoubledSpace, h: ScalarField, t: float, p: ChartPoint) -> float:
    """Liouville residual of ``Z^D`` for ``lambda^D_t``."""
    return liouville_residual(lambda_t(ds, h, t), ds.ZD, p)


def complex_structure_residual(J: np.ndarray) -> float:
    """``max |J^2 + id|``."""
    return float(np.max(np.abs(J @ J + np.eye(J.shape[0]))))


def taming_check(form: OneForm, J: np.ndarray, p: ChartPoint, rng: np.random.Generator, count: int = 16) -> float:
    """
    Minimum of ``d(form)(u, J u) / |u|^2`` over random unit directions ``u``.

    Positive for a taming ``J``.
    """
    W = form.exterior_derivative_matrix(p)
    directions = rng.standard_normal((count, p.chart.dim))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    values = np.einsum('bi,ij,bj->b', directions, W, directions @ J.T)
    return float(np.min(values))


def almost_stein_check(model: WeinsteinModel, p: ChartPoint) -> float:
    """``max_j |lambda(e_j) - kappa (-d psi o J)(e_j)|``."""
    dc_psi = -(model.psi.gradient(p) @ model.J)
    return float(np.max(np.abs(coefficients(model.lambda_, p) - model.kappa * dc_psi)))


def dh_theta_residual(model: WeinsteinModel, p: ChartPoint) -> float:
    """``|dh_theta(Z) - h_theta|`` for ``h_theta = lambda(X_theta)``."""
    h = model.h_theta
    return abs(h.derivative_along(model.Z)(p) - h(p))


def contact_volume_check(
    ds: DoubledSpace,
    p: ChartPoint,
    tol: float = SURFACE_TOLERANCE,
    basis: Optional[np.ndarray] = None,
) -> float:
    """
    ``alpha ^ (d alpha)^n`` on the oriented level-set basis at ``p``.

    Uses ``alpha ^ (d alpha)^n (e_1, ..., e_2n+1) = n! Pf([[0, a], [-a^T, Omega]])``
    with ``a_i = alpha(e_i)`` and ``Omega_ij = d alpha(e_i, e_j)``.

    :param basis: Optional ``(dim, 2n+1)`` tangent frame to use instead of the
        level-set basis; a degenerate frame is rejected.
    """
    if basis is None:
        basis = level_set_frame(ds.fD, p, tol)
    else:
        basis = np.asarray(basis, dtype=float)
        gram = basis.T @ basis
        if basis.shape != (p.chart.dim, p.chart.dim - 1) or abs(np.linalg.det(gram)) < 1e-20:
            raise CriticalPointError('Degenerate tangent basis for the contact volume.', p.coords)
    a = basis.T @ coefficients(ds.lambdaD, p)
    omega = basis.T @ ds.lambdaD.exterior_derivative_matrix(p) @ basis
    omega = (omega - omega.T) / 2.0

    size = basis.shape[1] + 1
    block = np.zeros((size, size))
    block[0, 1:] = a
    block[1:, 0] = -a
    block[1:, 1:] = omega
    return float(math.factorial(ds.model.n) * np.real(pf.pfaffian(block)))
