"""
Loops of Lagrangian frames in the contact planes of ``DW x S^1``.

The base family lives on ``W_- x S^1`` (``s = -1``, plateau ``f = -1``):
``gamma(theta) = (q0, x0, -1, theta)`` with ``x0^2 = c - 3a - psi_F(q0)``, frame
``w_j(q0)`` of ``F`` and the extra section ``d/dtheta + (2 / x0) d/dy``.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from contactkit.adcalc.chart import ChartPoint, TangentVector
from contactkit.errors import ConfigurationError, FamilyInvalidError
from contactkit.flows.integrator import DEFAULT_TOLERANCES
from contactkit.flows.maps import psi_c_many
from contactkit.weinstein.cutoff import CutoffSpec
from contactkit.weinstein.double import SURFACE_TOLERANCE, DoubledSpace, default_cutoff
from contactkit.weinstein.models import WeinsteinModel

ALPHA_TOLERANCE = 1e-8
PUSHED_ALPHA_TOLERANCE = 1e-7
LAGRANGIAN_TOLERANCE = 1e-7
INDEPENDENCE_TOLERANCE = 1e-6


@dataclass(frozen=True, eq=False)
class LagrangianFamily:
    """
    Attributes:
        space: The doubled space the loop lives in.
        theta_samples: Loop parameters in [0, 2*pi).
        base_coords: Loop points, shape ``(S, dim)``.
        section_components: Frames, shape ``(S, dim, n)``; column ``j`` is ``X_j``.
        q0, x0, a, c: Construction data of the base family.
        k: Number of ``Psi_c`` iterates already applied.
    """

    space: DoubledSpace
    theta_samples: np.ndarray
    base_coords: np.ndarray
    section_components: np.ndarray
    q0: Tuple[float, ...]
    x0: float
    a: float
    c: float
    k: int = 0

    @property
    def base_points(self) -> List[ChartPoint]:
        return [ChartPoint(self.space.chart, c) for c in self.base_coords]

    @property
    def sections(self) -> List[List[TangentVector]]:
        result = []
        for point, frame in zip(self.base_points, self.section_components):
            result.append([TangentVector(point, frame[:, j]) for j in range(frame.shape[1])])
        return result

    def __len__(self) -> int:
        return len(self.theta_samples)


def validate_family(fam: LagrangianFamily, alpha_tol: float = ALPHA_TOLERANCE, lagrangian_tol: float = LAGRANGIAN_TOLERANCE):
    """
    Checks kernel membership, linear independence and the Lagrangian condition per sample.

    Tolerances are scaled by the size of the vectors involved when those exceed one.
    """
    form = fam.space.lambdaD
    alphas = form.coefficients_batch(fam.base_coords)
    omegas = form.exterior_derivative_batch(fam.base_coords)
    frames = fam.section_components
    norms = np.linalg.norm(frames, axis=1)

    values = np.abs(np.einsum('si,sij->sj', alphas, frames))
    scaled = values / np.maximum(1.0, norms)
    worst = np.unravel_index(np.argmax(scaled), scaled.shape)
    if scaled[worst] >= alpha_tol:
        raise FamilyInvalidError(
            f'Section {worst[1]} leaves ker(alpha) by {values[worst]:.3e}.', int(worst[0]), float(values[worst])
        )

    singular = np.linalg.svd(frames, compute_uv=False)[:, -1]
    worst_sample = int(np.argmin(singular))
    if singular[worst_sample] <= INDEPENDENCE_TOLERANCE:
        raise FamilyInvalidError(
            f'Sections are linearly dependent (smallest singular value {singular[worst_sample]:.3e}).',
            worst_sample,
            float(singular[worst_sample]),
        )

    pairings = np.abs(np.einsum('sia,sij,sjb->sab', frames, omegas, frames))
    scale = np.maximum(1.0, norms[:, :, None] * norms[:, None, :])
    scaled = pairings / scale
    worst = np.unravel_index(np.argmax(scaled), scaled.shape)
    if scaled[worst] >= lagrangian_tol:
        raise FamilyInvalidError(
            f'd alpha(X_{worst[1]}, X_{worst[2]}) = {pairings[worst]:.3e} is not zero.',
            int(worst[0]),
            float(pairings[worst]),
        )


def build_family(
    ds: DoubledSpace,
    model: WeinsteinModel,
    samples: int,
    cutoff: Optional[CutoffSpec] = None,
) -> LagrangianFamily:
    if samples < 1:
        raise ConfigurationError(f'Loop needs at least one sample, got {samples}.')
    cutoff = cutoff or default_cutoff(model)
    w, dim, n = model.chart.dim, ds.chart.dim, model.n
    ix, iy = model.complex_index

    base = np.zeros(w)
    base[: model.f_dim] = model.q0
    psi_F = model.psi_F.evaluate_batch(base[None, :])[0]
    if model.c - 3.0 * cutoff.a <= model.psi_min:
        raise ConfigurationError('The base loop needs c - 3a > min psi_F.')
    x0 = float(np.sqrt(model.c - 3.0 * cutoff.a - psi_F))
    base[ix] = x0

    thetas = 2.0 * np.pi * np.arange(samples) / samples
    coords = np.zeros((samples, dim))
    coords[:, :w] = base
    coords[:, ds.s_index] = -1.0
    coords[:, ds.theta_index] = thetas

    frame = np.zeros((dim, n))
    frame[: model.f_dim, : n - 1] = model.frame
    frame[ds.theta_index, n - 1] = 1.0
    frame[iy, n - 1] = 2.0 / x0
    sections = np.broadcast_to(frame, (samples, dim, n)).copy()

    fam = LagrangianFamily(
        space=ds,
        theta_samples=thetas,
        base_coords=coords,
        section_components=sections,
        q0=tuple(model.q0),
        x0=x0,
        a=cutoff.a,
        c=model.c,
    )
    validate_family(fam, ALPHA_TOLERANCE)
    logging.debug(f'Built Lagrangian family with {samples} samples, x0={x0:.6f}')
    return fam


def pushforward_family(
    fam: LagrangianFamily,
    k: int,
    tol: Tuple[float, float] = DEFAULT_TOLERANCES,
    surface_tol: float = SURFACE_TOLERANCE,
) -> LagrangianFamily:
    """``(Psi_c^k)_*`` of the family: image loop and Jacobian-transported sections."""
    if k < 0:
        raise ValueError(f'Iterate index must be non-negative, got k={k}.')
    if k == 0:
        return fam
    results = psi_c_many(fam.space, fam.base_points, k, tol, surface_tol)
    coords = np.stack([r.endpoint.coords for r in results])
    jacobians = np.stack([r.jacobian for r in results])
    pushed = LagrangianFamily(
        space=fam.space,
        theta_samples=fam.theta_samples,
        base_coords=coords,
        section_components=np.matmul(jacobians, fam.section_components),
        q0=fam.q0,
        x0=fam.x0,
        a=fam.a,
        c=fam.c,
        k=fam.k + k,
    )
    validate_family(pushed, PUSHED_ALPHA_TOLERANCE)
    logging.log(15, f'Pushed family forward by Psi_c^{k}, max steps {max(r.steps for r in results)}')
    return pushed
