"""
Winding of ``det B(theta)`` and the numerical invariant of ``Psi_c^k``.
"""

import logging
from dataclasses import dataclass, field
from typing import Optional, Tuple

import matplotlib
import numpy as np
from matplotlib.figure import Figure

from contactkit.errors import SingularMatrixError, UndersampledError, WindingInconsistencyError
from contactkit.flows.integrator import DEFAULT_TOLERANCES
from contactkit.flows.maps import psi_c
from contactkit.invariant.family import build_family, pushforward_family
from contactkit.invariant.matrices import DETERMINANT_TOLERANCE, MatrixLoop, stabilize_and_trivialize
from contactkit.weinstein.cutoff import CutoffSpec
from contactkit.weinstein.double import SURFACE_TOLERANCE, DoubledSpace
from contactkit.weinstein.models import WeinsteinModel

MAX_PHASE_JUMP = np.pi / 2
INTEGER_TOLERANCE = 0.05
MAX_THETA_SAMPLES = 4096


@dataclass
class WindingReport:
    class Meta:
        name = 'winding'

    k: int = field(default=0, metadata={'type': 'Element'})
    winding: int = field(default=0, metadata={'type': 'Element'})
    phase_total: float = field(default=0.0, metadata={'type': 'Element'})
    block_residual: float = field(default=0.0, metadata={'type': 'Element'})
    row_modulation_residual: float = field(default=0.0, metadata={'type': 'Element'})
    radial_residual: float = field(default=0.0, metadata={'type': 'Element'})
    s_k: float = field(default=0.0, metadata={'type': 'Element'})
    s_k_residual: float = field(default=0.0, metadata={'type': 'Element'})
    constancy_residual: float = field(default=0.0, metadata={'type': 'Element'})
    samples: int = field(default=0, metadata={'type': 'Element'})
    min_abs_det: float = field(default=0.0, metadata={'type': 'Element'})


def phase_increments(dets: np.ndarray) -> np.ndarray:
    """Principal-value phase steps between consecutive samples, closing step included."""
    return np.angle(np.roll(dets, -1) / dets)


def winding_number(loop: MatrixLoop) -> WindingReport:
    dets = loop.determinants
    magnitudes = np.abs(dets)
    worst = int(np.argmin(magnitudes))
    if magnitudes[worst] <= DETERMINANT_TOLERANCE:
        raise SingularMatrixError(f'det B vanishes at theta={loop.theta_samples[worst]:.6f}.', worst)

    steps = phase_increments(dets)
    jump = int(np.argmax(np.abs(steps)))
    if abs(steps[jump]) >= MAX_PHASE_JUMP:
        raise UndersampledError(
            f'Phase of det B jumps by {steps[jump]:.3f} after theta={loop.theta_samples[jump]:.6f}; '
            f'{len(loop)} samples are not enough.'
        )
    total = float(np.sum(steps))
    turns = total / (2.0 * np.pi)
    winding = int(round(turns))
    if abs(turns - winding) >= INTEGER_TOLERANCE:
        raise WindingInconsistencyError(f'Total phase {total:.6f} is {turns:.4f} turns, not an integer.')

    matrices = loop.matrices
    n = loop.size - 1
    block = 0.0
    if n >= 2:
        block = float(np.max(np.abs(matrices[:, n - 1 :, : n - 1])))
    row = matrices[:, n - 1, :] * np.exp(-1j * loop.k * loop.theta_samples)[:, None]
    row_modulation = float(np.max(np.abs(row - row[0])))
    constancy = float(np.max(np.abs(matrices - matrices[0])))

    radial = s_k = s_k_residual = 0.0
    if loop.x0 is not None and loop.radii is not None:
        expected = loop.k + 2.0 / loop.x0**2
        radial = float(np.max(np.abs(2.0 / loop.radii**2 - expected)))
        if loop.phi_coefficients is not None:
            s_k = float(np.mean(loop.phi_coefficients))
            s_k_residual = float(np.max(np.abs(loop.phi_coefficients - expected)))

    return WindingReport(
        k=loop.k,
        winding=winding,
        phase_total=total,
        block_residual=block,
        row_modulation_residual=row_modulation,
        radial_residual=radial,
        s_k=s_k,
        s_k_residual=s_k_residual,
        constancy_residual=constancy,
        samples=len(loop),
        min_abs_det=float(magnitudes[worst]),
    )


def compute_winding(
    ds: DoubledSpace,
    model: WeinsteinModel,
    k: int,
    theta_samples: int = 64,
    tol: Tuple[float, float] = DEFAULT_TOLERANCES,
    surface_tol: float = SURFACE_TOLERANCE,
    cutoff: Optional[CutoffSpec] = None,
    max_samples: int = MAX_THETA_SAMPLES,
) -> Tuple[WindingReport, MatrixLoop]:
    """
    Builds the family, pushes it forward ``k`` times and measures the winding.

    Undersampled or degenerate loops are retried with twice the samples until
    ``max_samples`` is exceeded.
    """
    samples = theta_samples
    while True:
        try:
            fam = build_family(ds, model, samples, cutoff)
            pushed = pushforward_family(fam, k, tol, surface_tol)
            loop = stabilize_and_trivialize(pushed, model)
            report = winding_number(loop)
        except (UndersampledError, SingularMatrixError) as e:
            if samples * 2 > max_samples:
                logging.error(f'Winding for k={k} failed at {samples} samples: {e}')
                raise
            samples *= 2
            logging.warning(f'Refining loop for k={k} to {samples} samples: {e}')
            continue
        logging.log(15, f'k={k}: winding {report.winding} with {samples} samples')
        return report, loop


def radial_constraint_check(
    ds: DoubledSpace,
    model: WeinsteinModel,
    k: int,
    tol: Tuple[float, float] = DEFAULT_TOLERANCES,
    surface_tol: float = SURFACE_TOLERANCE,
    cutoff: Optional[CutoffSpec] = None,
) -> float:
    """``|2 / r_k^2 - 2 / x0^2 - k|`` at ``theta = 0``."""
    fam = build_family(ds, model, 1, cutoff)
    if k == 0:
        return 0.0
    ix, iy = model.complex_index
    endpoint = psi_c(ds, fam.base_points[0], k, tol, surface_tol).endpoint.coords
    r_k = np.hypot(endpoint[ix], endpoint[iy])
    return float(abs(2.0 / r_k**2 - 2.0 / fam.x0**2 - k))


def plot_determinant_trace(loop: MatrixLoop, path: str):
    """Draws ``det B(theta)`` in the complex plane as an SVG."""
    dets = loop.determinants
    closed = np.append(dets, dets[:1])
    with matplotlib.rc_context({'svg.hashsalt': 'contactkit'}):
        fig = Figure(figsize=(4.5, 4.5))
        ax = fig.add_subplot()
        ax.plot(closed.real, closed.imag, lw=1.2)
        ax.plot([dets[0].real], [dets[0].imag], marker='o', ls='')
        ax.plot([0.0], [0.0], marker='+', color='k', ls='')
        ax.set_xlabel('Re det B')
        ax.set_ylabel('Im det B')
        ax.set_title(f'k = {loop.k}')
        ax.set_aspect('equal', adjustable='datalim')
        fig.savefig(path, format='svg', metadata={'Date': None})
    logging.info(f'Wrote determinant trace to {path}')
