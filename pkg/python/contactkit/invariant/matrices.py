"""
Complex matrix loops obtained from Lagrangian families.

A family in ``xi_D`` is stabilized by the Liouville direction ``Z^D`` and read
off in the complex trivialization of ``(T(DW x S^1), J^D)``: the frame
``w_j, J w_j`` on ``F``, ``x + iy`` on the ``C`` factor and ``s + i theta``.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from contactkit.errors import SingularMatrixError
from contactkit.invariant.family import LagrangianFamily
from contactkit.weinstein.models import WeinsteinModel

DETERMINANT_TOLERANCE = 1e-10


@dataclass(frozen=True, eq=False)
class MatrixLoop:
    """
    Attributes:
        theta_samples: Loop parameters, shape ``(S,)``.
        matrices: Complex matrices ``B(theta)``, shape ``(S, n + 1, n + 1)``.
        k: Iterate index of the family the loop came from.
        x0: Radius of the base loop, if the loop came from a family.
        radii: Radius on the ``C`` factor per sample.
        phi_coefficients: ``d/dphi``-coefficient of the last section per sample.
    """

    theta_samples: np.ndarray
    matrices: np.ndarray
    k: int = 0
    x0: Optional[float] = None
    radii: Optional[np.ndarray] = None
    phi_coefficients: Optional[np.ndarray] = None

    @property
    def size(self) -> int:
        return self.matrices.shape[-1]

    @property
    def determinants(self) -> np.ndarray:
        return np.linalg.det(self.matrices)

    def __len__(self) -> int:
        return len(self.theta_samples)


def trivialize(model: WeinsteinModel, vectors: np.ndarray) -> np.ndarray:
    """
    Complex coordinates of doubled-chart vectors.

    :param vectors: Real components, shape ``(..., dim)``.
    :return: Complex array of shape ``(..., n + 1)``.
    """
    vectors = np.asarray(vectors, dtype=float)
    ix, iy = model.complex_index
    w = model.chart.dim
    parts = [
        model.frame_coefficients(vectors[..., : model.f_dim]),
        (vectors[..., ix] + 1j * vectors[..., iy])[..., None],
        (vectors[..., w] + 1j * vectors[..., w + 1])[..., None],
    ]
    return np.concatenate(parts, axis=-1)


def stabilize_and_trivialize(
    fam: LagrangianFamily,
    model: WeinsteinModel,
    det_tol: float = DETERMINANT_TOLERANCE,
) -> MatrixLoop:
    """Matrices ``B(theta)`` with columns ``mu(X_1), ..., mu(X_n), mu(Z^D)``."""
    ds = fam.space
    zd = ds.ZD.evaluate_batch(fam.base_coords)
    columns = np.concatenate([fam.section_components, zd[:, :, None]], axis=2)
    matrices = trivialize(model, np.swapaxes(columns, 1, 2))
    matrices = np.swapaxes(matrices, 1, 2)

    dets = np.abs(np.linalg.det(matrices))
    worst = int(np.argmin(dets))
    if dets[worst] <= det_tol:
        raise SingularMatrixError(
            f'Stabilized frame degenerates at theta={fam.theta_samples[worst]:.6f} (|det|={dets[worst]:.3e}).',
            worst,
        )

    ix, iy = model.complex_index
    x, y = fam.base_coords[:, ix], fam.base_coords[:, iy]
    radii = np.hypot(x, y)
    last = fam.section_components[:, :, -1]
    phi = (x * last[:, iy] - y * last[:, ix]) / radii**2
    logging.debug(f'Trivialized loop k={fam.k}: min |det| {dets[worst]:.3e}')
    return MatrixLoop(fam.theta_samples, matrices, fam.k, fam.x0, radii, phi)


def synthetic_loop(exponents: Sequence[int], samples: int = 64) -> MatrixLoop:
    """``diag(exp(i e_1 theta), ..., exp(i e_m theta))``; its winding is ``sum(e_j)``."""
    thetas = 2.0 * np.pi * np.arange(samples) / samples
    phases = np.exp(1j * np.outer(thetas, np.asarray(exponents, dtype=float)))
    matrices = np.zeros((samples, len(exponents), len(exponents)), dtype=complex)
    index = np.arange(len(exponents))
    matrices[:, index, index] = phases
    return MatrixLoop(thetas, matrices, k=int(sum(exponents)))


def concatenate_loops(first: MatrixLoop, second: MatrixLoop) -> MatrixLoop:
    """
    Traverses ``first`` then ``second`` on one circle.

    Both loops must start at the same matrix, so the result is a closed loop.
    """
    if first.size != second.size:
        raise ValueError('Cannot concatenate loops of different matrix sizes.')
    if not np.allclose(first.matrices[0], second.matrices[0], atol=1e-8):
        raise ValueError('Loops must share their base matrix to be concatenated.')
    total = len(first) + len(second)
    thetas = 2.0 * np.pi * np.arange(total) / total
    matrices = np.concatenate([first.matrices, second.matrices], axis=0)
    return MatrixLoop(thetas, matrices, k=first.k + second.k)


def matrix_loop_csv_rows(loop: MatrixLoop) -> Tuple[List[str], List[List[str]]]:
    """Header and rows for a dump of the loop: ``theta``, ``det B``, then every entry row-major."""
    size = loop.size
    header = ['theta', 're_det', 'im_det']
    for i in range(size):
        for j in range(size):
            header += [f're_b{i}{j}', f'im_b{i}{j}']
    rows = []
    for theta, matrix, det in zip(loop.theta_samples, loop.matrices, loop.determinants):
        row = [repr(float(theta)), repr(float(det.real)), repr(float(det.imag))]
        for value in matrix.ravel():
            row += [repr(float(value.real)), repr(float(value.imag))]
        rows.append(row)
    return header, rows
