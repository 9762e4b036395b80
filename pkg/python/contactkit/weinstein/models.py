"""
Built-in Weinstein models on ``W = F x C``.

Both models use ``lambda = lambda_F + (x dy - y dx)`` on the stabilizing
factor, ``Z = Z_F + (x d/dx + y d/dy) / 2`` and ``psi = psi_F + x^2 + y^2`` with
the regular value ``c = 1``. With ``J d/dx = d/dy`` on the complex factor one
has ``lambda = -(1/2) d^C psi``, i.e. almost-Stein normalization ``kappa = 1/2``.

Torus model: ``F = T^* T^n`` with ``lambda_F = sum p_i dq_i`` (so
``omega_F = sum dp_i ^ dq_i``), Liouville field ``Z_F = sum p_i d/dp_i`` and
``psi_F = sum p_i^2``. Its complex structure is ``J_F d/dp_i = d/dq_i``, which
again gives ``lambda_F = -(1/2) d^C psi_F``.
"""

import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from contactkit.adcalc.chart import ChartSpec
from contactkit.adcalc.dual import cos, sin
from contactkit.adcalc.fields import OneForm, ScalarField, SmoothMap, VectorField
from contactkit.errors import ConfigurationError

MODELS = ('flat', 'torus')


@dataclass(frozen=True, eq=False)
class WeinsteinModel:
    """
    A Weinstein model together with the auxiliary data the verification needs.

    Attributes:
        chart: Coordinates of ``W = F x C``; the complex factor comes last.
        n: Complex dimension of ``F x C``.
        f_dim: Real dimension of ``F`` (``2n - 2``).
        J: Almost complex structure as a constant matrix on coordinate components.
        q0: Coordinates in ``F`` of a zero of ``Z_F`` minimizing ``psi_F``.
        frame: Columns ``w_1 .. w_{n-1}`` spanning ``(TF, J_F)`` over C.
        radial: Coordinates whose squares sum up to ``psi``.
        angular: Periodic coordinates of ``F``.
    """

    name: str
    chart: ChartSpec
    lambda_: OneForm
    Z: VectorField
    psi: ScalarField
    psi_F: ScalarField
    J: np.ndarray
    c: float
    n: int
    kappa: float
    psi_min: float
    q0: Tuple[float, ...]
    frame: np.ndarray
    radial: Tuple[int, ...]
    angular: Tuple[int, ...]

    @property
    def f_dim(self) -> int:
        return 2 * self.n - 2

    @property
    def complex_index(self) -> Tuple[int, int]:
        """Chart indices of ``(x, y)`` on the last complex factor."""
        return self.chart.dim - 2, self.chart.dim - 1

    @property
    def rotation_generator(self) -> VectorField:
        """``X_theta = -y d/dx + x d/dy`` on the last complex factor."""
        ix, iy = self.complex_index
        dim = self.chart.dim

        def generator(x):
            out = [0.0] * dim
            out[ix] = -x[iy]
            out[iy] = x[ix]
            return out

        return VectorField(self.chart, generator, 'X_theta')

    @property
    def h_theta(self) -> ScalarField:
        """``lambda(X_theta)``, evaluated through the model's own one-form."""
        form, generator = self.lambda_.evaluator, self.rotation_generator.evaluator
        return ScalarField(self.chart, lambda x: form(x, generator(x)), 'h_theta')

    def frame_coefficients(self, vectors: np.ndarray) -> np.ndarray:
        """
        Complex coordinates of the ``F``-part of vectors in the frame ``w_j, J w_j``.

        :param vectors: Real components on ``F``, shape ``(..., f_dim)``.
        :return: Complex array of shape ``(..., n - 1)``.
        """
        k = self.n - 1
        if k == 0:
            return np.zeros(np.shape(vectors)[:-1] + (0,), dtype=complex)
        J_F = self.J[: self.f_dim, : self.f_dim]
        basis = np.concatenate([self.frame, J_F @ self.frame], axis=1)
        solution = np.linalg.solve(basis, np.moveaxis(np.asarray(vectors), -1, 0).reshape(self.f_dim, -1))
        solution = solution.reshape((self.f_dim,) + np.shape(vectors)[:-1])
        solution = np.moveaxis(solution, 0, -1)
        return solution[..., :k] + 1j * solution[..., k:]

    def sample_sublevel(self, rng: np.random.Generator, count: int, level: float) -> np.ndarray:
        """Uniform points of ``{psi <= level}`` (periodic coordinates uniform on the circle)."""
        coords = np.zeros((count, self.chart.dim))
        k = len(self.radial)
        directions = rng.standard_normal((count, k))
        directions /= np.linalg.norm(directions, axis=1, keepdims=True)
        radii = np.sqrt(level) * rng.uniform(0.0, 1.0, count) ** (1.0 / k)
        coords[:, list(self.radial)] = directions * radii[:, None]
        if self.angular:
            coords[:, list(self.angular)] = rng.uniform(0.0, 2.0 * np.pi, (count, len(self.angular)))
        return coords


def _standard_J(dim: int) -> np.ndarray:
    J = np.zeros((dim, dim))
    for i in range(0, dim, 2):
        J[i + 1, i] = 1.0
        J[i, i + 1] = -1.0
    return J


def _sum_of_squares(indices):
    def psi(x):
        return sum(x[i] * x[i] for i in indices)

    return psi


def make_flat_model(n: int) -> WeinsteinModel:
    if n < 1:
        raise ConfigurationError(f'Model dimension must be at least 1, got n={n}.')
    dim = 2 * n
    names = tuple(name for i in range(1, n + 1) for name in (f'x{i}', f'y{i}'))
    chart = ChartSpec(dim, (False,) * dim, names)

    def lambda_(x, v):
        return sum(x[2 * i] * v[2 * i + 1] - x[2 * i + 1] * v[2 * i] for i in range(n))

    def Z(x):
        return [0.5 * xi for xi in x]

    psi = _sum_of_squares(range(dim))
    psi_F = _sum_of_squares(range(dim - 2))
    frame = np.eye(dim - 2)[:, 0::2]

    logging.debug(f'Built flat model with n={n}')
    return WeinsteinModel(
        name='flat',
        chart=chart,
        lambda_=OneForm(chart, lambda_, 'lambda'),
        Z=VectorField(chart, Z, 'Z'),
        psi=ScalarField(chart, psi, 'psi'),
        psi_F=ScalarField(chart, psi_F, 'psi_F'),
        J=_standard_J(dim),
        c=1.0,
        n=n,
        kappa=0.5,
        psi_min=0.0,
        q0=(0.0,) * (dim - 2),
        frame=frame,
        radial=tuple(range(dim)),
        angular=(),
    )


def make_torus_model(n: int) -> WeinsteinModel:
    """``T^* T^n x C``; the resulting model has complex dimension ``n + 1``."""
    if n < 1:
        raise ConfigurationError(f'Torus dimension must be at least 1, got n={n}.')
    dim = 2 * n + 2
    names = (
        tuple(f'q{i}' for i in range(1, n + 1))
        + tuple(f'p{i}' for i in range(1, n + 1))
        + ('x', 'y')
    )
    chart = ChartSpec(dim, (True,) * n + (False,) * (n + 2), names)
    ix, iy = dim - 2, dim - 1

    def lambda_(x, v):
        fiber = sum(x[n + i] * v[i] for i in range(n))
        return fiber + x[ix] * v[iy] - x[iy] * v[ix]

    def Z(x):
        return [0.0] * n + [x[n + i] for i in range(n)] + [0.5 * x[ix], 0.5 * x[iy]]

    J = np.zeros((dim, dim))
    for i in range(n):
        J[i, n + i] = 1.0  # J d/dp_i = d/dq_i
        J[n + i, i] = -1.0  # J d/dq_i = -d/dp_i
    J[iy, ix] = 1.0
    J[ix, iy] = -1.0

    logging.debug(f'Built torus model with n={n}')
    return WeinsteinModel(
        name='torus',
        chart=chart,
        lambda_=OneForm(chart, lambda_, 'lambda'),
        Z=VectorField(chart, Z, 'Z'),
        psi=ScalarField(chart, _sum_of_squares(range(n, dim)), 'psi'),
        psi_F=ScalarField(chart, _sum_of_squares(range(n, 2 * n)), 'psi_F'),
        J=J,
        c=1.0,
        n=n + 1,
        kappa=0.5,
        psi_min=0.0,
        q0=(0.0,) * (2 * n),
        frame=np.eye(2 * n)[:, :n],
        radial=tuple(range(n, dim)),
        angular=tuple(range(n)),
    )


def make_model(name: str, n: int) -> WeinsteinModel:
    if name == 'flat':
        return make_flat_model(n)
    if name == 'torus':
        return make_torus_model(n)
    raise ConfigurationError(f'Unknown model {name!r}, expected one of {", ".join(MODELS)}.')


def rotation_family(model: WeinsteinModel, theta: float) -> SmoothMap:
    """The fiber rotation ``phi_theta`` of the last complex factor by a fixed angle."""
    ix, iy = model.complex_index

    def rotate(x):
        out = list(x)
        c, s = cos(theta), sin(theta)
        out[ix] = c * x[ix] - s * x[iy]
        out[iy] = s * x[ix] + c * x[iy]
        return out

    return SmoothMap(model.chart, model.chart, rotate, name=f'phi_{theta:g}')

