"""
Coordinate charts, points and tangent vectors.
"""

from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from contactkit.errors import EvaluationError

TWO_PI = 2.0 * np.pi
POINT_TOLERANCE = 1e-12


def _reduce(coords: np.ndarray, mask: np.ndarray) -> np.ndarray:
    reduced = np.array(coords, dtype=float)
    reduced[..., mask] = np.mod(reduced[..., mask], TWO_PI)
    # np.mod may round up to exactly 2*pi for tiny negative angles
    reduced[..., mask] = np.where(reduced[..., mask] >= TWO_PI, 0.0, reduced[..., mask])
    return reduced


@dataclass(frozen=True)
class ChartSpec:
    dim: int
    periodic_mask: Tuple[bool, ...]
    coordinate_names: Tuple[str, ...] = ()

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError(f'Chart dimension must be positive, got {self.dim}.')
        if len(self.periodic_mask) != self.dim:
            raise ValueError(
                f'Periodic mask has {len(self.periodic_mask)} entries for a chart of dimension {self.dim}.'
            )
        if not self.coordinate_names:
            object.__setattr__(
                self, 'coordinate_names', tuple(f'u{i}' for i in range(self.dim))
            )
        elif len(self.coordinate_names) != self.dim:
            raise ValueError('One coordinate name per chart dimension is required.')

    @property
    def mask(self) -> np.ndarray:
        return np.array(self.periodic_mask, dtype=bool)

    def index(self, name: str) -> int:
        return self.coordinate_names.index(name)

    def reduce(self, coords: np.ndarray) -> np.ndarray:
        """Reduces periodic coordinates to [0, 2*pi); works on single points and (B, dim) batches."""
        return _reduce(coords, self.mask)

    def difference(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """``a - b`` with periodic components wrapped into [-pi, pi)."""
        delta = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
        mask = self.mask
        delta[..., mask] = np.mod(delta[..., mask] + np.pi, TWO_PI) - np.pi
        return delta

    def point(self, coords: Sequence[float]) -> 'ChartPoint':
        return ChartPoint(self, np.asarray(coords, dtype=float))

    def product(self, other: 'ChartSpec') -> 'ChartSpec':
        return ChartSpec(
            dim=self.dim + other.dim,
            periodic_mask=self.periodic_mask + other.periodic_mask,
            coordinate_names=self.coordinate_names + other.coordinate_names,
        )


@dataclass(frozen=True, eq=False)
class ChartPoint:
    chart: ChartSpec
    coords: np.ndarray

    def __post_init__(self):
        coords = np.asarray(self.coords, dtype=float).reshape(-1)
        if coords.shape[0] != self.chart.dim:
            raise ValueError(
                f'Point has {coords.shape[0]} coordinates, chart expects {self.chart.dim}.'
            )
        bad = np.flatnonzero(~np.isfinite(coords))
        if bad.size:
            name = self.chart.coordinate_names[bad[0]]
            raise EvaluationError(f'Non-finite coordinate {name} in chart point.', coords)
        coords = self.chart.reduce(coords)
        coords.setflags(write=False)
        object.__setattr__(self, 'coords', coords)

    def __eq__(self, other):
        if not isinstance(other, ChartPoint) or other.chart != self.chart:
            return NotImplemented
        return bool(
            np.all(np.abs(self.chart.difference(self.coords, other.coords)) <= POINT_TOLERANCE)
        )

    __hash__ = None

    def __getitem__(self, name: str) -> float:
        return float(self.coords[self.chart.index(name)])

    def distance(self, other: 'ChartPoint') -> float:
        """Max-norm distance respecting periodic coordinates."""
        return float(np.max(np.abs(self.chart.difference(self.coords, other.coords))))

    def as_list(self) -> list:
        return [float(x) for x in self.coords]


@dataclass(frozen=True, eq=False)
class TangentVector:
    base: ChartPoint
    components: np.ndarray

    def __post_init__(self):
        components = np.asarray(self.components, dtype=float).reshape(-1)
        if components.shape[0] != self.base.chart.dim:
            raise ValueError('Tangent vector size does not match its base chart.')
        if not np.all(np.isfinite(components)):
            raise EvaluationError('Non-finite tangent vector components.', self.base.coords)
        components.setflags(write=False)
        object.__setattr__(self, 'components', components)

    @classmethod
    def coordinate(cls, base: ChartPoint, index: int) -> 'TangentVector':
        components = np.zeros(base.chart.dim)
        components[index] = 1.0
        return cls(base, components)

    def _check_base(self, other: 'TangentVector'):
        if not isinstance(other, TangentVector):
            raise TypeError('Tangent vectors only combine with tangent vectors.')
        if other.base != self.base:
            raise ValueError('Tangent vectors live at different base points.')

    def __add__(self, other: 'TangentVector') -> 'TangentVector':
        self._check_base(other)
        return TangentVector(self.base, self.components + other.components)

    def __sub__(self, other: 'TangentVector') -> 'TangentVector':
        self._check_base(other)
        return TangentVector(self.base, self.components - other.components)

    def __mul__(self, scalar: float) -> 'TangentVector':
        return TangentVector(self.base, float(scalar) * self.components)

    __rmul__ = __mul__

    def __neg__(self) -> 'TangentVector':
        return TangentVector(self.base, -self.components)

    def norm(self) -> float:
        return float(np.linalg.norm(self.components))


@dataclass(frozen=True, eq=False)
class Covector:
    """A one-form evaluated at a point, stored by its coordinate components."""

    base: ChartPoint
    components: np.ndarray

    def __call__(self, vector: TangentVector) -> float:
        return float(np.dot(self.components, vector.components))

    def norm(self) -> float:
        return float(np.linalg.norm(self.components))
