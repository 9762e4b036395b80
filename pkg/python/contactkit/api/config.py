"""
Run configuration records and their JSON binding.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional

from xsdata.exceptions import ParserError
from xsdata.formats.dataclass.context import XmlContext
from xsdata.formats.dataclass.parsers import JsonParser
from xsdata.formats.dataclass.parsers.config import ParserConfig

from contactkit.errors import ConfigurationError
from contactkit.weinstein.models import MODELS

SUITE_NAMES = (
    'liouville',
    'transversality',
    'contact-volume',
    'almost-stein',
    'dh-theta',
    'lie-derivative',
    'gray-field',
    'gray-deformation',
    'complex-structure',
    'ad-consistency',
    'cutoff',
    'psi-pullback',
)

SEED_VARIABLE = 'CONTACTKIT_SEED'


@dataclass
class ModelConfig:
    class Meta:
        name = 'model'

    name: str = field(
        default='flat',
        metadata={
            'type': 'Element',
        },
    )
    n: int = field(
        default=1,
        metadata={
            'type': 'Element',
        },
    )


@dataclass
class SampleCounts:
    class Meta:
        name = 'samples'

    identity: int = field(
        default=100,
        metadata={
            'type': 'Element',
        },
    )
    volume: int = field(
        default=1000,
        metadata={
            'type': 'Element',
        },
    )
    flow: int = field(
        default=100,
        metadata={
            'type': 'Element',
        },
    )


@dataclass
class Tolerances:
    class Meta:
        name = 'tolerances'

    ode_rel: float = field(
        default=1e-10,
        metadata={
            'type': 'Element',
        },
    )
    ode_abs: float = field(
        default=1e-12,
        metadata={
            'type': 'Element',
        },
    )
    surface: float = field(
        default=1e-8,
        metadata={
            'type': 'Element',
        },
    )
    identity: float = field(
        default=1e-7,
        metadata={
            'type': 'Element',
        },
    )

    @property
    def ode(self):
        return self.ode_rel, self.ode_abs


@dataclass
class OutputConfig:
    class Meta:
        name = 'output'

    directory: str = field(
        default='contactkit_out',
        metadata={
            'type': 'Element',
        },
    )
    plot: bool = field(
        default=False,
        metadata={
            'type': 'Element',
        },
    )
    trajectories: bool = field(
        default=False,
        metadata={
            'type': 'Element',
        },
    )


@dataclass
class RunConfig:
    class Meta:
        name = 'config'

    model: ModelConfig = field(
        default_factory=ModelConfig,
        metadata={
            'type': 'Element',
        },
    )
    checks: List[str] = field(
        default_factory=lambda: list(SUITE_NAMES),
        metadata={
            'type': 'Element',
        },
    )
    k_list: List[int] = field(
        default_factory=lambda: [0, 1, 2, 3, 4],
        metadata={
            'type': 'Element',
        },
    )
    samples: SampleCounts = field(
        default_factory=SampleCounts,
        metadata={
            'type': 'Element',
        },
    )
    theta_samples: int = field(
        default=64,
        metadata={
            'type': 'Element',
        },
    )
    tolerances: Tolerances = field(
        default_factory=Tolerances,
        metadata={
            'type': 'Element',
        },
    )
    seed: Optional[int] = field(
        default=None,
        metadata={
            'type': 'Element',
        },
    )
    output: OutputConfig = field(
        default_factory=OutputConfig,
        metadata={
            'type': 'Element',
        },
    )
    jobs: int = field(
        default=1,
        metadata={
            'type': 'Element',
        },
    )

    def validate(self) -> 'RunConfig':
        """Raises :class:`ConfigurationError` on the first invalid field, returns ``self`` otherwise."""
        if self.model.name not in MODELS:
            raise ConfigurationError(f'Unknown model {self.model.name!r}, expected one of {", ".join(MODELS)}.')
        _require_int(self.model.n, 'model.n', minimum=1)

        unknown = [name for name in self.checks if name not in SUITE_NAMES]
        if unknown:
            raise ConfigurationError(f'Unknown check suite(s): {", ".join(unknown)}.')

        for k in self.k_list:
            _require_int(k, 'k_list entry', minimum=0)

        _require_int(self.samples.identity, 'samples.identity', minimum=1)
        _require_int(self.samples.volume, 'samples.volume', minimum=1)
        _require_int(self.samples.flow, 'samples.flow', minimum=1)
        _require_int(self.theta_samples, 'theta_samples', minimum=4)
        _require_int(self.jobs, 'jobs', minimum=1)

        for name in ('ode_rel', 'ode_abs', 'surface', 'identity'):
            value = getattr(self.tolerances, name)
            if isinstance(value, bool) or not isinstance(value, (int, float)) or not value > 0.0:
                raise ConfigurationError(f'Tolerance {name} must be a positive number, got {value!r}.')

        if self.seed is not None:
            _require_int(self.seed, 'seed', minimum=0)
        if not isinstance(self.output.directory, str) or not self.output.directory:
            raise ConfigurationError('Output directory must be a non-empty path.')
        return self


def _require_int(value, name: str, minimum: int):
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigurationError(f'{name} must be an integer, got {value!r}.')
    if value < minimum:
        raise ConfigurationError(f'{name} must be at least {minimum}, got {value}.')


def _parser() -> JsonParser:
    return JsonParser(context=XmlContext(), config=ParserConfig(fail_on_unknown_properties=True))


def parse_config(text: str) -> RunConfig:
    """Binds a JSON document to :class:`RunConfig`; unknown keys are rejected."""
    try:
        return _parser().from_string(text, RunConfig)
    except (ParserError, ValueError, TypeError) as e:
        raise ConfigurationError(f'Invalid configuration: {e}') from e


def load_config(path: Optional[str]) -> RunConfig:
    if path is None:
        return RunConfig()
    try:
        with open(path, 'r') as f:
            text = f.read()
    except OSError as e:
        logging.error(f'Error reading config file: {str(e)}')
        raise ConfigurationError(f'Cannot read configuration {path}: {e}') from e
    config = parse_config(text)
    logging.info(f'Loaded configuration from {path}')
    return config
