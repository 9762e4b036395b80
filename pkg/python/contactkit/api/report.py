"""
Machine-readable run reports, rendered to JSON with xsdata.
"""

import contextlib
from dataclasses import dataclass, field
from typing import Any, Callable, Iterator, List

from xsdata.formats.dataclass.serializers import JsonSerializer
from xsdata.formats.dataclass.serializers.config import SerializerConfig

from contactkit.api.config import RunConfig
from contactkit.invariant.winding import WindingReport

PASS = 'pass'
FAIL = 'fail'


@dataclass
class CheckRecord:
    class Meta:
        name = 'check'

    name: str = field(
        default='',
        metadata={
            'type': 'Element',
        },
    )
    status: str = field(
        default=PASS,
        metadata={
            'type': 'Element',
        },
    )
    max_residual: float = field(
        default=0.0,
        metadata={
            'type': 'Element',
        },
    )
    statistic_name: str = field(
        default='',
        metadata={
            'type': 'Element',
        },
    )
    statistic: float = field(
        default=0.0,
        metadata={
            'type': 'Element',
        },
    )
    witness: List[float] = field(
        default_factory=list,
        metadata={
            'type': 'Element',
        },
    )
    message: str = field(
        default='',
        metadata={
            'type': 'Element',
        },
    )

    @property
    def passed(self) -> bool:
        return self.status == PASS


@dataclass
class TimingRecord:
    class Meta:
        name = 'timing'

    name: str = field(
        default='',
        metadata={
            'type': 'Element',
        },
    )
    wall_time: float = field(
        default=0.0,
        metadata={
            'type': 'Element',
        },
    )


@dataclass
class Report:
    """
    Result of one subcommand.

    Everything except ``timing`` depends only on the configuration and the seed.
    """

    class Meta:
        name = 'report'

    command: str = field(
        default='',
        metadata={
            'type': 'Element',
        },
    )
    config: RunConfig = field(
        default_factory=RunConfig,
        metadata={
            'type': 'Element',
        },
    )
    version: str = field(
        default='',
        metadata={
            'type': 'Element',
        },
    )
    all_pass: bool = field(
        default=True,
        metadata={
            'type': 'Element',
        },
    )
    checks: List[CheckRecord] = field(
        default_factory=list,
        metadata={
            'type': 'Element',
        },
    )
    windings: List[WindingReport] = field(
        default_factory=list,
        metadata={
            'type': 'Element',
        },
    )
    timing: List[TimingRecord] = field(
        default_factory=list,
        metadata={
            'type': 'Element',
        },
    )

    def add(self, record: CheckRecord, wall_time: float):
        self.checks.append(record)
        self.timing.append(TimingRecord(name=record.name, wall_time=wall_time))
        self.all_pass = self.all_pass and record.passed


class ReportSerializer:
    """
    Serialize reports and their records to JSON text.
    """

    def __init__(self):
        self.serializer = JsonSerializer(config=SerializerConfig(pretty_print=True))

    @contextlib.contextmanager
    def encode_context(self) -> Iterator[Callable[[Any], str]]:
        """
        A context manager that yields a function for encoding records as JSON text.
        """

        def encode(obj: Any) -> str:
            return self.serializer.render(obj) + '\n'

        yield encode

    def render(self, obj: Any) -> str:
        with self.encode_context() as encode:
            return encode(obj)
