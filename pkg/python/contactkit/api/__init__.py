from contactkit.api.config import SUITE_NAMES, RunConfig, load_config, parse_config
from contactkit.api.report import CheckRecord, Report, ReportSerializer, TimingRecord

__all__ = [
    'CheckRecord',
    'Report',
    'ReportSerializer',
    'RunConfig',
    'SUITE_NAMES',
    'TimingRecord',
    'load_config',
    'parse_config',
]
