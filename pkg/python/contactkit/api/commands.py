"""
The subcommands behind ``contactkit verify``, ``contactkit invariant`` and ``contactkit double-equiv``.

Each command takes a validated :class:`RunConfig` with a resolved seed, writes its
artifacts through an :class:`OutputWriter` and returns the :class:`Report`.
"""

import contextlib
import logging
import os
import time
from concurrent.futures import Executor, ThreadPoolExecutor
from typing import Iterator, Optional, Tuple

from contactkit import __version__
from contactkit.api.config import SEED_VARIABLE, RunConfig
from contactkit.api.report import FAIL, PASS, CheckRecord, Report
from contactkit.api.suites import SuiteContext, double_equivalence_checks, record_from_error, run_suite
from contactkit.errors import ConfigurationError, ContactKitError
from contactkit.invariant.matrices import MatrixLoop
from contactkit.invariant.winding import WindingReport, compute_winding
from contactkit.utils.output_writer import OutputWriter
from contactkit.weinstein.double import cutoff_equation, double
from contactkit.weinstein.models import make_model

REPORT_FILE = 'report.json'
STRUCTURE_TOLERANCE = 1e-6
CONSTANCY_TOLERANCE = 1e-8


def resolve_seed(config: RunConfig, seed: Optional[int] = None) -> int:
    """``--seed``, then the config's seed, then ``CONTACTKIT_SEED``, then 0."""
    if seed is not None:
        return seed
    if config.seed is not None:
        return config.seed
    value = os.environ.get(SEED_VARIABLE)
    if value:
        try:
            return int(value)
        except ValueError:
            raise ConfigurationError(f'{SEED_VARIABLE} must be an integer, got {value!r}.') from None
    return 0


@contextlib.contextmanager
def _executor(jobs: int) -> Iterator[Optional[Executor]]:
    if jobs <= 1:
        yield None
        return
    with ThreadPoolExecutor(max_workers=jobs) as executor:
        yield executor


def build_context(config: RunConfig, executor: Optional[Executor] = None) -> SuiteContext:
    model = make_model(config.model.name, config.model.n)
    seed = config.seed if config.seed is not None else 0
    ds = double(model, cutoff_equation(model))
    logging.info(f'Doubled {model.name} model, n={config.model.n}, dimension {ds.chart.dim}')
    return SuiteContext(config, model, ds, seed, executor)


def _new_report(command: str, config: RunConfig) -> Report:
    return Report(command=command, config=config, version=__version__)


def _finish(report: Report, writer: OutputWriter, ctx: SuiteContext) -> Report:
    names = ctx.ds.chart.coordinate_names
    for name, rows in ctx.trajectories.items():
        writer.write_trajectory(name, rows, names)
    writer.write_json(REPORT_FILE, report)
    status = 'all checks passed' if report.all_pass else 'some checks failed'
    logging.info(f'{report.command}: {status} ({len(report.checks)} checks)')
    return report


def cmd_verify(config: RunConfig, writer: Optional[OutputWriter] = None) -> Report:
    writer = writer or OutputWriter(config.output.directory)
    report = _new_report('verify', config)
    with _executor(config.jobs) as executor:
        ctx = build_context(config, executor)
        for name in config.checks:
            record, elapsed = run_suite(ctx, name)
            report.add(record, elapsed)
    return _finish(report, writer, ctx)


def winding_record(k: int, winding: WindingReport) -> CheckRecord:
    """Pass iff the winding equals ``k`` and the loop has the expected shape."""
    problems = []
    if winding.winding != k:
        problems.append(f'winding {winding.winding} != {k}')
    if winding.block_residual >= STRUCTURE_TOLERANCE:
        problems.append(f'lower-left block {winding.block_residual:.3e}')
    if winding.row_modulation_residual >= STRUCTURE_TOLERANCE:
        problems.append(f'row modulation {winding.row_modulation_residual:.3e}')
    if winding.radial_residual >= STRUCTURE_TOLERANCE:
        problems.append(f'radial constraint {winding.radial_residual:.3e}')
    if k == 0 and winding.constancy_residual >= CONSTANCY_TOLERANCE:
        problems.append(f'B_0 not constant ({winding.constancy_residual:.3e})')
    residual = max(winding.block_residual, winding.row_modulation_residual, winding.radial_residual)
    message = f'winding {winding.winding} with {winding.samples} samples, min |det| {winding.min_abs_det:.4e}'
    if problems:
        message += '; ' + ', '.join(problems)
    return CheckRecord(
        name=f'winding-k{k}',
        status=FAIL if problems else PASS,
        max_residual=residual,
        statistic_name='winding',
        statistic=float(winding.winding),
        message=message,
    )


def _winding_task(
    ctx: SuiteContext, k: int
) -> Tuple[Optional[WindingReport], Optional[MatrixLoop], Optional[Exception], float]:
    config = ctx.config
    start = time.perf_counter()
    try:
        winding, loop = compute_winding(
            ctx.ds,
            ctx.model,
            k,
            config.theta_samples,
            config.tolerances.ode,
            config.tolerances.surface,
        )
    except ContactKitError as e:
        logging.error(f'Invariant pipeline failed for k={k}: {e}')
        return None, None, e, time.perf_counter() - start
    except Exception as e:
        logging.exception(f'Unexpected error in the invariant pipeline for k={k}: {e}')
        return None, None, e, time.perf_counter() - start
    return winding, loop, None, time.perf_counter() - start


def cmd_invariant(config: RunConfig, writer: Optional[OutputWriter] = None) -> Report:
    writer = writer or OutputWriter(config.output.directory)
    report = _new_report('invariant', config)
    with _executor(config.jobs) as executor:
        ctx = build_context(config)
        if executor is None:
            results = [_winding_task(ctx, k) for k in config.k_list]
        else:
            results = list(executor.map(lambda k: _winding_task(ctx, k), config.k_list))

    for k, (winding, loop, error, elapsed) in zip(config.k_list, results):
        if error is not None:
            report.add(record_from_error(f'winding-k{k}', error), elapsed)
            rows = getattr(error, 'trajectory', None)
            if rows:
                ctx.trajectories[f'winding-k{k}'] = rows
            continue
        report.windings.append(winding)
        report.add(winding_record(k, winding), elapsed)
        writer.write_json(f'winding_k{k}.json', winding)
        writer.write_loop(loop, config.output.plot)
        logging.info(f'k={k}: winding {winding.winding}, radial residual {winding.radial_residual:.3e}')
    return _finish(report, writer, ctx)


def cmd_double_equiv(config: RunConfig, writer: Optional[OutputWriter] = None) -> Report:
    writer = writer or OutputWriter(config.output.directory)
    report = _new_report('double-equiv', config)
    with _executor(config.jobs) as executor:
        ctx = build_context(config, executor)
        for record, elapsed in double_equivalence_checks(ctx):
            report.add(record, elapsed)
    return _finish(report, writer, ctx)


COMMANDS = {
    'verify': cmd_verify,
    'invariant': cmd_invariant,
    'double-equiv': cmd_double_equiv,
}


def run_command(command: str, config: RunConfig, writer: Optional[OutputWriter] = None) -> Report:
    if command not in COMMANDS:
        raise ConfigurationError(f'Unknown command {command!r}, expected one of {", ".join(COMMANDS)}.')
    return COMMANDS[command](config, writer)


def exit_code(report: Report) -> int:
    return 0 if report.all_pass else 1
