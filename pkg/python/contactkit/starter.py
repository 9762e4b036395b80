"""
This is the main entry point for the contactkit command line.
"""

import argparse
import datetime
import logging
import sys
from typing import List, Optional, Sequence

from contactkit import __version__
from contactkit.api.commands import COMMANDS, exit_code, resolve_seed, run_command
from contactkit.api.config import SUITE_NAMES, RunConfig, load_config
from contactkit.errors import ConfigurationError, ContactKitError
from contactkit.utils.output_writer import OutputWriter
from contactkit.weinstein.models import MODELS

VERBOSE = 15

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2


def _int_list(text: str) -> List[int]:
    try:
        values = [int(part) for part in text.split(',') if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f'expected a comma separated list of integers, got {text!r}') from None
    if not values:
        raise argparse.ArgumentTypeError('expected at least one integer')
    return values


def _name_list(text: str) -> List[str]:
    return [part.strip() for part in text.split(',') if part.strip()]


class Starter:
    """
    Parses the start arguments, sets up logging and runs one subcommand.

    Start arguments override the values of a ``--config`` file, which in turn
    override the built-in defaults.
    """

    def __init__(
        self,
        argv: Optional[Sequence[str]] = None,
        log: bool = False,
        verbose: bool = False,
        log_level: int = logging.INFO,
    ):
        """
        Args:
            argv: Start arguments; ``sys.argv[1:]`` when omitted.
            log: If True a log file is written to the current directory.
            verbose: Verbose option for logging.
            log_level: Log level used unless verbose.
        """
        logging.addLevelName(VERBOSE, 'VERBOSE')

        self.args = self._handle_start_args(argv)

        self.write_log: bool = self.args.log or log
        self.verbose: bool = self.args.verbose or verbose
        self.log_level: int = self.args.log_level or log_level
        self._setup_debugger(self.verbose, self.log_level)

        self.command: str = self.args.command

    def _setup_debugger(self, verbose: bool, log_level: int):
        if verbose:
            level: int = logging.DEBUG
        else:
            level: int = log_level

        if self.write_log:
            now = datetime.datetime.now().strftime('%Y%m%d%H%M%S')
            logging.basicConfig(
                filename=f'log{now}',
                level=level,
                format='%(asctime)s: %(levelname)s - %(message)s',
            )
            logging.getLogger().addHandler(logging.StreamHandler())
        else:
            logging.basicConfig(level=level, format='%(asctime)s: %(levelname)s - %(message)s')
        logging.info(f'Starting contactkit {__version__} ({self.args.command})...')

    def build_config(self) -> RunConfig:
        """The run configuration after applying start arguments, seed fallback and validation."""
        args = self.args
        config = load_config(args.config)

        config.model.name = args.model if args.model is not None else config.model.name
        config.model.n = args.n if args.n is not None else config.model.n
        config.k_list = args.k if args.k is not None else config.k_list
        config.checks = args.checks if args.checks is not None else config.checks
        config.samples.identity = args.samples if args.samples is not None else config.samples.identity
        config.samples.flow = args.samples if args.samples is not None else config.samples.flow
        config.samples.volume = (
            args.volume_samples if args.volume_samples is not None else config.samples.volume
        )
        config.theta_samples = args.theta_samples if args.theta_samples is not None else config.theta_samples
        config.tolerances.ode_rel = args.tol_ode_rel if args.tol_ode_rel is not None else config.tolerances.ode_rel
        config.tolerances.ode_abs = args.tol_ode_abs if args.tol_ode_abs is not None else config.tolerances.ode_abs
        config.tolerances.surface = args.tol_surface if args.tol_surface is not None else config.tolerances.surface
        config.tolerances.identity = (
            args.tol_identity if args.tol_identity is not None else config.tolerances.identity
        )
        config.output.directory = args.out if args.out is not None else config.output.directory
        config.output.plot = args.plot or config.output.plot
        config.output.trajectories = args.dump_trajectories or config.output.trajectories
        config.jobs = args.jobs if args.jobs is not None else config.jobs
        config.seed = resolve_seed(config, args.seed)
        return config.validate()

    def run(self) -> int:
        """Runs the subcommand; returns 0 if every check passed, 1 on failures and 2 on configuration errors."""
        try:
            config = self.build_config()
        except ConfigurationError as e:
            logging.error(f'Configuration error: {e}')
            return EXIT_CONFIG

        logging.log(VERBOSE, f'Running {self.command} on the {config.model.name} model with seed {config.seed}')
        try:
            report = run_command(self.command, config, OutputWriter(config.output.directory))
        except ConfigurationError as e:
            logging.error(f'Configuration error: {e}')
            return EXIT_CONFIG
        except ContactKitError as e:
            logging.error(f'{self.command} aborted: {e}')
            return EXIT_FAILED
        return exit_code(report)

    @staticmethod
    def _common_arguments() -> argparse.ArgumentParser:
        parser = argparse.ArgumentParser(add_help=False)
        parser.add_argument('--help', action='help', help='Prints this help message.')
        parser.add_argument('--config', help='JSON configuration file. Start arguments override its fields.')
        parser.add_argument('--model', choices=MODELS, help="The Weinstein model. The default is 'flat'.")
        parser.add_argument('--n', type=int, help='Model dimension parameter. The default is 1.')
        parser.add_argument('--k', type=_int_list, help='Comma separated iterate indices. The default is 0,1,2,3,4.')
        parser.add_argument(
            '--checks',
            type=_name_list,
            help=f'Comma separated suites to run. Known suites: {", ".join(SUITE_NAMES)}.',
        )
        parser.add_argument('--samples', type=int, help='Sample points per identity and flow check.')
        parser.add_argument('--volume-samples', type=int, help='Sample points of the contact volume check.')
        parser.add_argument('--theta-samples', type=int, help='Initial number of loop samples. The default is 64.')
        parser.add_argument('--seed', type=int, help='Seed of the sample points. Falls back to CONTACTKIT_SEED.')
        parser.add_argument('--tol-ode-rel', type=float, help='Relative integrator tolerance.')
        parser.add_argument('--tol-ode-abs', type=float, help='Absolute integrator tolerance.')
        parser.add_argument('--tol-surface', type=float, help='On-surface tolerance.')
        parser.add_argument('--tol-identity', type=float, help='Threshold of the identity checks.')
        parser.add_argument('--out', help="Output directory. The default is 'contactkit_out'.")
        parser.add_argument('--plot', action='store_true', help='Also write SVG traces of the loops.')
        parser.add_argument(
            '--dump-trajectories',
            action='store_true',
            help='Write the flow histories of the flow checks as trajectory CSV files.',
        )
        parser.add_argument('--jobs', type=int, help='Number of worker threads. The default is 1.')
        parser.add_argument(
            '-l',
            '--log',
            action='store_true',
            help='If present a log file is written to the current directory.',
        )
        parser.add_argument(
            '-v',
            '--verbose',
            action='store_true',
            help='Verbose option for logging. This cancels out the log-level argument.',
        )
        parser.add_argument('-L', '--log-level', dest='log_level', help='Sets the log level.', type=int)
        return parser

    @classmethod
    def _handle_start_args(cls, argv: Optional[Sequence[str]] = None) -> argparse.Namespace:
        parser = argparse.ArgumentParser(
            prog='contactkit',
            description='Numerical verification of doubled Weinstein domains.',
            add_help=False,
        )
        parser.add_argument('--help', action='help', help='Prints this help message.')
        parser.add_argument('--version', action='version', version=f'%(prog)s {__version__}')
        subparsers = parser.add_subparsers(dest='command', required=True)
        common = cls._common_arguments()
        descriptions = {
            'verify': 'Runs the identity suites at random sample points.',
            'invariant': 'Computes the winding of det B_k for every requested k.',
            'double-equiv': 'Checks the flow between the doubles of psi - c and its cut-off.',
        }
        for name in COMMANDS:
            subparsers.add_parser(name, parents=[common], add_help=False, help=descriptions[name])
        return parser.parse_args(argv)


def main(argv: Optional[Sequence[str]] = None) -> int:
    return Starter(argv).run()


if __name__ == '__main__':
    sys.exit(main())
