import csv
import logging
import os
from typing import Any, List, Sequence

from contactkit.api.report import ReportSerializer
from contactkit.flows.integrator import write_trajectory_csv
from contactkit.invariant.matrices import MatrixLoop, matrix_loop_csv_rows
from contactkit.invariant.winding import plot_determinant_trace


class OutputWriter:
    """
    Writes run artifacts into one output directory.

    The directory is only created on the first write, so runs that stop before
    producing anything leave no trace on disk.
    """

    def __init__(self, directory: str):
        self.directory = directory
        self.serializer = ReportSerializer()
        self.written: List[str] = []

    def _create_directory(self):
        try:
            if not os.path.exists(self.directory):
                logging.info(f'Creating directory {self.directory}')
                os.makedirs(self.directory, exist_ok=True)
        except OSError as e:
            logging.error(f'Error creating output directory: {str(e)}')
            raise

    def path(self, name: str) -> str:
        self._create_directory()
        return os.path.join(self.directory, name)

    def _track(self, path: str):
        self.written.append(path)
        logging.debug(f'Wrote {path}')

    def write_json(self, name: str, obj: Any) -> str:
        path = self.path(name)
        with open(path, 'w') as f:
            f.write(self.serializer.render(obj))
        self._track(path)
        return path

    def write_csv(self, name: str, header: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
        path = self.path(name)
        with open(path, 'w', newline='') as f:
            writer = csv.writer(f)
            writer.writerow(header)
            writer.writerows(rows)
        self._track(path)
        return path

    def write_loop(self, loop: MatrixLoop, plot: bool = False) -> List[str]:
        """``loop_k{K}.csv`` and, when asked, ``loop_k{K}.svg``."""
        header, rows = matrix_loop_csv_rows(loop)
        paths = [self.write_csv(f'loop_k{loop.k}.csv', header, rows)]
        if plot:
            path = self.path(f'loop_k{loop.k}.svg')
            plot_determinant_trace(loop, path)
            self._track(path)
            paths.append(path)
        return paths

    def write_trajectory(
        self, name: str, rows: Sequence[Sequence[float]], coordinate_names: Sequence[str]
    ) -> str:
        """``trajectory_{name}.csv`` with columns ``t``, the coordinates and ``abs_fD``."""
        path = self.path(f'trajectory_{name}.csv')
        write_trajectory_csv(rows, path, coordinate_names)
        self._track(path)
        return path
