from contactkit.invariant.family import LagrangianFamily, build_family, pushforward_family, validate_family
from contactkit.invariant.matrices import (
    MatrixLoop,
    concatenate_loops,
    matrix_loop_csv_rows,
    stabilize_and_trivialize,
    synthetic_loop,
    trivialize,
)
from contactkit.invariant.winding import (
    WindingReport,
    compute_winding,
    plot_determinant_trace,
    radial_constraint_check,
    winding_number,
)

__all__ = [
    'LagrangianFamily',
    'MatrixLoop',
    'WindingReport',
    'build_family',
    'compute_winding',
    'concatenate_loops',
    'matrix_loop_csv_rows',
    'plot_determinant_trace',
    'pushforward_family',
    'radial_constraint_check',
    'stabilize_and_trivialize',
    'synthetic_loop',
    'trivialize',
    'validate_family',
    'winding_number',
]
