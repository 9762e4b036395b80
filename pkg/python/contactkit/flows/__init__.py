from contactkit.flows.fields import TimeDependentField, double_equiv_field, gray_field
from contactkit.flows.integrator import (
    DEFAULT_TOLERANCES,
    FlowResult,
    integrate_batch,
    integrate_flow,
    integrate_flows,
    write_trajectory_csv,
)
from contactkit.flows.maps import (
    commutation_residual,
    conformality_residual,
    double_equivalence_many,
    double_equivalence_map,
    doubled_equation,
    hat_psi_pullback_residual,
    psi_c,
    psi_c_many,
    psi_c_map,
    psi_map,
    psi_rotation,
    psi_rotation_batch,
)

__all__ = [
    'DEFAULT_TOLERANCES',
    'FlowResult',
    'TimeDependentField',
    'commutation_residual',
    'conformality_residual',
    'double_equiv_field',
    'double_equivalence_many',
    'double_equivalence_map',
    'doubled_equation',
    'gray_field',
    'hat_psi_pullback_residual',
    'integrate_batch',
    'integrate_flow',
    'integrate_flows',
    'psi_c',
    'psi_c_many',
    'psi_c_map',
    'psi_map',
    'psi_rotation',
    'psi_rotation_batch',
    'write_trajectory_csv',
]
