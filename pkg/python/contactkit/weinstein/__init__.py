from contactkit.weinstein.checks import (
    almost_stein_check,
    complex_structure_residual,
    contact_volume_check,
    dh_theta_residual,
    doubled_liouville_residual,
    liouville_residual,
    taming_check,
)
from contactkit.weinstein.cutoff import CutoffSpec
from contactkit.weinstein.double import (
    DoubledSpace,
    Hypersurface,
    cutoff_equation,
    default_cutoff,
    double,
    lambda_t,
    sample_chart_points,
    sample_surface_points,
    shifted_potential,
)
from contactkit.weinstein.models import (
    MODELS,
    WeinsteinModel,
    make_flat_model,
    make_model,
    make_torus_model,
    rotation_family,
)

__all__ = [
    'MODELS',
    'CutoffSpec',
    'DoubledSpace',
    'Hypersurface',
    'WeinsteinModel',
    'almost_stein_check',
    'complex_structure_residual',
    'contact_volume_check',
    'cutoff_equation',
    'default_cutoff',
    'dh_theta_residual',
    'double',
    'doubled_liouville_residual',
    'lambda_t',
    'liouville_residual',
    'make_flat_model',
    'make_model',
    'make_torus_model',
    'rotation_family',
    'sample_chart_points',
    'sample_surface_points',
    'shifted_potential',
    'taming_check',
]
