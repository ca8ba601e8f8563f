"""Conservative semi-Lagrangian transport on structured grids.

1D spline remap kernels, a divergence-free finite-volume plane update,
and a 4D drift-kinetic benchmark driver built from them.
"""

from .advect1d import (LimiterConfig, bsl_advect, feet_implicit_midpoint,
                       flux_form_advect, flux_form_update, psm_advect,
                       psm_face_fluxes, psm_flux, sls_face_fluxes, sls_flux,
                       slope_ratio, upwind_flux)
from .diag import (DiagRecord, divergence_residual_max, growth_rate_fit,
                   l2_norm, mode_amplitude, slice_extrema, total_mass,
                   write_records)
from .driftkin import (BenchmarkSpec, SchemeConfig, Simulation, compute_dt,
                       equilibrium_distribution, init_distribution, make_grid,
                       transport_fv, transport_sl_split)
from .errors import (CflError, ConfigError, FeetError, FieldSolveError,
                     NumericalError)
from .field import (QuasiNeutralSolver, corner_average, discrete_divergence,
                    drift_velocities_at_z_centers, ez_at_centers,
                    velocity_from_potential, velocity_from_potential_spline)
from .fv2d import (PlaneState, SweptVolumes, fv_face_fluxes, fv_update_split,
                   fv_update_unsplit, swept_volume_residual, swept_volumes)
from .mesh import Axis, Bc, PhaseGrid4D, PolarGrid2D
from .spline import PrimitiveSpline, Spline1D

__version__ = "0.1.0"

__all__ = [
    "Axis", "Bc", "PolarGrid2D", "PhaseGrid4D",
    "Spline1D", "PrimitiveSpline",
    "LimiterConfig", "feet_implicit_midpoint", "bsl_advect", "psm_advect",
    "psm_flux", "psm_face_fluxes", "upwind_flux", "slope_ratio", "sls_flux",
    "sls_face_fluxes", "flux_form_update", "flux_form_advect",
    "QuasiNeutralSolver", "velocity_from_potential",
    "velocity_from_potential_spline", "discrete_divergence", "corner_average",
    "ez_at_centers", "drift_velocities_at_z_centers",
    "PlaneState", "SweptVolumes", "swept_volumes", "swept_volume_residual",
    "fv_face_fluxes", "fv_update_unsplit", "fv_update_split",
    "BenchmarkSpec", "SchemeConfig", "Simulation", "make_grid",
    "equilibrium_distribution", "init_distribution", "compute_dt",
    "transport_sl_split", "transport_fv",
    "DiagRecord", "total_mass", "l2_norm", "slice_extrema", "mode_amplitude",
    "growth_rate_fit", "divergence_residual_max", "write_records",
    "ConfigError", "NumericalError", "CflError", "FeetError",
    "FieldSolveError",
    "__version__",
]
