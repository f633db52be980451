"""Numerical laboratory for generalized Gauss curvature flow of convex surfaces.

The surface is carried by its support function u on the unit sphere and
evolves by du/dt = -f(K).
"""

from .flow import FlowState, RunConfig, rescale, run, stable_dt, step, theta_scan
from .geometry import (
    ConvexityLostError,
    CurvatureField,
    DeficitField,
    InvalidCenterError,
    SupportField,
    curvature_field,
    deficits,
    embed_surface,
    radii_about,
    steiner_point,
    write_obj,
)
from .grid import DerivativeBundle, Grid, ResolutionError, build_grid, differentiate, integrate
from .monitors import MonitorRow, MonitorSeries, record_row, sphere_residual, verify_monotone
from .speeds import ConditionReport, SpeedSpec, check_conditions, custom, eval_speed, log_power, power

__version__ = "0.1.0"
