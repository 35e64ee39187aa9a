"""Numerical workbench for null and local-exact controls of a 1-D chemotaxis system."""

from .grids import DomainSpec, Grid, TimeGrid, make_grid, make_time_grid
from .pde import (
    Coefficients,
    Control,
    StateTrajectory,
    constant_coefficients,
    solve_adjoint,
    solve_forward_linear,
    solve_forward_nonlinear,
    state_norms,
)
from .weights import CarlemanWeights, build_beta, kappa, select_parameters, weight_fields
from .hum import HUMConfig, HUMResult, control_bound_report, hum_solve

__version__ = "0.1.0"
