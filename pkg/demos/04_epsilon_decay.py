"""How far the terminal state drops as the penalty parameter shrinks.

Each row solves the same null-control problem with a smaller eps.  The
terminal norm decreases strictly; its log-log slope near one half is the
numerical signature of controllability for the penalized family.
"""

import numpy as np

from kscontrol import DomainSpec, constant_coefficients, make_grid, make_time_grid
from kscontrol.diagnostics import decay_study
from kscontrol.hum import HUMConfig
from kscontrol.weights import build_beta, select_parameters, weight_fields

domain = DomainSpec(0.0, 1.0, omega=(0.3, 0.7), omega_prime=(0.4, 0.6), T=0.5)
grid, tgrid = make_grid(domain, 128), make_time_grid(domain, 256)
coeffs = constant_coefficients(grid, tgrid, a=0.5, b=0.2)

beta = build_beta(domain, grid)
lam, s = select_parameters(beta, 0.5, 0.2, tgrid, mode="practice", exponent_budget=4.0)
cfg = HUMConfig(weights=weight_fields(beta, lam, s, tgrid), epsilon=1e-4, cg_tol=1e-10)

xi = (grid.x - grid.x_lo) / (grid.x_hi - grid.x_lo)
y0 = 0.5 + np.cos(np.pi * xi)
z0 = 0.5 * np.cos(2.0 * np.pi * xi)

study = decay_study([1e-4, 1e-5, 1e-6, 1e-7, 1e-8], y0, z0, cfg, coeffs,
                    domain, grid, tgrid)
print(f"{'epsilon':>10} {'terminal_l2':>14} {'f_linf':>10} {'cg':>4}")
for row in study.rows:
    print(f"{row.epsilon:10.0e} {row.terminal_l2:14.6e} {row.f_linf:10.4f} {row.cg_iterations:4d}")
print(f"fitted log-log slope: {study.slope:.3f}")
