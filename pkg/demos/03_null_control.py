"""Null control of the linearized system by the penalized dual method.

Conjugate gradient runs on the terminal-pair operator G = S W S* + eps I,
whose symmetry is inherited from the exact-transpose adjoint.  The control
is the adjoint state through the decaying weight, supported on the control
region and vanishing at t = 0 and t = T.  The recovered terminal state
satisfies (y,z)(T) = -eps (phi_T, theta_T) to solver precision.
"""

import numpy as np

from kscontrol import DomainSpec, constant_coefficients, make_grid, make_time_grid
from kscontrol.grids import pair_l2
from kscontrol.hum import HUMConfig, control_bound_report, hum_solve
from kscontrol.weights import build_beta, select_parameters, weight_fields

domain = DomainSpec(0.0, 1.0, omega=(0.3, 0.7), omega_prime=(0.4, 0.6), T=0.5)
grid, tgrid = make_grid(domain, 128), make_time_grid(domain, 256)
coeffs = constant_coefficients(grid, tgrid, a=0.5, b=0.2)

beta = build_beta(domain, grid)
# small exponent budget: the weighted dual operator must dominate eps
lam, s = select_parameters(beta, 0.5, 0.2, tgrid, mode="practice", exponent_budget=4.0)
cfg = HUMConfig(weights=weight_fields(beta, lam, s, tgrid), epsilon=1e-8, cg_tol=1e-10)

xi = (grid.x - grid.x_lo) / (grid.x_hi - grid.x_lo)
y0 = 0.5 + np.cos(np.pi * xi)
z0 = 0.5 * np.cos(2.0 * np.pi * xi)

result = hum_solve(y0, z0, cfg, coeffs, domain, grid, tgrid)
init = pair_l2(y0, z0, grid)
print(f"initial |(y0,z0)|_2 = {init:.4f}")
print(f"terminal |(y,z)(T)|_2 = {result.terminal_l2:.3e}  "
      f"(reduction {result.terminal_l2 / init:.2e})")
print(f"CG iterations: {result.cg_iterations}, optimality ratio {result.optimality_ratio:.12f}")
print(f"control norms: |f|_inf = {result.f_linf:.3f}, |f|_L2(Q) = {result.f_l2:.4f}, "
      f"weighted energy = {result.f_weighted_l2:.4e}")

bound = control_bound_report(result, coeffs.a_norm, coeffs.b_norm, tgrid.T)
print(f"empirical cost exponent: C_hat = {bound.c_hat:.4f} at kappa = {bound.kappa:.3f}")
