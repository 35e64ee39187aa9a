"""Sampling the observability and Carleman-type quotients.

The constants in these inequalities are existence constants, so the
testable surrogate is that sampled lhs/rhs ratios are finite, positive,
and stable under mesh refinement.  Random unit-norm terminal data is
pushed backward through the adjoint solver; high-frequency content is
where the constants are stressed.
"""

import numpy as np

from kscontrol import DomainSpec, constant_coefficients, make_grid, make_time_grid
from kscontrol.diagnostics import carleman_ratio, observability_ratio
from kscontrol.weights import build_beta, select_parameters, weight_fields

domain = DomainSpec(0.0, 1.0, omega=(0.3, 0.7), omega_prime=(0.4, 0.6), T=0.5)

for n, m in [(64, 128), (128, 256)]:
    grid, tgrid = make_grid(domain, n), make_time_grid(domain, m)
    coeffs = constant_coefficients(grid, tgrid, a=0.5, b=0.2)
    beta = build_beta(domain, grid)
    lam, s = select_parameters(beta, 0.5, 0.2, tgrid, mode="practice", exponent_budget=40.0)
    weights = weight_fields(beta, lam, s, tgrid)

    obs = observability_ratio(100, 2024, coeffs, weights, domain, grid, tgrid)
    car = carleman_ratio(100, 2024, coeffs, weights, domain, grid, tgrid)
    print(f"mesh {n}x{m}:")
    print(f"  observability: max ratio {obs.max_ratio:.4e}, median {obs.median_ratio:.4e}, "
          f"ln(max)/kappa = {obs.log_max_ratio_over_kappa:.3f}")
    print(f"  carleman:      max ratio {car.max_ratio:.4e}, median {car.median_ratio:.4e}")
