"""The weight machinery: profile beta, fields alpha and phi, parameter modes.

alpha is negative on (0,T) and diverges to -inf at both time endpoints, so
exp(2 s alpha) vanishes there: the weights switch the estimates off at t=0
and t=T.  'theory' mode enforces the coupling s >= gamma(lambda)(T+T^2);
the resulting exponents underflow everything, which is exactly why a
'practice' mode with an exponent budget exists.
"""

import numpy as np

from kscontrol import DomainSpec, make_grid, make_time_grid
from kscontrol.weights import build_beta, exp_clamped, kappa, select_parameters, weight_fields

domain = DomainSpec(0.0, 1.0, omega=(0.3, 0.7), omega_prime=(0.4, 0.6), T=0.5)
grid, tgrid = make_grid(domain, 128), make_time_grid(domain, 256)

beta = build_beta(domain, grid)
peak = int(np.argmax(beta))
print(f"beta: boundary values ({beta[0]}, {beta[-1]}), peak {beta[peak]:.6f} "
      f"at x = {grid.x[peak]:.4f}")

lam_t, s_t = select_parameters(beta, 0.5, 0.2, tgrid, mode="theory")
lam_p, s_p = select_parameters(beta, 0.5, 0.2, tgrid, mode="practice", exponent_budget=40.0)
print(f"theory mode:   lambda = {lam_t:.3f}, s = {s_t:.3f}")
print(f"practice mode: lambda = {lam_p:.3f}, s = {s_p:.5f}  (budget 40)")

w = weight_fields(beta, lam_p, s_p, tgrid)
mid = tgrid.m // 2
print(f"alpha range at t = T/2: [{w.alpha[:, mid].min():.2f}, {w.alpha[:, mid].max():.2f}]")
print(f"sandwich alpha0 <= alpha <= alpha0/(1+eta): eta(lambda) = {w.eta_lambda:.4f}")

e2sa = exp_clamped(w.log_e2sa)
print("exp(2 s alpha) at the endpoint slices:", e2sa[:, 0].max(), e2sa[:, -1].max())
print("exp(2 s alpha) at (peak, T/2):", e2sa[peak, mid])

w_theory = weight_fields(beta, lam_t, s_t, tgrid)
print("theory-mode max exp(2 s alpha):", exp_clamped(w_theory.log_e2sa).max(),
      " (degenerate, as advertised)")

print("kappa(0.5, 0.2, T=0.5) =", kappa(0.5, 0.2, 0.5))
