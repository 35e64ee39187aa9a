"""Empirical probes of the observability and Carleman-type inequalities.

The constants in these inequalities are existence constants; what can be
tested numerically is that sampled left/right-hand-side ratios stay finite,
bounded, and stable under mesh refinement.  Reports state exactly that and
nothing more.

Samples draw independent standard-normal terminal data per node, normalized
to unit discrete L2(Omega)^2 norm, from a seeded generator: high-frequency
content is where the constants are stressed.  All reductions run in a fixed
summation order, so a report is a deterministic function of
(seed, parameters, mesh).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateWeightError, InvalidArgumentError
from .grids import DomainSpec, Grid, TimeGrid, grad_x, integrate_qt, omega_mask, pair_l2
from .hum import HUMConfig, HUMResult, control_bound_report, hum_solve
from .pde import Coefficients, LinearPropagator
from .weights import CarlemanWeights, exp_clamped, kappa

__all__ = ["InequalityReport", "observability_ratio", "carleman_ratio",
           "DecayRow", "DecayStudy", "decay_study", "weighted_power"]


@dataclass(frozen=True)
class InequalityReport:
    kind: str
    sample_count: int
    lhs: np.ndarray
    rhs: np.ndarray
    ratios: np.ndarray
    max_ratio: float
    median_ratio: float
    empirical_constant: float
    log_max_ratio_over_kappa: float
    n: int
    m: int
    lam: float
    s: float
    kappa: float
    seed: int


def _draw_unit_pair(rng: np.random.Generator, grid: Grid) -> tuple[np.ndarray, np.ndarray] | None:
    phi_T = rng.standard_normal(grid.n)
    theta_T = rng.standard_normal(grid.n)
    norm = pair_l2(phi_T, theta_T, grid)
    if norm == 0.0:
        return None
    return phi_T / norm, theta_T / norm


def _finish(kind, lhs, rhs, weights, coeffs, grid, tgrid, seed) -> InequalityReport:
    lhs = np.asarray(lhs)
    rhs = np.asarray(rhs)
    ratios = lhs / rhs
    kap = kappa(coeffs.a_norm, coeffs.b_norm, tgrid.T)
    max_ratio = float(np.max(ratios))
    return InequalityReport(
        kind=kind,
        sample_count=len(ratios),
        lhs=lhs,
        rhs=rhs,
        ratios=ratios,
        max_ratio=max_ratio,
        median_ratio=float(np.median(ratios)),
        empirical_constant=max_ratio,
        log_max_ratio_over_kappa=float(np.log(max_ratio) / kap),
        n=grid.n,
        m=tgrid.m,
        lam=weights.lam,
        s=weights.s,
        kappa=kap,
        seed=seed,
    )


def observability_ratio(samples: int, seed: int, coeffs: Coefficients, weights: CarlemanWeights,
                        domain: DomainSpec, grid: Grid, tgrid: TimeGrid) -> InequalityReport:
    """Sample the observability quotient.

    Per sample: backward-solve random unit-norm terminal data, then take

        lhs = |phi(0)|_2^2 + |theta(0)|_2^2,
        rhs = integral over omega x (0,T) of exp((3/2) s alpha) |phi|^2.

    ``ln(max ratio) / kappa`` is reported as the empirical exponent.

    Raises
    ------
    DegenerateWeightError
        If the weighted integral underflows to exact zero for a nonzero
        sample (s too large for the mesh).
    """
    if samples < 1:
        raise InvalidArgumentError("samples must be at least 1")
    rng = np.random.default_rng(seed)
    prop = LinearPropagator(coeffs, grid, tgrid)
    mask = omega_mask(domain, grid)
    wx = grid.quad_weights()
    rho = exp_clamped(weights.log_e32sa)

    lhs_vals, rhs_vals = [], []
    for _ in range(samples):
        pair = _draw_unit_pair(rng, grid)
        if pair is None:
            continue
        Phi, Theta = prop.adjoint(*pair)
        lhs = float(np.sum(wx * Phi[:, 0] ** 2) + np.sum(wx * Theta[:, 0] ** 2))
        rhs = integrate_qt(rho * Phi * Phi, grid, tgrid, space_mask=mask)
        if rhs == 0.0:
            raise DegenerateWeightError(
                "observability denominator underflowed to zero: s too large for this mesh"
            )
        lhs_vals.append(lhs)
        rhs_vals.append(rhs)
    return _finish("observability", lhs_vals, rhs_vals, weights, coeffs, grid, tgrid, seed)


def weighted_power(weights: CarlemanWeights, power: float) -> np.ndarray:
    """Field ``(s phi_w)^power * exp(2 s alpha)``, exact zero at the endpoint slices.

    Assembled in log space so the degenerate endpoint values never mix
    (inf * 0) into NaN.
    """
    out = np.zeros_like(weights.alpha)
    log_sphi = np.log(weights.s * weights.phi_w[:, 1:-1])
    out[:, 1:-1] = exp_clamped(power * log_sphi + weights.log_e2sa[:, 1:-1])
    return out


def carleman_ratio(samples: int, seed: int, coeffs: Coefficients, weights: CarlemanWeights,
                   domain: DomainSpec, grid: Grid, tgrid: TimeGrid) -> InequalityReport:
    """Sample the combined Carleman quotient.

    Per sample, with the backward solution (phi, theta):

        i1 = integral of [(s phi_w)^3 |grad phi|^2 + (s phi_w)^5 |phi|^2] e^{2 s alpha},
        i2 = integral of [(s phi_w) |grad theta|^2 + (s phi_w)^3 |theta|^2] e^{2 s alpha},
        rhs = integral over omega x (0,T) of lam^8 (s phi_w)^9 e^{2 s alpha} |phi|^2,

    and the reported ratio is (i1 + i2) / rhs.  Trapezoid quadrature in
    time; the endpoint slices carry exactly zero weight.
    """
    if samples < 1:
        raise InvalidArgumentError("samples must be at least 1")
    rng = np.random.default_rng(seed)
    prop = LinearPropagator(coeffs, grid, tgrid)
    mask = omega_mask(domain, grid)

    w1 = weighted_power(weights, 1.0)
    w3 = weighted_power(weights, 3.0)
    w5 = weighted_power(weights, 5.0)
    w9 = weighted_power(weights, 9.0)
    lam8 = weights.lam**8

    lhs_vals, rhs_vals = [], []
    for _ in range(samples):
        pair = _draw_unit_pair(rng, grid)
        if pair is None:
            continue
        Phi, Theta = prop.adjoint(*pair)
        gphi = grad_x(Phi, grid)
        gtheta = grad_x(Theta, grid)
        i1 = integrate_qt(w3 * gphi * gphi + w5 * Phi * Phi, grid, tgrid)
        i2 = integrate_qt(w1 * gtheta * gtheta + w3 * Theta * Theta, grid, tgrid)
        rhs = lam8 * integrate_qt(w9 * Phi * Phi, grid, tgrid, space_mask=mask)
        if rhs == 0.0:
            raise DegenerateWeightError(
                "Carleman denominator underflowed to zero: s too large for this mesh"
            )
        lhs_vals.append(i1 + i2)
        rhs_vals.append(rhs)
    return _finish("carleman", lhs_vals, rhs_vals, weights, coeffs, grid, tgrid, seed)


@dataclass(frozen=True)
class DecayRow:
    epsilon: float
    terminal_l2: float
    f_linf: float
    f_l2: float
    cg_iterations: int
    c_hat: float


@dataclass(frozen=True)
class DecayStudy:
    rows: list[DecayRow]
    slope: float
    slope_defined: bool


def decay_study(epsilons, y0: np.ndarray, z0: np.ndarray, cfg: HUMConfig, coeffs: Coefficients,
                domain: DomainSpec, grid: Grid, tgrid: TimeGrid) -> DecayStudy:
    """Terminal-norm decay as the penalty parameter shrinks.

    Runs one penalized solve per epsilon (strictly decreasing list) and
    fits the log-log slope of the terminal norm; a single row leaves the
    slope undefined.  Solver errors propagate tagged by their epsilon.
    """
    eps_list = [float(e) for e in epsilons]
    if not eps_list or any(e <= 0 for e in eps_list):
        raise InvalidArgumentError("epsilon list must be positive")
    if any(b >= a for a, b in zip(eps_list, eps_list[1:], strict=False)) and len(eps_list) > 1:
        if not all(b < a for a, b in zip(eps_list, eps_list[1:], strict=False)):
            raise InvalidArgumentError("epsilon list must be strictly decreasing")

    rows: list[DecayRow] = []
    for eps in eps_list:
        run_cfg = HUMConfig(
            weights=cfg.weights, epsilon=eps, cg_tol=cfg.cg_tol,
            cg_max_iter=cfg.cg_max_iter, weight_exponent=cfg.weight_exponent,
            preconditioner=cfg.preconditioner,
        )
        try:
            res: HUMResult = hum_solve(y0, z0, run_cfg, coeffs, domain, grid, tgrid)
        except Exception as exc:
            exc.args = (f"epsilon={eps:g}: {exc.args[0] if exc.args else exc}",) + exc.args[1:]
            raise
        bound = control_bound_report(res, coeffs.a_norm, coeffs.b_norm, tgrid.T)
        rows.append(DecayRow(
            epsilon=eps, terminal_l2=res.terminal_l2, f_linf=res.f_linf,
            f_l2=res.f_l2, cg_iterations=res.cg_iterations, c_hat=bound.c_hat,
        ))

    if len(rows) >= 2:
        slope = float(np.polyfit(np.log([r.epsilon for r in rows]),
                                 np.log([r.terminal_l2 for r in rows]), 1)[0])
        return DecayStudy(rows=rows, slope=slope, slope_defined=True)
    return DecayStudy(rows=rows, slope=float("nan"), slope_defined=False)
