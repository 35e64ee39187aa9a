"""Penalized null control by conjugate gradient on the dual problem.

The primal problem minimizes the weighted control energy plus a terminal
penalty ``(1/eps) |(y, z)(T)|^2``.  Its optimality system says the control
is the adjoint state seen through the decaying weight,

    f = 1_omega * exp((3/2) s alpha) * phi,

with adjoint terminal data ``p = -(1/eps) (y, z)(T)``.  Eliminating the
control gives a linear equation ``G p = -(free terminal state)`` for the
terminal adjoint pair, where

    G(p) = S(1_omega * rho * Phi(p)) + eps * p,

``Phi(p)`` the phi component of the backward solve, ``rho`` the decaying
weight, and ``S`` the control-to-terminal-state map with zero initial data.
``G`` is symmetric positive definite in the Euclidean pairing because the
forward and adjoint marches are exact transposes, so plain CG applies.

The growing weight ``exp(-(3/2) s alpha)`` never appears: the reported
weighted control energy uses the optimality-equivalent form
``integral of 1_omega rho |phi|^2``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    CGStagnationError,
    InvalidArgumentError,
    NotConvergedError,
    NumericalFailureError,
)
from .grids import DomainSpec, Grid, TimeGrid, integrate_qt, omega_mask, pair_l2, space_l2
from .pde import Coefficients, Control, LinearPropagator, StateTrajectory
from .weights import CarlemanWeights, kappa

__all__ = ["HUMConfig", "HUMResult", "Gramian", "gramian_apply", "hum_solve",
           "ControlBoundReport", "control_bound_report"]


@dataclass(frozen=True)
class HUMConfig:
    """Penalty, CG controls and the weight bundle for one solve."""

    weights: CarlemanWeights
    epsilon: float = 1e-6
    cg_tol: float = 1e-10
    cg_max_iter: int = 500
    weight_exponent: float = 1.5
    preconditioner: str = "none"

    def __post_init__(self):
        if self.epsilon <= 0:
            raise InvalidArgumentError("epsilon must be positive")
        if not 0 < self.cg_tol < 1:
            raise InvalidArgumentError("cg_tol must lie in (0, 1)")
        if self.cg_max_iter < 1:
            raise InvalidArgumentError("cg_max_iter must be at least 1")
        if not 1.0 < self.weight_exponent < 2.0:
            raise InvalidArgumentError("weight_exponent must lie in (1, 2)")
        if self.preconditioner not in ("none", "jacobi"):
            raise InvalidArgumentError("preconditioner must be 'none' or 'jacobi'")


@dataclass(frozen=True)
class HUMResult:
    """Control, controlled trajectory and solver diagnostics."""

    f: Control
    traj: StateTrajectory
    terminal_l2: float
    f_linf: float
    f_l2: float
    f_weighted_l2: float
    cg_iterations: int
    dual_value_history: list[float]
    residual_history: list[float]
    kappa: float
    phi_T: np.ndarray
    theta_T: np.ndarray
    pT_l2: float
    initial_l2: float
    optimality_ratio: float
    converged: bool
    optimality_limited: bool


class Gramian:
    """Matrix-free dual operator ``p -> S(1_omega rho Phi(p)) + eps p``.

    Terminal pairs are stacked as vectors of length 2n, phi block first.
    """

    def __init__(self, cfg: HUMConfig, coeffs: Coefficients, domain: DomainSpec,
                 grid: Grid, tgrid: TimeGrid):
        self.cfg = cfg
        self.grid, self.tgrid = grid, tgrid
        self.mask = omega_mask(domain, grid)
        self.prop = LinearPropagator(coeffs, grid, tgrid)
        rho = cfg.weights.control_weight(cfg.weight_exponent)
        if rho.shape != (grid.n, tgrid.m + 1):
            raise InvalidArgumentError("weight fields were built on different grids")
        self.rho_masked = np.where(self.mask[:, None], rho, 0.0)

    def split(self, p: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        n = self.grid.n
        return p[:n], p[n:]

    def control_from_adjoint(self, Phi: np.ndarray) -> np.ndarray:
        return self.rho_masked * Phi

    def apply(self, p: np.ndarray) -> np.ndarray:
        phi_T, theta_T = self.split(p)
        Phi, _ = self.prop.adjoint(phi_T, theta_T)
        if not np.all(np.isfinite(Phi)):
            raise NumericalFailureError("non-finite adjoint state", stage="adjoint")
        f = self.control_from_adjoint(Phi)
        Y, Z = self.prop.forward(np.zeros(self.grid.n), np.zeros(self.grid.n), f, self.mask)
        out = np.concatenate([Y[:, -1], Z[:, -1]]) + self.cfg.epsilon * p
        if not np.all(np.isfinite(out)):
            raise NumericalFailureError("non-finite terminal response", stage="gramian")
        return out

    __call__ = apply


def gramian_apply(p: np.ndarray, cfg: HUMConfig, coeffs: Coefficients,
                  domain: DomainSpec, grid: Grid, tgrid: TimeGrid) -> np.ndarray:
    """One application of the dual operator to a stacked terminal pair."""
    return Gramian(cfg, coeffs, domain, grid, tgrid).apply(np.asarray(p, float))


def _cg(gram: Gramian, b: np.ndarray, cfg: HUMConfig):
    """CG on ``G p = b`` with a two-phase stopping rule.

    Phase one runs to the relative-residual tolerance.  Phase two keeps
    iterating until ``|r| <= cg_tol * eps * |p|``, which guarantees the
    terminal-state identity ``(y, z)(T) = -eps p`` to well within the
    documented 10 * cg_tol; it gives up once the residual stops improving
    (round-off floor) and flags the result instead.
    """
    eps, tol, cap = cfg.epsilon, cfg.cg_tol, cfg.cg_max_iter
    inv_m = 1.0 / eps if cfg.preconditioner == "jacobi" else 1.0

    x = np.zeros_like(b)
    r = b.copy()
    z = inv_m * r
    d = z.copy()
    rz = float(r @ z)
    b_norm = float(np.linalg.norm(b))
    dual_history = [0.0]
    res_history = [b_norm]
    best_res = b_norm
    since_best = 0
    optimality_limited = False

    it = 0
    while it < cap:
        Gd = gram.apply(d)
        dGd = float(d @ Gd)
        if dGd <= 0:
            raise NumericalFailureError("dual operator lost positive definiteness", stage="cg")
        step = rz / dGd
        x = x + step * d
        r = r - step * Gd
        it += 1
        res = float(np.linalg.norm(r))
        res_history.append(res)
        dual_history.append(-0.5 * float(x @ b + x @ r))

        if res < best_res * (1.0 - 1e-3):
            best_res, since_best = res, 0
        else:
            since_best += 1

        primary = res <= tol * b_norm
        secondary = res <= tol * eps * float(np.linalg.norm(x))
        if primary and secondary:
            return x, r, it, dual_history, res_history, False
        if primary and (since_best >= 25 or res <= 1e-15 * b_norm):
            return x, r, it, dual_history, res_history, True
        if not primary and it >= 50 and res_history[-51] < 10.0 * res:
            raise CGStagnationError(
                f"CG residual fell less than 10x over 50 iterations (iter {it})",
                history=res_history,
            )

        z = inv_m * r
        rz_new = float(r @ z)
        d = z + (rz_new / rz) * d
        rz = rz_new

    if float(np.linalg.norm(r)) <= tol * b_norm:
        return x, r, it, dual_history, res_history, True
    raise NotConvergedError(
        f"CG did not reach tolerance {tol:g} within {cap} iterations",
        partial={"x": x, "residual_history": res_history},
    )


def hum_solve(y0: np.ndarray, z0: np.ndarray, cfg: HUMConfig, coeffs: Coefficients,
              domain: DomainSpec, grid: Grid, tgrid: TimeGrid) -> HUMResult:
    """Compute the penalized null control for initial data ``(y0, z0)``.

    Solves the dual equation by CG, reconstructs the control from the final
    adjoint solve, recomputes the controlled trajectory and fills the
    diagnostics.  The reported terminal pair satisfies
    ``(y, z)(T) = -eps (phi_T, theta_T)`` up to the CG tolerance.

    Raises
    ------
    CGStagnationError
        If the residual stalls before reaching tolerance.
    NotConvergedError
        If the iteration cap is hit away from tolerance.
    """
    y0 = np.asarray(y0, float)
    z0 = np.asarray(z0, float)
    gram = Gramian(cfg, coeffs, domain, grid, tgrid)
    n = grid.n

    Yf, Zf = gram.prop.forward(y0, z0)
    b = -np.concatenate([Yf[:, -1], Zf[:, -1]])

    if float(np.linalg.norm(b)) == 0.0:
        p = np.zeros(2 * n)
        it, dual_history, res_history, limited = 0, [0.0], [0.0], False
    else:
        p, _, it, dual_history, res_history, limited = _cg(gram, b, cfg)

    phi_T, theta_T = gram.split(p)
    Phi, _ = gram.prop.adjoint(phi_T, theta_T)
    f_field = gram.control_from_adjoint(Phi)
    control = Control(f=f_field, mask=gram.mask)

    Yc, Zc = gram.prop.forward(y0, z0, f_field, gram.mask)
    traj = StateTrajectory(y=Yc, z=Zc, role="state")

    terminal_l2 = pair_l2(Yc[:, -1], Zc[:, -1], grid)
    pT_l2 = pair_l2(phi_T, theta_T, grid)
    denom = cfg.epsilon * pT_l2
    ratio = terminal_l2 / denom if denom > 0 else float("nan")

    f_weighted = integrate_qt(gram.rho_masked * Phi * Phi, grid, tgrid)
    return HUMResult(
        f=control,
        traj=traj,
        terminal_l2=terminal_l2,
        f_linf=float(np.max(np.abs(f_field))),
        f_l2=float(np.sqrt(integrate_qt(f_field * f_field, grid, tgrid))),
        f_weighted_l2=f_weighted,
        cg_iterations=it,
        dual_value_history=dual_history,
        residual_history=res_history,
        kappa=kappa(coeffs.a_norm, coeffs.b_norm, tgrid.T),
        phi_T=phi_T,
        theta_T=theta_T,
        pT_l2=pT_l2,
        initial_l2=space_l2(y0, grid) + space_l2(z0, grid),
        optimality_ratio=ratio,
        converged=True,
        optimality_limited=limited,
    )


@dataclass(frozen=True)
class ControlBoundReport:
    """Empirical constant in ``|f|_inf <= exp(C kappa) (|y0|_2 + |z0|_2)``."""

    c_hat: float
    kappa: float
    f_linf: float
    initial_l2: float
    undefined: bool


def control_bound_report(result: HUMResult, a_norm: float, b_norm: float, T: float) -> ControlBoundReport:
    """Track the fitted exponent ``ln(|f|_inf / initial size) / kappa`` across runs.

    The bound itself is not falsifiable (its constant is an existence
    constant); zero initial data yields an undefined ratio, flagged rather
    than raised.
    """
    kap = kappa(a_norm, b_norm, T)
    if result.initial_l2 == 0.0 or result.f_linf == 0.0:
        return ControlBoundReport(c_hat=float("nan"), kappa=kap, f_linf=result.f_linf,
                                  initial_l2=result.initial_l2, undefined=True)
    c_hat = float(np.log(result.f_linf / result.initial_l2) / kap)
    return ControlBoundReport(c_hat=c_hat, kappa=kap, f_linf=result.f_linf,
                              initial_l2=result.initial_l2, undefined=not np.isfinite(c_hat))
