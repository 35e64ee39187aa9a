"""Carleman weight fields on the space-time mesh.

The weights are built from an auxiliary profile ``beta`` that vanishes at
both ends of the domain, is positive inside, and has its single critical
point inside the inner control region.  For parameters ``lam`` and ``s``,

    phi_w(x, t) = exp(lam * beta(x)) / (t * (T - t)),
    alpha(x, t) = (exp(lam * beta(x)) - exp(2 * lam * max beta)) / (t * (T - t)),

so ``alpha < 0`` on (0, T) and ``alpha -> -inf`` at both time endpoints.
Exponentials of ``s * alpha`` underflow long before double precision gives
out, so every weight is kept as its exponent (log space) and only
materialized through :func:`exp_clamped`, which maps exponents below the
clamp to exact zero.  The growing exponential ``exp(-(3/2) s alpha)`` is
never materialized.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError, InvalidDomainError
from .grids import DomainSpec, Grid, TimeGrid, omega_prime_mask

EXP_CLAMP = -700.0


def exp_clamped(log_field: np.ndarray | float) -> np.ndarray | float:
    """Exponentiate a log-space field, flushing exponents below the clamp to zero."""
    log_arr = np.asarray(log_field, dtype=float)
    out = np.zeros_like(log_arr)
    keep = log_arr > EXP_CLAMP
    out[keep] = np.exp(log_arr[keep])
    if np.ndim(log_field) == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class CarlemanWeights:
    """Weight fields and scalars for one (grid, time grid, lam, s) choice.

    ``alpha``, ``phi_w``, ``log_e2sa`` and ``log_e32sa`` have shape
    ``(n, m + 1)``; the two endpoint time slices hold ``-inf`` (``+inf`` for
    ``phi_w``), so decaying exponentials evaluate to exact zero there.
    ``alpha0`` is the spatial minimum of ``alpha`` per time node.
    """

    beta: np.ndarray
    lam: float
    s: float
    alpha: np.ndarray
    phi_w: np.ndarray
    log_e2sa: np.ndarray
    log_e32sa: np.ndarray
    gamma_lambda: float
    eta_lambda: float
    alpha0: np.ndarray

    @property
    def beta_norm(self) -> float:
        return float(np.max(self.beta))

    def control_weight(self, exponent: float = 1.5) -> np.ndarray:
        """Decaying control weight ``exp(exponent * s * alpha)`` as a dense field.

        ``exponent`` is experimental; 1.5 reproduces ``log_e32sa`` exactly.
        """
        return exp_clamped((exponent * self.s) * self.alpha)


def build_beta(domain: DomainSpec, grid: Grid) -> np.ndarray:
    """Construct the auxiliary profile ``beta`` on the grid nodes.

    ``beta(x) = sin(pi * psi(x))`` with ``psi`` piecewise linear,
    ``psi(x_lo) = 0``, ``psi(x_star) = 1/2`` and ``psi(x_hi) = 1`` where
    ``x_star`` is the midpoint of ``omega_prime``.  The profile vanishes at
    both boundary nodes (exactly), is positive at interior nodes, and its
    only critical point sits at ``x_star``.

    Raises
    ------
    InvalidDomainError
        If ``omega_prime`` covers fewer than three interior nodes.
    """
    if int(np.count_nonzero(omega_prime_mask(domain, grid))) < 3:
        raise InvalidDomainError("omega_prime must contain at least three interior grid nodes")
    x = grid.x
    x_star = 0.5 * (domain.omega_prime[0] + domain.omega_prime[1])
    psi = np.where(
        x <= x_star,
        0.5 * (x - domain.x_lo) / (x_star - domain.x_lo),
        1.0 - 0.5 * (domain.x_hi - x) / (domain.x_hi - x_star),
    )
    beta = np.sin(np.pi * psi)
    # sin(pi) rounds to ~1e-16; the boundary values must be exact zeros.
    beta[0] = 0.0
    beta[-1] = 0.0
    return beta


def weight_fields(beta: np.ndarray, lam: float, s: float, tgrid: TimeGrid) -> CarlemanWeights:
    """Assemble all weight fields for given ``beta``, ``lam`` and ``s``.

    Parameters
    ----------
    beta : array, shape (n,)
        Auxiliary profile from :func:`build_beta`.
    lam, s : float
        Positive weight parameters.
    tgrid : TimeGrid
        Time mesh with at least three nodes.

    Returns
    -------
    CarlemanWeights
    """
    if lam <= 0 or s <= 0:
        raise InvalidArgumentError(f"lam={lam} and s={s} must be positive")
    if tgrid.m < 2:
        raise InvalidArgumentError("time grid needs at least three nodes")
    beta = np.asarray(beta, dtype=float)
    n = beta.shape[0]
    mp1 = tgrid.m + 1
    t = tgrid.t
    beta_norm = float(np.max(beta))
    gamma_lam = float(np.exp(2.0 * lam * beta_norm))
    eta_lam = float(np.exp(-lam * beta_norm))

    elb = np.exp(lam * beta)
    tt = t * (tgrid.T - t)

    alpha = np.full((n, mp1), -np.inf)
    phi_w = np.full((n, mp1), np.inf)
    alpha[:, 1:-1] = (elb[:, None] - gamma_lam) / tt[None, 1:-1]
    phi_w[:, 1:-1] = elb[:, None] / tt[None, 1:-1]

    log_e2sa = (2.0 * s) * alpha
    log_e32sa = (1.5 * s) * alpha
    alpha0 = np.min(alpha, axis=0)

    return CarlemanWeights(
        beta=beta,
        lam=float(lam),
        s=float(s),
        alpha=alpha,
        phi_w=phi_w,
        log_e2sa=log_e2sa,
        log_e32sa=log_e32sa,
        gamma_lambda=gamma_lam,
        eta_lambda=eta_lam,
        alpha0=alpha0,
    )


def select_parameters(
    beta: np.ndarray,
    a_norm: float,
    b_norm: float,
    tgrid: TimeGrid,
    mode: str = "practice",
    c_lambda: float = 1.0,
    c_s: float = 1.0,
    lam: float | None = None,
    s: float | None = None,
    exponent_budget: float = 40.0,
) -> tuple[float, float]:
    """Choose the weight parameters ``(lam, s)``.

    ``theory`` mode follows the scaling ``lam = c_lambda (1 + |a|^2 + |B|^2)``
    and enforces ``s >= gamma(lam) (T + T^2)``; the resulting exponents are
    so large that every decaying weight underflows to zero, which is why
    ``practice`` mode exists and is the default.

    ``practice`` mode returns user-supplied values when given; otherwise it
    keeps ``lam = 1`` and sizes ``s`` so that ``min |2 s alpha|`` at the
    profile peak, over time nodes in [T/4, 3T/4], equals
    ``exponent_budget``.  ``alpha`` is independent of ``s``, so the budget
    pins ``s`` directly.
    """
    if a_norm < 0 or b_norm < 0:
        raise InvalidArgumentError("coefficient sup norms must be nonnegative")
    beta = np.asarray(beta, dtype=float)
    beta_norm = float(np.max(beta))
    T = tgrid.T

    if mode == "theory":
        lam_out = c_lambda * (1.0 + a_norm**2 + b_norm**2) if lam is None else lam
        gamma_lam = np.exp(2.0 * lam_out * beta_norm)
        s_scaling = c_s * (1.0 + a_norm**2 + b_norm**2) * (T + T * T)
        s_out = max(s_scaling, gamma_lam * (T + T * T)) if s is None else s
        return float(lam_out), float(s_out)

    if mode == "practice":
        lam_out = 1.0 if lam is None else lam
        if s is not None:
            return float(lam_out), float(s)
        t = tgrid.t
        window = (t >= T / 4.0) & (t <= 3.0 * T / 4.0)
        if not np.any(window):
            raise InvalidArgumentError("time grid too coarse: no node in [T/4, 3T/4]")
        peak = float(np.exp(lam_out * beta_norm))
        gamma_lam = float(np.exp(2.0 * lam_out * beta_norm))
        tt_max = float(np.max(t[window] * (T - t[window])))
        # |alpha(x_star, t)| = (gamma - peak) / (t (T - t)); minimal where t(T-t) is maximal.
        min_abs_alpha = (gamma_lam - peak) / tt_max
        s_out = exponent_budget / (2.0 * min_abs_alpha)
        return float(lam_out), float(s_out)

    raise InvalidArgumentError(f"unknown parameter mode {mode!r}")


def kappa(a_norm: float, b_norm: float, T: float) -> float:
    """Cost exponent ``(1 + |a|^2 + |B|^2) T + 1/T + 1 + |a| + |B|``."""
    if T <= 0:
        raise InvalidArgumentError(f"T={T} must be positive")
    return (1.0 + a_norm**2 + b_norm**2) * T + 1.0 / T + 1.0 + a_norm + b_norm
