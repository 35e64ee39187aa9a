"""Domain geometry, uniform meshes and the discrete quadrature conventions.

All fields in this package are sampled on the nodes of a uniform spatial
mesh and a uniform time mesh.  Space-time fields are arrays of shape
``(n, m + 1)``: axis 0 runs over the ``n`` spatial nodes, axis 1 over the
``m + 1`` time nodes ``t_k = k * dt``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError, InvalidDomainError


@dataclass(frozen=True)
class DomainSpec:
    """Interval domain with control region ``omega`` and inner region ``omega_prime``.

    ``omega`` is the open subinterval where the control acts;
    ``omega_prime`` must be compactly contained in ``omega``.
    """

    x_lo: float
    x_hi: float
    omega: tuple[float, float]
    omega_prime: tuple[float, float]
    T: float

    def __post_init__(self):
        if not self.x_lo < self.x_hi:
            raise InvalidDomainError(f"x_lo={self.x_lo} must be < x_hi={self.x_hi}")
        olo, ohi = self.omega
        plo, phi = self.omega_prime
        if not (self.x_lo < olo < ohi < self.x_hi):
            raise InvalidDomainError(f"omega={self.omega} must be a strict subinterval of ({self.x_lo}, {self.x_hi})")
        if not (olo < plo < phi < ohi):
            raise InvalidDomainError(
                f"closure of omega_prime={self.omega_prime} must lie inside omega={self.omega}"
            )
        if not self.T > 0:
            raise InvalidDomainError(f"T={self.T} must be positive")

    @property
    def length(self) -> float:
        return self.x_hi - self.x_lo


@dataclass(frozen=True)
class Grid:
    """Uniform spatial mesh with ``n`` nodes."""

    n: int
    x_lo: float
    x_hi: float

    def __post_init__(self):
        if self.n < 8:
            raise InvalidArgumentError(f"grid needs n >= 8 nodes, got {self.n}")
        if not self.x_lo < self.x_hi:
            raise InvalidArgumentError("grid endpoints out of order")

    @property
    def h(self) -> float:
        return (self.x_hi - self.x_lo) / (self.n - 1)

    @property
    def x(self) -> np.ndarray:
        return np.linspace(self.x_lo, self.x_hi, self.n)

    def quad_weights(self) -> np.ndarray:
        """Spatial quadrature weights: ``h`` per node, halved at the two boundary nodes."""
        w = np.full(self.n, self.h)
        w[0] *= 0.5
        w[-1] *= 0.5
        return w


@dataclass(frozen=True)
class TimeGrid:
    """Uniform time mesh with ``m`` steps on ``[0, T]``."""

    m: int
    T: float

    def __post_init__(self):
        if self.m < 2:
            raise InvalidArgumentError(f"time grid needs m >= 2 steps, got {self.m}")
        if not self.T > 0:
            raise InvalidArgumentError(f"T={self.T} must be positive")
        if abs(self.m * self.dt - self.T) > 1e-12 * self.T:
            raise InvalidArgumentError("m * dt does not reproduce T")

    @property
    def dt(self) -> float:
        return self.T / self.m

    @property
    def t(self) -> np.ndarray:
        return np.linspace(0.0, self.T, self.m + 1)

    def quad_weights(self) -> np.ndarray:
        """Trapezoid weights over the ``m + 1`` time nodes."""
        w = np.full(self.m + 1, self.dt)
        w[0] *= 0.5
        w[-1] *= 0.5
        return w


def make_grid(domain: DomainSpec, n: int) -> Grid:
    return Grid(n=n, x_lo=domain.x_lo, x_hi=domain.x_hi)


def make_time_grid(domain: DomainSpec, m: int) -> TimeGrid:
    return TimeGrid(m=m, T=domain.T)


def interval_mask(grid: Grid, interval: tuple[float, float]) -> np.ndarray:
    """Boolean mask of nodes strictly inside an open interval."""
    x = grid.x
    return (x > interval[0]) & (x < interval[1])


def omega_mask(domain: DomainSpec, grid: Grid) -> np.ndarray:
    return interval_mask(grid, domain.omega)


def omega_prime_mask(domain: DomainSpec, grid: Grid) -> np.ndarray:
    return interval_mask(grid, domain.omega_prime)


def space_l2(u: np.ndarray, grid: Grid) -> float:
    """Discrete L2(Omega) norm of a nodal field."""
    return float(np.sqrt(np.sum(grid.quad_weights() * u * u)))


def pair_l2(u: np.ndarray, v: np.ndarray, grid: Grid) -> float:
    """Discrete L2(Omega)^2 norm of a pair of nodal fields."""
    w = grid.quad_weights()
    return float(np.sqrt(np.sum(w * u * u) + np.sum(w * v * v)))


def integrate_qt(field: np.ndarray, grid: Grid, tgrid: TimeGrid,
                 space_mask: np.ndarray | None = None) -> float:
    """Space-time integral of a nodal field over Q (or over ``mask`` x (0,T)).

    Trapezoid in time, rectangle in space with half-weights at the boundary
    nodes.  Summation order is fixed (C-order ravel) so results are
    reproducible bit for bit.
    """
    wx = grid.quad_weights()
    if space_mask is not None:
        wx = wx * space_mask
    contrib = field * wx[:, None] * tgrid.quad_weights()[None, :]
    return float(np.sum(contrib.ravel()))


def grad_x(field: np.ndarray, grid: Grid) -> np.ndarray:
    """Nodal spatial derivative: central differences, one-sided at the boundary.

    Works on a single slice ``(n,)`` or a space-time field ``(n, m + 1)``.
    """
    out = np.empty_like(field)
    h = grid.h
    out[1:-1] = (field[2:] - field[:-2]) / (2.0 * h)
    out[0] = (field[1] - field[0]) / h
    out[-1] = (field[-1] - field[-2]) / h
    return out
