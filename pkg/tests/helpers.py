"""Shared test fixtures and independent oracles.

The dense null-control oracle here re-derives the discrete dynamics with
plain dense linear algebra and solves the primal stationarity system by
direct factorization.  It shares no code with the CG/adjoint path it
checks (only the flux-form definitions, restated below).
"""

from __future__ import annotations

import numpy as np

from kscontrol.grids import DomainSpec, Grid, TimeGrid, omega_mask


def canonical_domain(T: float = 0.5) -> DomainSpec:
    return DomainSpec(0.0, 1.0, (0.3, 0.7), (0.4, 0.6), T=T)


def smooth_pair(grid: Grid) -> tuple[np.ndarray, np.ndarray]:
    """Smooth Neumann-compatible initial data with a nonzero mean component."""
    xi = (grid.x - grid.x_lo) / (grid.x_hi - grid.x_lo)
    return 0.5 + np.cos(np.pi * xi), 0.5 * np.cos(2.0 * np.pi * xi)


def _dense_laplacian(n: int, h: float) -> np.ndarray:
    L = np.zeros((n, n))
    inv_h2 = 1.0 / (h * h)
    for i in range(n - 1):
        # flux between nodes i and i+1
        L[i, i] -= inv_h2
        L[i, i + 1] += inv_h2
        L[i + 1, i + 1] -= inv_h2
        L[i + 1, i] += inv_h2
    return L


def _dense_drift(b_face: np.ndarray, h: float) -> np.ndarray:
    n = b_face.shape[0] + 1
    G = np.zeros((n, n))
    for j in range(n - 1):
        flux = b_face[j] / (2.0 * h)
        G[j, j] += flux
        G[j, j + 1] += flux
        G[j + 1, j] -= flux
        G[j + 1, j + 1] -= flux
    return G


def _dense_weighted_laplacian(a_face: np.ndarray, h: float) -> np.ndarray:
    n = a_face.shape[0] + 1
    W = np.zeros((n, n))
    inv_h2 = 1.0 / (h * h)
    for j in range(n - 1):
        w = a_face[j] * inv_h2
        W[j, j] -= w
        W[j, j + 1] += w
        W[j + 1, j + 1] -= w
        W[j + 1, j] += w
    return W


def dense_null_control(y0, z0, epsilon, rho, coeffs, domain: DomainSpec,
                       grid: Grid, tgrid: TimeGrid):
    """Direct dense solve of the penalized control problem.

    Assembles the control-to-terminal-state matrix column by column from
    dense one-step maps, then solves the primal stationarity system

        [dt I + (1/eps) diag(rho) S^T S] f = -(1/eps) diag(rho) S^T w_free(T)

    (the 1/rho-weighted stationarity row multiplied through by rho, which
    also forces f = 0 wherever the weight vanishes).

    Returns (f_field, terminal_state) with f_field of shape (n, m+1).
    """
    n, m, h, dt = grid.n, tgrid.m, grid.h, tgrid.dt
    mask = omega_mask(domain, grid)
    omega_nodes = np.flatnonzero(mask)

    L = _dense_laplacian(n, h)
    Az = (1.0 + dt * coeffs.gamma) * np.eye(n) - dt * L
    b_face = 0.5 * (coeffs.b[:-1, :] + coeffs.b[1:, :])
    a_face = 0.5 * (coeffs.a[:-1, :] + coeffs.a[1:, :])

    A_steps = []
    W_steps = []
    for k in range(m):
        G = _dense_drift(b_face[:, k], h)
        A_steps.append(np.eye(n) - dt * L + dt * G)
        W_steps.append(_dense_weighted_laplacian(a_face[:, k + 1], h))

    dofs = [(k, i) for k in range(m) for i in omega_nodes]
    ndof = len(dofs)
    dof_index = {dof: c for c, dof in enumerate(dofs)}

    # march the impulse columns and the free state together
    Yc = np.zeros((n, ndof))
    Zc = np.zeros((n, ndof))
    y_free, z_free = np.array(y0, float), np.array(z0, float)
    for k in range(m):
        impulse = np.zeros((n, ndof))
        for i in omega_nodes:
            impulse[i, dof_index[(k, i)]] = dt
        Yc = np.linalg.solve(A_steps[k], Yc - dt * (W_steps[k] @ Zc) + impulse)
        Zc = np.linalg.solve(Az, Zc + dt * coeffs.delta * Yc)
        y_free = np.linalg.solve(A_steps[k], y_free - dt * (W_steps[k] @ z_free))
        z_free = np.linalg.solve(Az, z_free + dt * coeffs.delta * y_free)

    S = np.vstack([Yc, Zc])
    w_free = np.concatenate([y_free, z_free])
    rho_vec = np.array([rho[i, k] for k, i in dofs])

    M = dt * np.eye(ndof) + (rho_vec[:, None] / epsilon) * (S.T @ S)
    rhs = -(rho_vec / epsilon) * (S.T @ w_free)
    f_vec = np.linalg.solve(M, rhs)

    f_field = np.zeros((n, m + 1))
    for c, (k, i) in enumerate(dofs):
        f_field[i, k] = f_vec[c]
    terminal = w_free + S @ f_vec
    return f_field, terminal
