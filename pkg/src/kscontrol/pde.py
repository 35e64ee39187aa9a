"""Forward and adjoint solvers on the uniform space-time mesh.

Discretization: second-order central differences in conservative (flux)
form with zero-flux ghost faces (Neumann), implicit Euler in time.  The
chemotaxis flux uses the previous time level's gradient of the attractant
(IMEX), so every step reduces to two tridiagonal solves.

The coupled linear step is ordered y first, then z driven by the new y.
The backward solver is the exact transpose of this composition: each step
reuses the forward step's LU factors with transposed triangular solves, so
the discrete duality identity holds to round-off.

Control time convention: the step from t_k to t_{k+1} consumes the control
slice f(:, k).  The final slice f(:, m) is never read by the steppers; the
optimizer keeps it at zero.  With this convention the duality identity reads

    <y_m, phi_m> + <z_m, theta_m>
        = <y_0, phi_0> + <z_0, theta_0> + sum_k dt <mask * f_k, phi_k>

with plain Euclidean products over the nodes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import lapack

from .errors import BlowUpError, InvalidArgumentError, NumericalFailureError
from .grids import Grid, TimeGrid

__all__ = [
    "Coefficients",
    "StateTrajectory",
    "Control",
    "LinearPropagator",
    "solve_forward_linear",
    "solve_forward_nonlinear",
    "solve_adjoint",
    "state_norms",
    "NormReport",
    "constant_coefficients",
    "zero_boundary",
    "discrete_mass",
]


def zero_boundary(field2d: np.ndarray) -> np.ndarray:
    """Copy of a space-time field with both boundary node rows set to zero."""
    out = np.array(field2d, dtype=float, copy=True)
    out[0, :] = 0.0
    out[-1, :] = 0.0
    return out


@dataclass(frozen=True)
class Coefficients:
    """Fields and constants of the linearized dynamics.

    ``a`` and ``b`` are nodal space-time fields of shape ``(n, m + 1)``;
    ``b`` must vanish at both boundary nodes (discrete no-flux drift).
    ``delta = 0`` is allowed to decouple the two equations in oracles.
    """

    a: np.ndarray
    b: np.ndarray
    chi: float
    gamma: float
    delta: float

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float)
        b = np.asarray(self.b, dtype=float)
        if a.shape != b.shape or a.ndim != 2:
            raise InvalidArgumentError("coefficient fields a, b must share shape (n, m+1)")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
            raise InvalidArgumentError("coefficient fields must be finite")
        if np.any(b[0, :] != 0.0) or np.any(b[-1, :] != 0.0):
            raise InvalidArgumentError("drift b must vanish at both boundary nodes")
        if self.gamma <= 0:
            raise InvalidArgumentError("gamma must be positive")
        if self.chi < 0 or self.delta < 0:
            raise InvalidArgumentError("chi and delta must be nonnegative")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def a_norm(self) -> float:
        return float(np.max(np.abs(self.a)))

    @property
    def b_norm(self) -> float:
        return float(np.max(np.abs(self.b)))


def constant_coefficients(
    grid: Grid,
    tgrid: TimeGrid,
    a: float = 0.0,
    b: float = 0.0,
    chi: float = 1.0,
    gamma: float = 1.0,
    delta: float = 1.0,
) -> Coefficients:
    """Constant-in-space-and-time coefficients; drift zeroed at the boundary nodes."""
    shape = (grid.n, tgrid.m + 1)
    return Coefficients(
        a=np.full(shape, float(a)),
        b=zero_boundary(np.full(shape, float(b))),
        chi=chi,
        gamma=gamma,
        delta=delta,
    )


@dataclass(frozen=True)
class StateTrajectory:
    """A coupled space-time trajectory; role is 'state', 'perturbation' or 'adjoint'."""

    y: np.ndarray
    z: np.ndarray
    role: str = "state"

    def __post_init__(self):
        if self.y.shape != self.z.shape or self.y.ndim != 2:
            raise InvalidArgumentError("trajectory components must share shape (n, m+1)")
        if not (np.all(np.isfinite(self.y)) and np.all(np.isfinite(self.z))):
            raise NumericalFailureError("non-finite trajectory entries", stage="trajectory")


@dataclass(frozen=True)
class Control:
    """Distributed control supported on the mask nodes."""

    f: np.ndarray
    mask: np.ndarray

    def __post_init__(self):
        if self.f.ndim != 2 or self.mask.shape != (self.f.shape[0],):
            raise InvalidArgumentError("control needs f of shape (n, m+1) and mask of shape (n,)")
        if np.any(self.f[~self.mask, :] != 0.0):
            raise InvalidArgumentError("control must vanish outside its support mask")

    @classmethod
    def zero(cls, grid: Grid, tgrid: TimeGrid, mask: np.ndarray) -> "Control":
        return cls(f=np.zeros((grid.n, tgrid.m + 1)), mask=np.asarray(mask, dtype=bool))


class _TriFactor:
    """LU factorization of a tridiagonal matrix, reusable for N and T solves."""

    __slots__ = ("dl", "d", "du", "du2", "ipiv")

    def __init__(self, dl: np.ndarray, d: np.ndarray, du: np.ndarray):
        dl_f, d_f, du_f, du2, ipiv, info = lapack.dgttrf(dl, d, du)
        if info != 0:
            raise NumericalFailureError(f"tridiagonal factorization failed (info={info})", stage="factor")
        self.dl, self.d, self.du, self.du2, self.ipiv = dl_f, d_f, du_f, du2, ipiv

    def solve(self, rhs: np.ndarray, transpose: bool = False) -> np.ndarray:
        x, info = lapack.dgttrs(
            self.dl, self.d, self.du, self.du2, self.ipiv,
            rhs[:, None], trans=b"T" if transpose else b"N",
        )
        if info != 0:
            raise NumericalFailureError(f"tridiagonal solve failed (info={info})", stage="solve")
        return x[:, 0]


def _laplacian_diags(n: int, h: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Flux-form Neumann Laplacian diagonals (dl, d, du)."""
    inv_h2 = 1.0 / (h * h)
    d = np.full(n, -2.0 * inv_h2)
    d[0] = d[-1] = -inv_h2
    dl = np.full(n - 1, inv_h2)
    du = np.full(n - 1, inv_h2)
    return dl, d, du


def _drift_diags(b_face: np.ndarray, h: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Diagonals of y -> div(b_face * facemean(y)) with zero-flux ghost faces."""
    n = b_face.shape[0] + 1
    half = b_face / (2.0 * h)
    d = np.zeros(n)
    d[:-1] += half
    d[1:] -= half
    return -half.copy(), d, half.copy()


def _face_mean(field2d: np.ndarray) -> np.ndarray:
    return 0.5 * (field2d[:-1, :] + field2d[1:, :])


def _apply_weighted_laplacian(a_face: np.ndarray, z: np.ndarray, h: float) -> np.ndarray:
    """Apply z -> div(a_face * grad z) in flux form (symmetric operator)."""
    flux = a_face * (z[1:] - z[:-1]) / h
    out = np.empty_like(z)
    out[0] = flux[0] / h
    out[1:-1] = (flux[1:] - flux[:-1]) / h
    out[-1] = -flux[-1] / h
    return out


class LinearPropagator:
    """Prefactored one-step maps of the coupled linear system.

    The step t_k -> t_{k+1} solves

        (I - dt L + dt G_k) y_{k+1} = y_k - dt W_k z_k + dt mask f_k,
        ((1 + dt gamma) I - dt L) z_{k+1} = z_k + dt delta y_{k+1},

    where G_k is the drift divergence built from the face means of the
    nodal ``b`` at time level k, and W_k z = div(a grad z) built from the
    face means of the nodal ``a`` at time level k + 1.  These levels mirror
    the nonlinear stepper, whose exact linearization they are: the lagged
    attractant gradient sits at the old level, the implicit density at the
    new one.

    ``adjoint`` runs the exact transpose of the step composition, reusing
    the same LU factors with transposed solves.
    """

    def __init__(self, coeffs: Coefficients, grid: Grid, tgrid: TimeGrid):
        n, m, h, dt = grid.n, tgrid.m, grid.h, tgrid.dt
        if coeffs.a.shape != (n, m + 1):
            raise InvalidArgumentError(
                f"coefficient fields have shape {coeffs.a.shape}, expected {(n, m + 1)}"
            )
        self.grid, self.tgrid, self.coeffs = grid, tgrid, coeffs
        self.dt, self.h, self.n, self.m = dt, h, n, m

        dl_L, d_L, du_L = _laplacian_diags(n, h)
        b_face = _face_mean(coeffs.b)
        self._a_face = _face_mean(coeffs.a)

        self._y_factors: list[_TriFactor] = []
        for k in range(m):
            dl_G, d_G, du_G = _drift_diags(b_face[:, k], h)
            self._y_factors.append(
                _TriFactor(
                    dl=-dt * dl_L + dt * dl_G,
                    d=1.0 - dt * d_L + dt * d_G,
                    du=-dt * du_L + dt * du_G,
                )
            )
        self._z_factor = _TriFactor(
            dl=-dt * dl_L, d=(1.0 + dt * coeffs.gamma) - dt * d_L, du=-dt * du_L
        )

    def _w_apply(self, k: int, v: np.ndarray) -> np.ndarray:
        # a at the new time level k + 1 acts on the lagged z (or on phi in the adjoint)
        return _apply_weighted_laplacian(self._a_face[:, k + 1], v, self.h)

    def forward(self, y0: np.ndarray, z0: np.ndarray, f: np.ndarray | None = None,
                mask: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray]:
        """March forward from (y0, z0); returns nodal trajectories (Y, Z)."""
        dt, delta = self.dt, self.coeffs.delta
        Y = np.empty((self.n, self.m + 1))
        Z = np.empty((self.n, self.m + 1))
        Y[:, 0], Z[:, 0] = y0, z0
        for k in range(self.m):
            rhs_y = Y[:, k] - dt * self._w_apply(k, Z[:, k])
            if f is not None:
                rhs_y = rhs_y + dt * np.where(mask, f[:, k], 0.0)
            y_new = self._y_factors[k].solve(rhs_y)
            Y[:, k + 1] = y_new
            Z[:, k + 1] = self._z_factor.solve(Z[:, k] + dt * delta * y_new)
        return Y, Z

    def adjoint(self, phi_T: np.ndarray, theta_T: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """March the exact transpose backward from terminal data (phi_T, theta_T)."""
        dt, delta = self.dt, self.coeffs.delta
        Phi = np.empty((self.n, self.m + 1))
        Theta = np.empty((self.n, self.m + 1))
        Phi[:, self.m], Theta[:, self.m] = phi_T, theta_T
        for k in range(self.m - 1, -1, -1):
            theta_half = self._z_factor.solve(Theta[:, k + 1], transpose=True)
            phi_k = self._y_factors[k].solve(Phi[:, k + 1] + dt * delta * theta_half, transpose=True)
            Phi[:, k] = phi_k
            Theta[:, k] = theta_half - dt * self._w_apply(k, phi_k)
        return Phi, Theta


def solve_forward_linear(
    y0: np.ndarray,
    z0: np.ndarray,
    control: Control | None,
    coeffs: Coefficients,
    grid: Grid,
    tgrid: TimeGrid,
    blowup_guard: float = 1e8,
) -> StateTrajectory:
    """Solve the controlled linear system forward in time.

    Parameters
    ----------
    y0, z0 : arrays, shape (n,)
        Initial data.
    control : Control or None
        Distributed control; None means no forcing.
    blowup_guard : float
        Magnitude bound; exceeding it raises :class:`BlowUpError`.
    """
    prop = LinearPropagator(coeffs, grid, tgrid)
    f = control.f if control is not None else None
    mask = control.mask if control is not None else None
    Y, Z = prop.forward(np.asarray(y0, float), np.asarray(z0, float), f, mask)
    _check_guard(Y, Z, blowup_guard)
    return StateTrajectory(y=Y, z=Z, role="state")


def solve_adjoint(
    phi_T: np.ndarray,
    theta_T: np.ndarray,
    coeffs: Coefficients,
    grid: Grid,
    tgrid: TimeGrid,
) -> StateTrajectory:
    """Backward solve of the exact discrete adjoint from terminal data."""
    phi_T = np.asarray(phi_T, float)
    theta_T = np.asarray(theta_T, float)
    if phi_T.shape != (grid.n,) or theta_T.shape != (grid.n,):
        raise InvalidArgumentError("terminal data shape does not match the grid")
    prop = LinearPropagator(coeffs, grid, tgrid)
    Phi, Theta = prop.adjoint(phi_T, theta_T)
    return StateTrajectory(y=Phi, z=Theta, role="adjoint")


def solve_forward_nonlinear(
    u0: np.ndarray,
    v0: np.ndarray,
    control: Control | None,
    coeffs: Coefficients,
    grid: Grid,
    tgrid: TimeGrid,
    blowup_guard: float = 1e8,
) -> StateTrajectory:
    """Solve the chemotaxis system forward in time.

    Implicit Euler for diffusion and the linear reaction; the chemotaxis
    flux ``chi * u * grad v`` takes grad v from the previous time level and
    the implicit u on the faces, all in conservative form.  The steady pair
    ``(c, delta c / gamma)`` is preserved to round-off and the plain nodal
    sum of u times h is conserved exactly when the control vanishes.
    """
    n, m, h, dt = grid.n, tgrid.m, grid.h, tgrid.dt
    chi, gamma, delta = coeffs.chi, coeffs.gamma, coeffs.delta
    U = np.empty((n, m + 1))
    V = np.empty((n, m + 1))
    U[:, 0] = np.asarray(u0, float)
    V[:, 0] = np.asarray(v0, float)

    dl_L, d_L, du_L = _laplacian_diags(n, h)
    z_factor = _TriFactor(dl=-dt * dl_L, d=(1.0 + dt * gamma) - dt * d_L, du=-dt * du_L)

    for k in range(m):
        w_face = chi * (V[1:, k] - V[:-1, k]) / h
        dl_G, d_G, du_G = _drift_diags(w_face, h)
        rhs_u = U[:, k].copy()
        if control is not None:
            rhs_u += dt * np.where(control.mask, control.f[:, k], 0.0)
        u_factor = _TriFactor(
            dl=-dt * dl_L + dt * dl_G,
            d=1.0 - dt * d_L + dt * d_G,
            du=-dt * du_L + dt * du_G,
        )
        u_new = u_factor.solve(rhs_u)
        v_new = z_factor.solve(V[:, k] + dt * delta * u_new)
        U[:, k + 1] = u_new
        V[:, k + 1] = v_new
        if max(np.max(np.abs(u_new)), np.max(np.abs(v_new))) > blowup_guard:
            raise BlowUpError(f"solution magnitude exceeded {blowup_guard:g} at step {k + 1}", time_index=k + 1)
    return StateTrajectory(y=U, z=V, role="state")


def _check_guard(Y: np.ndarray, Z: np.ndarray, guard: float) -> None:
    bad_y = np.abs(Y).max(axis=0) > guard
    bad_z = np.abs(Z).max(axis=0) > guard
    bad = bad_y | bad_z
    if np.any(bad):
        k = int(np.argmax(bad))
        raise BlowUpError(f"solution magnitude exceeded {guard:g} at step {k}", time_index=k)


def discrete_mass(u: np.ndarray, grid: Grid) -> np.ndarray:
    """Conserved discrete mass: plain nodal sum times h, per time node."""
    return grid.h * np.sum(u, axis=0)


@dataclass(frozen=True)
class NormReport:
    l2_q_y: float
    l2_q_z: float
    linf_y: float
    linf_z: float
    l2h1_y: float
    l2h1_z: float
    terminal_l2_y: float
    terminal_l2_z: float

    @property
    def terminal_l2(self) -> float:
        return float(np.hypot(self.terminal_l2_y, self.terminal_l2_z))


def state_norms(traj: StateTrajectory, grid: Grid, tgrid: TimeGrid) -> NormReport:
    """Discrete L2(Q), Linf(Q), L2(0,T;H1) and terminal-slice L2 norms.

    Trapezoid in time; in space, node weights h with half weights at the
    two boundary nodes.  The H1 seminorm uses face differences.
    """
    wx = grid.quad_weights()
    wt = tgrid.quad_weights()
    h = grid.h

    def _report(u: np.ndarray) -> tuple[float, float, float, float]:
        sq_slices = wx @ (u * u)
        l2q = float(np.sqrt(np.sum(wt * sq_slices)))
        linf = float(np.max(np.abs(u)))
        du = (u[1:, :] - u[:-1, :]) / h
        h1_slices = sq_slices + h * np.sum(du * du, axis=0)
        l2h1 = float(np.sqrt(np.sum(wt * h1_slices)))
        term = float(np.sqrt(np.sum(wx * u[:, -1] * u[:, -1])))
        return l2q, linf, l2h1, term

    l2q_y, linf_y, l2h1_y, term_y = _report(traj.y)
    l2q_z, linf_z, l2h1_z, term_z = _report(traj.z)
    return NormReport(
        l2_q_y=l2q_y, l2_q_z=l2q_z, linf_y=linf_y, linf_z=linf_z,
        l2h1_y=l2h1_y, l2h1_z=l2h1_z, terminal_l2_y=term_y, terminal_l2_z=term_z,
    )
