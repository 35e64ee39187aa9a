from types import SimpleNamespace

import numpy as np
import pytest

from kscontrol.errors import CGStagnationError, NotConvergedError
from kscontrol.grids import make_grid, make_time_grid, omega_mask, pair_l2
from kscontrol.hum import (
    Gramian,
    HUMConfig,
    _cg,
    control_bound_report,
    gramian_apply,
    hum_solve,
)
from kscontrol.pde import constant_coefficients
from kscontrol.weights import build_beta, select_parameters, weight_fields

from helpers import canonical_domain, dense_null_control, smooth_pair


def _setup(n=16, m=16, budget=8.0, a=0.3, b=0.1, eps=1e-4, T=0.5, cg_tol=1e-12):
    if n < 24:
        # coarse grids need a wider inner region to hold three nodes
        from kscontrol.grids import DomainSpec
        dom = DomainSpec(0.0, 1.0, (0.15, 0.85), (0.25, 0.75), T=T)
    else:
        dom = canonical_domain(T=T)
    grid, tgrid = make_grid(dom, n), make_time_grid(dom, m)
    beta = build_beta(dom, grid)
    lam, s = select_parameters(beta, abs(a), abs(b), tgrid, mode="practice",
                               exponent_budget=budget)
    weights = weight_fields(beta, lam, s, tgrid)
    cfg = HUMConfig(weights=weights, epsilon=eps, cg_tol=cg_tol)
    coeffs = constant_coefficients(grid, tgrid, a=a, b=b)
    return dom, grid, tgrid, cfg, coeffs


def test_gramian_zero_maps_to_zero():
    dom, grid, tgrid, cfg, coeffs = _setup()
    out = gramian_apply(np.zeros(2 * grid.n), cfg, coeffs, dom, grid, tgrid)
    assert np.all(out == 0.0)


def test_gramian_symmetry_random_pairs():
    dom, grid, tgrid, cfg, coeffs = _setup(n=16, m=12)
    gram = Gramian(cfg, coeffs, dom, grid, tgrid)
    rng = np.random.default_rng(11)
    for _ in range(50):
        p = rng.standard_normal(2 * grid.n)
        q = rng.standard_normal(2 * grid.n)
        gp, gq = gram.apply(p), gram.apply(q)
        lhs, rhs = q @ gp, p @ gq
        assert abs(lhs - rhs) <= 1e-11 * max(abs(lhs), abs(rhs))


def test_gramian_positivity():
    dom, grid, tgrid, cfg, coeffs = _setup()
    gram = Gramian(cfg, coeffs, dom, grid, tgrid)
    rng = np.random.default_rng(5)
    for _ in range(20):
        p = rng.standard_normal(2 * grid.n)
        assert p @ gram.apply(p) >= cfg.epsilon * (p @ p) * (1.0 - 1e-12)


def test_hum_zero_data_trivial():
    dom, grid, tgrid, cfg, coeffs = _setup()
    res = hum_solve(np.zeros(grid.n), np.zeros(grid.n), cfg, coeffs, dom, grid, tgrid)
    assert res.cg_iterations == 0
    assert res.terminal_l2 == 0.0
    assert np.all(res.f.f == 0.0)


def test_terminal_norm_decreases_with_epsilon():
    dom, grid, tgrid, cfg, coeffs = _setup(n=32, m=32)
    y0, z0 = smooth_pair(make_grid(dom, 32))
    res_coarse = hum_solve(y0, z0, HUMConfig(weights=cfg.weights, epsilon=1e-2),
                           coeffs, dom, grid, tgrid)
    res_fine = hum_solve(y0, z0, HUMConfig(weights=cfg.weights, epsilon=1e-6),
                         coeffs, dom, grid, tgrid)
    assert res_fine.terminal_l2 < res_coarse.terminal_l2


@pytest.mark.parametrize("n,m", [(8, 8), (16, 16), (10, 30), (25, 15)])
def test_kkt_oracle_equivalence(n, m):
    assert n * (m + 1) <= 400
    dom, grid, tgrid, cfg, coeffs = _setup(n=n, m=m, budget=8.0, eps=1e-4)
    y0, z0 = smooth_pair(grid)
    res = hum_solve(y0, z0, cfg, coeffs, dom, grid, tgrid)

    gram = Gramian(cfg, coeffs, dom, grid, tgrid)
    f_dense, terminal_dense = dense_null_control(
        y0, z0, cfg.epsilon, gram.rho_masked, coeffs, dom, grid, tgrid)

    f_scale = np.max(np.abs(f_dense))
    assert np.max(np.abs(res.f.f - f_dense)) <= 1e-8 * f_scale
    terminal = np.concatenate([res.traj.y[:, -1], res.traj.z[:, -1]])
    t_scale = np.linalg.norm(terminal_dense)
    assert np.linalg.norm(terminal - terminal_dense) <= 1e-8 * t_scale


def test_optimality_identity():
    dom, grid, tgrid, cfg, coeffs = _setup(n=32, m=32, eps=1e-5, cg_tol=1e-8)
    y0, z0 = smooth_pair(grid)
    res = hum_solve(y0, z0, cfg, coeffs, dom, grid, tgrid)
    assert not res.optimality_limited
    assert abs(res.optimality_ratio - 1.0) <= 10.0 * cfg.cg_tol
    # the identity is vectorwise: (y, z)(T) = -eps (phi_T, theta_T)
    resid = pair_l2(res.traj.y[:, -1] + cfg.epsilon * res.phi_T,
                    res.traj.z[:, -1] + cfg.epsilon * res.theta_T, grid)
    assert resid <= 10.0 * cfg.cg_tol * cfg.epsilon * res.pT_l2


def test_dual_value_history_nonincreasing():
    dom, grid, tgrid, cfg, coeffs = _setup(n=32, m=32, eps=1e-6)
    y0, z0 = smooth_pair(grid)
    res = hum_solve(y0, z0, cfg, coeffs, dom, grid, tgrid)
    hist = np.array(res.dual_value_history)
    scale = np.max(np.abs(hist))
    assert np.all(np.diff(hist) <= 1e-10 * scale)


def test_control_support():
    dom, grid, tgrid, cfg, coeffs = _setup(n=32, m=32)
    y0, z0 = smooth_pair(grid)
    res = hum_solve(y0, z0, cfg, coeffs, dom, grid, tgrid)
    mask = omega_mask(dom, grid)
    assert np.all(res.f.f[~mask, :] == 0.0)
    assert np.all(res.f.f[:, 0] == 0.0)
    assert np.all(res.f.f[:, -1] == 0.0)
    assert np.max(np.abs(res.f.f)) > 0.0


def test_control_bound_report_paths():
    dom, grid, tgrid, cfg, coeffs = _setup(n=32, m=32)
    y0, z0 = smooth_pair(grid)
    res1 = hum_solve(y0, z0, cfg, coeffs, dom, grid, tgrid)
    res2 = hum_solve(y0, z0, cfg, coeffs, dom, grid, tgrid)
    rep1 = control_bound_report(res1, coeffs.a_norm, coeffs.b_norm, tgrid.T)
    rep2 = control_bound_report(res2, coeffs.a_norm, coeffs.b_norm, tgrid.T)
    assert not rep1.undefined
    assert rep1.c_hat == rep2.c_hat  # determinism, bit for bit

    res0 = hum_solve(np.zeros(grid.n), np.zeros(grid.n), cfg, coeffs, dom, grid, tgrid)
    rep0 = control_bound_report(res0, coeffs.a_norm, coeffs.b_norm, tgrid.T)
    assert rep0.undefined


def test_c_hat_finite_across_horizons():
    for T in (0.25, 0.5, 1.0):
        dom, grid, tgrid, cfg, coeffs = _setup(n=32, m=32, T=T)
        y0, z0 = smooth_pair(grid)
        res = hum_solve(y0, z0, cfg, coeffs, dom, grid, tgrid)
        rep = control_bound_report(res, coeffs.a_norm, coeffs.b_norm, T)
        assert np.isfinite(rep.c_hat)


class _MatrixGram:
    def __init__(self, mat):
        self.mat = mat

    def apply(self, p):
        return self.mat @ p


def test_cg_stagnation_detector():
    # spectrum spanning 16 decades stalls CG long before a 1e-14 tolerance
    rng = np.random.default_rng(0)
    dim = 240
    q, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
    eigs = np.logspace(0, -16, dim)
    mat = (q * eigs) @ q.T
    cfg = SimpleNamespace(epsilon=1e-30, cg_tol=1e-14, cg_max_iter=500, preconditioner="none")
    with pytest.raises(CGStagnationError) as err:
        _cg(_MatrixGram(mat), rng.standard_normal(dim), cfg)
    assert len(err.value.history) >= 50


def test_cg_iteration_cap():
    dom, grid, tgrid, cfg, coeffs = _setup(n=32, m=32)
    tight = HUMConfig(weights=cfg.weights, epsilon=1e-6, cg_tol=1e-12, cg_max_iter=1)
    y0, z0 = smooth_pair(grid)
    with pytest.raises(NotConvergedError) as err:
        hum_solve(y0, z0, tight, coeffs, dom, grid, tgrid)
    assert "x" in err.value.partial
