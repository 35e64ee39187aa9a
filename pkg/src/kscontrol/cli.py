"""Subcommand dispatch and deterministic run orchestration.

Subcommands: simulate, control-linear, control-nonlinear,
check-observability, check-carleman, decay-study.  Each run writes its
artifacts plus a manifest into the output directory (config key
``output_dir``, overridable through the ``KSCONTROL_OUTPUT_DIR``
environment variable).  Exit codes: 0 success, 2 config parse error,
3 blow-up, 4 CG failure, 5 degenerate weights, 1 other package errors.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import artifacts as art
from .config import RunConfig, config_hash, parse_config, serialize_config
from .diagnostics import carleman_ratio, decay_study, observability_ratio
from .errors import (
    BlowUpError,
    CGStagnationError,
    ConfigError,
    DegenerateWeightError,
    KscontrolError,
    NotConvergedError,
)
from .fixedpoint import make_trajectory, solve_local_exact
from .grids import DomainSpec, Grid, TimeGrid, make_grid, make_time_grid
from .hum import HUMConfig, control_bound_report, hum_solve
from .pde import constant_coefficients, solve_forward_nonlinear, state_norms
from .weights import build_beta, select_parameters, weight_fields

SUBCOMMANDS = (
    "simulate",
    "control-linear",
    "control-nonlinear",
    "check-observability",
    "check-carleman",
    "decay-study",
)


def _setup(cfg: RunConfig) -> tuple[DomainSpec, Grid, TimeGrid]:
    domain = cfg.domain()
    return domain, make_grid(domain, cfg.n), make_time_grid(domain, cfg.m)


def _profile(grid: Grid, k: int = 1) -> np.ndarray:
    xi = (grid.x - grid.x_lo) / (grid.x_hi - grid.x_lo)
    return np.cos(k * np.pi * xi)


def _weights_for(cfg: RunConfig, beta, tgrid: TimeGrid, a_norm: float, b_norm: float):
    lam, s = select_parameters(
        beta, a_norm, b_norm, tgrid, mode=cfg.weight_mode,
        c_lambda=cfg.c_lambda, c_s=cfg.c_s, lam=cfg.lam, s=cfg.s,
        exponent_budget=cfg.exponent_budget,
    )
    return weight_fields(beta, lam, s, tgrid)


def _hum_config(cfg: RunConfig, weights) -> HUMConfig:
    return HUMConfig(
        weights=weights, epsilon=cfg.epsilon, cg_tol=cfg.cg_tol,
        cg_max_iter=cfg.cg_max_iter, weight_exponent=cfg.weight_exponent,
        preconditioner=cfg.preconditioner,
    )


def _nonlinear_initial(cfg: RunConfig, grid: Grid) -> tuple[np.ndarray, np.ndarray]:
    u0 = cfg.u0_base + cfg.u0_amp * _profile(grid)
    v_base = cfg.v0_base if cfg.v0_base is not None else cfg.delta * cfg.u0_base / cfg.gamma
    v0 = v_base + cfg.v0_amp * _profile(grid, k=2)
    return u0, v0


def _linear_initial(cfg: RunConfig, grid: Grid) -> tuple[np.ndarray, np.ndarray]:
    y0 = cfg.y0_base + cfg.y0_amp * _profile(grid)
    z0 = cfg.z0_base + cfg.z0_amp * _profile(grid, k=2)
    return y0, z0


def _run_simulate(cfg: RunConfig, out: Path) -> list[str]:
    domain, grid, tgrid = _setup(cfg)
    coeffs = constant_coefficients(grid, tgrid, chi=cfg.chi, gamma=cfg.gamma, delta=cfg.delta)
    u0, v0 = _nonlinear_initial(cfg, grid)
    traj = solve_forward_nonlinear(u0, v0, None, coeffs, grid, tgrid, blowup_guard=cfg.blowup_guard)
    art.write_trajectory_csv(out / "trajectory.csv", traj, grid, tgrid)
    art.write_json(out / "norms.json", art.norm_diagnostics(state_norms(traj, grid, tgrid)))
    return ["trajectory.csv", "norms.json"]


def _run_control_linear(cfg: RunConfig, out: Path) -> list[str]:
    domain, grid, tgrid = _setup(cfg)
    coeffs = constant_coefficients(grid, tgrid, a=cfg.a_const, b=cfg.b_const,
                                   chi=cfg.chi, gamma=cfg.gamma, delta=cfg.delta)
    beta = build_beta(domain, grid)
    weights = _weights_for(cfg, beta, tgrid, abs(cfg.a_const), abs(cfg.b_const))
    y0, z0 = _linear_initial(cfg, grid)
    result = hum_solve(y0, z0, _hum_config(cfg, weights), coeffs, domain, grid, tgrid)
    bound = control_bound_report(result, coeffs.a_norm, coeffs.b_norm, tgrid.T)
    diag = art.hum_diagnostics(result)
    diag["c_hat"] = bound.c_hat
    art.write_control_csv(out / "control.csv", result.f, grid, tgrid)
    art.write_trajectory_csv(out / "trajectory.csv", result.traj, grid, tgrid)
    art.write_weights_csv(out / "weights.csv", weights, grid, tgrid)
    art.write_json(out / "diagnostics.json", diag)
    return ["control.csv", "trajectory.csv", "weights.csv", "diagnostics.json"]


def _run_control_nonlinear(cfg: RunConfig, out: Path) -> list[str]:
    domain, grid, tgrid = _setup(cfg)
    coeffs = constant_coefficients(grid, tgrid, chi=cfg.chi, gamma=cfg.gamma, delta=cfg.delta)
    n = grid.n
    ubar0 = np.full(n, cfg.target_base)
    vbar0 = np.full(n, cfg.delta * cfg.target_base / cfg.gamma)
    target = make_trajectory(ubar0, vbar0, coeffs, grid, tgrid)
    u0 = ubar0 + cfg.perturb_amp * _profile(grid)
    v0 = vbar0 + 0.5 * cfg.perturb_amp * _profile(grid, k=2)
    beta = build_beta(domain, grid)
    weights = _weights_for(cfg, beta, tgrid,
                           cfg.chi * (target.ubar_sup + 1.0), cfg.chi * target.grad_vbar_sup)
    report = solve_local_exact(
        u0, v0, target, _hum_config(cfg, weights), coeffs, domain, grid, tgrid,
        fp_tol=cfg.fp_tol, fp_max_outer=cfg.fp_max_outer, c0=cfg.c0, c1=cfg.c1,
        keep_iterates=cfg.fp_verbose,
    )
    art.write_control_csv(out / "control.csv", report.f, grid, tgrid)
    art.write_trajectory_csv(out / "trajectory.csv", report.controlled, grid, tgrid)
    art.write_json(out / "fixedpoint.json", art.fixedpoint_diagnostics(report))
    files = ["control.csv", "trajectory.csv", "fixedpoint.json"]
    for idx, iterate in enumerate(report.iterates, start=1):
        name = f"perturbation_{idx:03d}.csv"
        art.write_trajectory_csv(out / name, iterate, grid, tgrid)
        files.append(name)
    return files


def _run_inequality(cfg: RunConfig, out: Path, kind: str) -> list[str]:
    domain, grid, tgrid = _setup(cfg)
    coeffs = constant_coefficients(grid, tgrid, a=cfg.a_const, b=cfg.b_const,
                                   chi=cfg.chi, gamma=cfg.gamma, delta=cfg.delta)
    beta = build_beta(domain, grid)
    weights = _weights_for(cfg, beta, tgrid, abs(cfg.a_const), abs(cfg.b_const))
    probe = observability_ratio if kind == "observability" else carleman_ratio
    report = probe(cfg.samples, cfg.seed, coeffs, weights, domain, grid, tgrid)
    art.write_samples_csv(out / "samples.csv", report)
    art.write_json(out / "summary.json", art.inequality_summary(report))
    return ["samples.csv", "summary.json"]


def _run_decay_study(cfg: RunConfig, out: Path) -> list[str]:
    domain, grid, tgrid = _setup(cfg)
    coeffs = constant_coefficients(grid, tgrid, a=cfg.a_const, b=cfg.b_const,
                                   chi=cfg.chi, gamma=cfg.gamma, delta=cfg.delta)
    beta = build_beta(domain, grid)
    weights = _weights_for(cfg, beta, tgrid, abs(cfg.a_const), abs(cfg.b_const))
    y0, z0 = _linear_initial(cfg, grid)
    study = decay_study(cfg.epsilons, y0, z0, _hum_config(cfg, weights),
                        coeffs, domain, grid, tgrid)
    art.write_decay_csv(out / "decay.csv", study)
    art.write_json(out / "summary.json", art.decay_summary(study))
    return ["decay.csv", "summary.json"]


_RUNNERS = {
    "simulate": _run_simulate,
    "control-linear": _run_control_linear,
    "control-nonlinear": _run_control_nonlinear,
    "check-observability": lambda cfg, out: _run_inequality(cfg, out, "observability"),
    "check-carleman": lambda cfg, out: _run_inequality(cfg, out, "carleman"),
    "decay-study": _run_decay_study,
}

_EXIT_CODES = (
    (ConfigError, 2),
    (BlowUpError, 3),
    ((CGStagnationError, NotConvergedError), 4),
    (DegenerateWeightError, 5),
    (KscontrolError, 1),
)


def _fail(exc: Exception, code: int) -> int:
    payload = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    for attr in ("time_index", "line", "stage"):
        if hasattr(exc, attr):
            payload[attr] = getattr(exc, attr)
    print(json.dumps(payload, sort_keys=True))
    return code


def run_subcommand(name: str, cfg: RunConfig) -> int:
    """Execute one subcommand; returns the process exit status."""
    out = Path(os.environ.get("KSCONTROL_OUTPUT_DIR", cfg.output_dir))
    started = time.perf_counter()
    try:
        out.mkdir(parents=True, exist_ok=True)
        files = _RUNNERS[name](cfg, out)
        art.write_manifest(out, name, config_hash(cfg), serialize_config(cfg), files)
    except Exception as exc:  # noqa: BLE001 - mapped to exit codes below
        for types, code in _EXIT_CODES:
            if isinstance(exc, types):
                return _fail(exc, code)
        raise
    elapsed = time.perf_counter() - started
    print(f"{name}: wrote {len(files) + 1} files to {out} ({elapsed:.2f}s)")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="kscontrol",
        description="Null controls and local-exact controls for a 1-D chemotaxis system",
    )
    parser.add_argument("subcommand", choices=SUBCOMMANDS)
    parser.add_argument("--config", type=str, default=None,
                        help="path to a key=value config file (defaults apply when absent)")
    args = parser.parse_args(argv)

    try:
        if args.config is None:
            cfg = RunConfig()
        else:
            cfg = parse_config(Path(args.config).read_text())
    except ConfigError as exc:
        return _fail(exc, 2)
    except OSError as exc:
        return _fail(ConfigError(f"cannot read config file: {exc}"), 2)

    return run_subcommand(args.subcommand, cfg)


if __name__ == "__main__":
    sys.exit(main())
