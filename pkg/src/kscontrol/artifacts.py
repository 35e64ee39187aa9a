"""Artifact writers: CSV tables, flat JSON diagnostics and the run manifest.

CSV: comma-separated, '.' decimal, mandatory header, 17 significant digits.
JSON: flat snake_case keys, sorted, NaN mapped to null.  Identical inputs
produce byte-identical files; nothing time- or machine-dependent is written.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from . import __version__
from .diagnostics import DecayStudy, InequalityReport
from .fixedpoint import FixedPointReport
from .grids import Grid, TimeGrid
from .hum import HUMResult
from .pde import Control, NormReport, StateTrajectory
from .weights import CarlemanWeights

_FMT = "%.17g"


def _write_table(path: Path, header: list[str], columns: list[np.ndarray]) -> None:
    rows = len(columns[0])
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for r in range(rows):
            fh.write(",".join(_FMT % col[r] for col in columns) + "\n")


def _xt_columns(grid: Grid, tgrid: TimeGrid) -> tuple[np.ndarray, np.ndarray]:
    x = np.repeat(grid.x, tgrid.m + 1)
    t = np.tile(tgrid.t, grid.n)
    return x, t


def write_trajectory_csv(path: Path, traj: StateTrajectory, grid: Grid, tgrid: TimeGrid) -> None:
    x, t = _xt_columns(grid, tgrid)
    _write_table(path, ["x", "t", "y", "z"], [x, t, traj.y.ravel(), traj.z.ravel()])


def write_control_csv(path: Path, control: Control, grid: Grid, tgrid: TimeGrid) -> None:
    x, t = _xt_columns(grid, tgrid)
    _write_table(path, ["x", "t", "f"], [x, t, control.f.ravel()])


def write_weights_csv(path: Path, weights: CarlemanWeights, grid: Grid, tgrid: TimeGrid) -> None:
    x, t = _xt_columns(grid, tgrid)
    beta = np.repeat(weights.beta, tgrid.m + 1)
    _write_table(
        path,
        ["x", "t", "beta", "alpha", "phi_w", "log_e2sa"],
        [x, t, beta, weights.alpha.ravel(), weights.phi_w.ravel(), weights.log_e2sa.ravel()],
    )


def write_samples_csv(path: Path, report: InequalityReport) -> None:
    idx = np.arange(report.sample_count, dtype=float)
    _write_table(path, ["sample", "lhs", "rhs", "ratio"],
                 [idx, report.lhs, report.rhs, report.ratios])


def write_decay_csv(path: Path, study: DecayStudy) -> None:
    eps = np.array([r.epsilon for r in study.rows])
    term = np.array([r.terminal_l2 for r in study.rows])
    flinf = np.array([r.f_linf for r in study.rows])
    fl2 = np.array([r.f_l2 for r in study.rows])
    iters = np.array([float(r.cg_iterations) for r in study.rows])
    _write_table(path, ["epsilon", "terminal_l2", "f_linf", "f_l2", "cg_iterations"],
                 [eps, term, flinf, fl2, iters])


def _jsonable(value):
    if isinstance(value, (np.floating, float)):
        v = float(value)
        return None if not np.isfinite(v) else v
    if isinstance(value, (np.integer, int)):
        return int(value)
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    return value


def write_json(path: Path, payload: dict) -> None:
    with open(path, "w", newline="\n") as fh:
        json.dump(_jsonable(payload), fh, sort_keys=True, indent=2)
        fh.write("\n")


def hum_diagnostics(result: HUMResult) -> dict:
    return {
        "terminal_l2": result.terminal_l2,
        "f_linf": result.f_linf,
        "f_l2": result.f_l2,
        "f_weighted_l2": result.f_weighted_l2,
        "cg_iterations": result.cg_iterations,
        "kappa": result.kappa,
        "pt_l2": result.pT_l2,
        "initial_l2": result.initial_l2,
        "optimality_ratio": result.optimality_ratio,
        "optimality_limited": result.optimality_limited,
        "dual_value_history": list(result.dual_value_history),
        "residual_history": list(result.residual_history),
    }


def norm_diagnostics(report: NormReport) -> dict:
    return {
        "l2_q_y": report.l2_q_y,
        "l2_q_z": report.l2_q_z,
        "linf_y": report.linf_y,
        "linf_z": report.linf_z,
        "l2h1_y": report.l2h1_y,
        "l2h1_z": report.l2h1_z,
        "terminal_l2_y": report.terminal_l2_y,
        "terminal_l2_z": report.terminal_l2_z,
    }


def inequality_summary(report: InequalityReport) -> dict:
    return {
        "kind": report.kind,
        "sample_count": report.sample_count,
        "max_ratio": report.max_ratio,
        "median_ratio": report.median_ratio,
        "empirical_constant": report.empirical_constant,
        "log_max_ratio_over_kappa": report.log_max_ratio_over_kappa,
        "n": report.n,
        "m": report.m,
        "lambda": report.lam,
        "s": report.s,
        "kappa": report.kappa,
        "seed": report.seed,
    }


def decay_summary(study: DecayStudy) -> dict:
    return {
        "slope": study.slope,
        "slope_defined": study.slope_defined,
        "epsilons": [r.epsilon for r in study.rows],
        "terminal_l2": [r.terminal_l2 for r in study.rows],
        "c_hat": [r.c_hat for r in study.rows],
    }


def fixedpoint_diagnostics(report: FixedPointReport) -> dict:
    return {
        "outer_iterations": report.outer_iterations,
        "converged": report.converged,
        "eta_delta_history": list(report.eta_delta_history),
        "terminal_err_u": report.terminal_err_u,
        "terminal_err_v": report.terminal_err_v,
        "uncontrolled_terminal_err_u": report.uncontrolled_terminal_err_u,
        "uncontrolled_terminal_err_v": report.uncontrolled_terminal_err_v,
        "kappa0": report.kappa0,
        "radius_delta": report.radius_delta,
        "initial_size": report.initial_size,
        "within_radius": report.within_radius,
        "final_cg_iterations": report.last_hum.cg_iterations,
        "f_linf": report.last_hum.f_linf,
    }


def sha256_file(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_manifest(out_dir: Path, subcommand: str, cfg_hash: str, cfg_text: str,
                   file_names: list[str]) -> Path:
    """Write the run manifest: full parameters, their hash, and per-file checksums."""
    manifest = {
        "subcommand": subcommand,
        "config_hash": cfg_hash,
        "config": cfg_text.splitlines(),
        "package_version": __version__,
        "files": {name: sha256_file(out_dir / name) for name in sorted(file_names)},
    }
    path = out_dir / "manifest.json"
    write_json(path, manifest)
    return path
