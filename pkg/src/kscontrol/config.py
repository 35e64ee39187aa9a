"""Flat key=value run configuration.

One key per parameter, '#' comments, no nesting; unknown keys are
rejected with their line number.  The same canonical serialization feeds
the config hash in run manifests, so parse/serialize must round-trip.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, fields, replace

from .errors import ConfigError, InvalidDomainError
from .grids import DomainSpec

_POS = ("positive", lambda v: v > 0)
_NONNEG = ("nonnegative", lambda v: v >= 0)
_UNIT_OPEN = ("in (0, 1)", lambda v: 0 < v < 1)
_EXP_OPEN = ("in (1, 2)", lambda v: 1 < v < 2)
_ANY = ("finite", lambda v: True)


@dataclass(frozen=True)
class RunConfig:
    # domain and meshes
    x_lo: float = 0.0
    x_hi: float = 1.0
    omega_lo: float = 0.3
    omega_hi: float = 0.7
    omega_prime_lo: float = 0.4
    omega_prime_hi: float = 0.6
    T: float = 0.5
    n: int = 128
    m: int = 256
    # physics
    chi: float = 1.0
    gamma: float = 1.0
    delta: float = 1.0
    blowup_guard: float = 1e8
    # weight parameters
    weight_mode: str = "practice"
    lam: float | None = None
    s: float | None = None
    c_lambda: float = 1.0
    c_s: float = 1.0
    exponent_budget: float = 40.0
    weight_exponent: float = 1.5
    # penalized control
    epsilon: float = 1e-6
    cg_tol: float = 1e-10
    cg_max_iter: int = 500
    preconditioner: str = "none"
    # linear-run coefficients and initial data
    a_const: float = 0.0
    b_const: float = 0.0
    y0_base: float = 0.0
    y0_amp: float = 1.0
    z0_base: float = 0.0
    z0_amp: float = 0.5
    # nonlinear runs
    u0_base: float = 1.0
    u0_amp: float = 0.0
    v0_base: float | None = None
    v0_amp: float = 0.0
    target_base: float = 1.0
    perturb_amp: float = 0.01
    # fixed point
    fp_tol: float = 1e-8
    fp_max_outer: int = 50
    c0: float = 1.0
    c1: float = 1.0
    fp_verbose: bool = False
    # studies
    epsilons: tuple[float, ...] = (1e-4, 1e-5, 1e-6, 1e-7, 1e-8)
    samples: int = 100
    seed: int = 0
    # output
    output_dir: str = "out"

    def domain(self) -> DomainSpec:
        return DomainSpec(
            x_lo=self.x_lo, x_hi=self.x_hi,
            omega=(self.omega_lo, self.omega_hi),
            omega_prime=(self.omega_prime_lo, self.omega_prime_hi),
            T=self.T,
        )


# key -> (field name, kind, (range description, predicate))
_KEYS: dict[str, tuple[str, str, tuple[str, object]]] = {
    "x_lo": ("x_lo", "float", _ANY),
    "x_hi": ("x_hi", "float", _ANY),
    "omega_lo": ("omega_lo", "float", _ANY),
    "omega_hi": ("omega_hi", "float", _ANY),
    "omega_prime_lo": ("omega_prime_lo", "float", _ANY),
    "omega_prime_hi": ("omega_prime_hi", "float", _ANY),
    "T": ("T", "float", _POS),
    "n": ("n", "int", ("at least 8", lambda v: v >= 8)),
    "m": ("m", "int", ("at least 2", lambda v: v >= 2)),
    "chi": ("chi", "float", _NONNEG),
    "gamma": ("gamma", "float", _POS),
    "delta": ("delta", "float", _NONNEG),
    "blowup_guard": ("blowup_guard", "float", _POS),
    "weight_mode": ("weight_mode", "str", ("'theory' or 'practice'", lambda v: v in ("theory", "practice"))),
    "lambda": ("lam", "opt_float", _POS),
    "s": ("s", "opt_float", _POS),
    "c_lambda": ("c_lambda", "float", _POS),
    "c_s": ("c_s", "float", _POS),
    "exponent_budget": ("exponent_budget", "float", _POS),
    "weight_exponent": ("weight_exponent", "float", _EXP_OPEN),
    "epsilon": ("epsilon", "float", _POS),
    "cg_tol": ("cg_tol", "float", _UNIT_OPEN),
    "cg_max_iter": ("cg_max_iter", "int", ("at least 1", lambda v: v >= 1)),
    "preconditioner": ("preconditioner", "str", ("'none' or 'jacobi'", lambda v: v in ("none", "jacobi"))),
    "a_const": ("a_const", "float", _ANY),
    "b_const": ("b_const", "float", _ANY),
    "y0_base": ("y0_base", "float", _ANY),
    "y0_amp": ("y0_amp", "float", _ANY),
    "z0_base": ("z0_base", "float", _ANY),
    "z0_amp": ("z0_amp", "float", _ANY),
    "u0_base": ("u0_base", "float", _NONNEG),
    "u0_amp": ("u0_amp", "float", _ANY),
    "v0_base": ("v0_base", "opt_float", _NONNEG),
    "v0_amp": ("v0_amp", "float", _ANY),
    "target_base": ("target_base", "float", _NONNEG),
    "perturb_amp": ("perturb_amp", "float", _ANY),
    "fp_tol": ("fp_tol", "float", _POS),
    "fp_max_outer": ("fp_max_outer", "int", ("at least 1", lambda v: v >= 1)),
    "c0": ("c0", "float", _POS),
    "c1": ("c1", "float", _POS),
    "fp_verbose": ("fp_verbose", "bool", _ANY),
    "epsilons": ("epsilons", "floats", ("positive, strictly decreasing",
                                        lambda v: all(e > 0 for e in v)
                                        and all(b < a for a, b in zip(v, v[1:])))),
    "samples": ("samples", "int", ("at least 1", lambda v: v >= 1)),
    "seed": ("seed", "int", _NONNEG),
    "output_dir": ("output_dir", "str", ("nonempty", lambda v: len(v) > 0)),
}

_FIELD_TO_KEY = {f: k for k, (f, _, _) in _KEYS.items()}


def _parse_value(key: str, kind: str, raw: str, line_no: int):
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        if kind == "opt_float":
            return None if raw.lower() == "none" else float(raw)
        if kind == "floats":
            return tuple(float(p) for p in raw.split(",") if p.strip() != "")
        if kind == "bool":
            if raw.lower() in ("true", "false"):
                return raw.lower() == "true"
            raise ValueError(raw)
        return raw
    except ValueError as exc:
        raise ConfigError(f"line {line_no}: malformed value for '{key}': {raw!r}", line=line_no) from exc


def parse_config(text: str) -> RunConfig:
    """Parse key=value lines into a validated RunConfig.

    Raises
    ------
    ConfigError
        Unknown key, malformed number, or range violation, naming the
        offending key and its accepted range with the line number.
    """
    values: dict[str, object] = {}
    for line_no, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {line_no}: expected 'key = value', got {raw_line!r}", line=line_no)
        key, raw = (part.strip() for part in line.split("=", 1))
        if key not in _KEYS:
            raise ConfigError(f"line {line_no}: unknown key '{key}'", line=line_no)
        attr, kind, (desc, pred) = _KEYS[key]
        value = _parse_value(key, kind, raw, line_no)
        if value is not None and not pred(value):
            raise ConfigError(
                f"line {line_no}: '{key}' must be {desc}, got {raw}", line=line_no
            )
        values[attr] = value

    cfg = replace(RunConfig(), **values)
    try:
        cfg.domain()
    except InvalidDomainError as exc:
        raise ConfigError(f"invalid domain geometry: {exc}") from exc
    return cfg


def serialize_config(cfg: RunConfig) -> str:
    """Canonical text form; parse(serialize(cfg)) == cfg."""
    lines = []
    for f in fields(cfg):
        key = _FIELD_TO_KEY[f.name]
        value = getattr(cfg, f.name)
        if value is None:
            value_text = "none"
        elif isinstance(value, bool):
            value_text = "true" if value else "false"
        elif isinstance(value, tuple):
            value_text = ",".join(repr(float(e)) for e in value)
        elif isinstance(value, float):
            value_text = repr(value)
        else:
            value_text = str(value)
        lines.append(f"{key} = {value_text}")
    return "\n".join(lines) + "\n"


def config_hash(cfg: RunConfig) -> str:
    return hashlib.sha256(serialize_config(cfg).encode()).hexdigest()
