"""Run configuration: flat ``section.key = value`` text, strictly validated.

Unknown keys are errors, not warnings; every value is parsed and validated
through the module invariants at load time, so a config that loads is a
config that runs.  ``serialize_config`` emits a canonical echo whose parse
is an equivalent RunConfig (the round trip the metadata sidecar relies on).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .exceptions import ConfigError, InvalidProfile
from .kernels import WeightProfile
from .modal import BeamParams, ModalWeight
from .sim import SimConfig

__all__ = ["RunConfig", "parse_config", "serialize_config", "load_config"]

_INITIAL_BUILTINS = ("zero", "parabola")  # plus single_mode:<k>


@dataclass(frozen=True)
class RunConfig:
    params: BeamParams = field(default_factory=BeamParams)
    profile: WeightProfile = field(default_factory=WeightProfile)
    sim: SimConfig = field(default_factory=SimConfig)
    initial: str = "single_mode:1"
    initial_scale: float = 1.0
    grid_points: int = 257
    quadrature_points: int = 1025
    out_dir: str = "out"
    out_format: str = "wide"
    figures: bool = True
    residual_tol: float = 1e-9
    oracle_tol: float = 1e-8

    def __post_init__(self):
        if self.sim.N != self.profile.N:
            raise ConfigError(
                f"simulation order {self.sim.N} differs from weight order {self.profile.N}"
            )
        if self.out_format not in ("wide", "long"):
            raise ConfigError(f"output format must be wide or long, got {self.out_format!r}")
        if self.grid_points < 2:
            raise ConfigError(f"grid.points must be >= 2, got {self.grid_points}")
        if self.quadrature_points < 5 or (self.quadrature_points - 1) % 4 != 0:
            raise ConfigError(
                f"quadrature.points must be 4k + 1 with k >= 1, got {self.quadrature_points}"
            )
        if not self.residual_tol > 0.0 or not self.oracle_tol > 0.0:
            raise ConfigError("tolerances must be positive")
        _parse_initial_label(self.initial)

    def with_modes(self, N: int) -> "RunConfig":
        return replace(
            self,
            profile=replace(self.profile, N=N),
            sim=replace(self.sim, N=N),
        )


def _parse_initial_label(label: str) -> None:
    if label in _INITIAL_BUILTINS:
        return
    if label.startswith("single_mode:"):
        try:
            k = int(label.split(":", 1)[1])
        except ValueError:
            raise ConfigError(f"bad initial data spec {label!r}") from None
        if k < 1:
            raise ConfigError(f"single_mode index must be >= 1, got {k}")
        return
    raise ConfigError(
        f"unknown initial data {label!r}; use zero, parabola or single_mode:<k>"
    )


def _parse_float(key: str, raw: str) -> float:
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"{key}: expected a number, got {raw!r}") from None


def _parse_int(key: str, raw: str) -> int:
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"{key}: expected an integer, got {raw!r}") from None


def _parse_bool(key: str, raw: str) -> bool:
    low = raw.lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ConfigError(f"{key}: expected true/false, got {raw!r}")


def _parse_opt_float(key: str, raw: str) -> float | None:
    if raw.lower() == "auto":
        return None
    return _parse_float(key, raw)


def _parse_mask(key: str, raw: str):
    if raw.lower() == "all":
        return None
    try:
        return frozenset(int(part) for part in raw.split(",") if part.strip())
    except ValueError:
        raise ConfigError(f"{key}: expected 'all' or comma-separated mode indices, got {raw!r}") from None


def _parse_base(key: str, raw: str) -> ModalWeight:
    if raw.lower() == "identity":
        return ModalWeight(1.0, 0.0, 1.0)
    parts = [p.strip() for p in raw.split(",")]
    if len(parts) != 3:
        raise ConfigError(f"{key}: expected 'identity' or 'q11,q12,q22', got {raw!r}")
    return ModalWeight(*(_parse_float(key, p) for p in parts))


_KEYS = (
    "beam.alpha",
    "beam.beta",
    "beam.R",
    "weights.q",
    "weights.r",
    "weights.N",
    "weights.mask",
    "weights.base",
    "sim.mode",
    "sim.dt",
    "sim.horizon",
    "sim.input_convention",
    "sim.sign_convention",
    "sim.c_mode",
    "sim.initial",
    "sim.initial_scale",
    "grid.points",
    "quadrature.points",
    "output.dir",
    "output.format",
    "output.figures",
    "tol.residual",
    "tol.oracle",
)


def parse_config(text: str) -> RunConfig:
    """Parse flat key=value text into a validated RunConfig."""
    values: dict[str, str] = {}
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value, got {raw_line!r}")
        key, _, raw = line.partition("=")
        key = key.strip()
        raw = raw.strip()
        if key not in _KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        values[key] = raw

    def take(key, parse, default):
        return parse(key, values[key]) if key in values else default

    try:
        params = BeamParams(
            alpha=take("beam.alpha", _parse_float, 0.0),
            beta=take("beam.beta", _parse_float, 1.0),
            R=take("beam.R", _parse_float, 1.0),
        )
        N = take("weights.N", _parse_int, 32)
        profile = WeightProfile(
            q=take("weights.q", _parse_float, 1.0),
            r=take("weights.r", _parse_float, 9.0),
            N=N,
            mask=take("weights.mask", _parse_mask, None),
            base=take("weights.base", _parse_base, ModalWeight(1.0, 0.0, 1.0)),
        )
        sim = SimConfig(
            mode=values.get("sim.mode", "decoupled"),
            N=N,
            dt=take("sim.dt", _parse_opt_float, None),
            horizon=take("sim.horizon", _parse_opt_float, None),
            input_convention=values.get("sim.input_convention", "paper_beta"),
            sign_convention=values.get("sim.sign_convention", "paper"),
            c_mode=take("sim.c_mode", _parse_opt_float, None),
        )
        return RunConfig(
            params=params,
            profile=profile,
            sim=sim,
            initial=values.get("sim.initial", "single_mode:1"),
            initial_scale=take("sim.initial_scale", _parse_float, 1.0),
            grid_points=take("grid.points", _parse_int, 257),
            quadrature_points=take("quadrature.points", _parse_int, 1025),
            out_dir=values.get("output.dir", "out"),
            out_format=values.get("output.format", "wide"),
            figures=take("output.figures", _parse_bool, True),
            residual_tol=take("tol.residual", _parse_float, 1e-9),
            oracle_tol=take("tol.oracle", _parse_float, 1e-8),
        )
    except (ValueError, InvalidProfile) as exc:
        raise ConfigError(str(exc)) from exc


def _fmt(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return repr(x)
    return str(x)


def serialize_config(cfg: RunConfig) -> str:
    """Canonical text form; parse_config(serialize_config(cfg)) == cfg."""
    mask = "all" if cfg.profile.mask is None else ",".join(
        str(n) for n in sorted(cfg.profile.mask)
    )
    base = cfg.profile.base
    lines = [
        f"beam.alpha = {_fmt(cfg.params.alpha)}",
        f"beam.beta = {_fmt(cfg.params.beta)}",
        f"beam.R = {_fmt(cfg.params.R)}",
        f"weights.q = {_fmt(cfg.profile.q)}",
        f"weights.r = {_fmt(cfg.profile.r)}",
        f"weights.N = {cfg.profile.N}",
        f"weights.mask = {mask}",
        f"weights.base = {_fmt(base.q11)},{_fmt(base.q12)},{_fmt(base.q22)}",
        f"sim.mode = {cfg.sim.mode}",
        f"sim.dt = {'auto' if cfg.sim.dt is None else _fmt(cfg.sim.dt)}",
        f"sim.horizon = {'auto' if cfg.sim.horizon is None else _fmt(cfg.sim.horizon)}",
        f"sim.input_convention = {cfg.sim.input_convention}",
        f"sim.sign_convention = {cfg.sim.sign_convention}",
        f"sim.c_mode = {'auto' if cfg.sim.c_mode is None else _fmt(cfg.sim.c_mode)}",
        f"sim.initial = {cfg.initial}",
        f"sim.initial_scale = {_fmt(cfg.initial_scale)}",
        f"grid.points = {cfg.grid_points}",
        f"quadrature.points = {cfg.quadrature_points}",
        f"output.dir = {cfg.out_dir}",
        f"output.format = {cfg.out_format}",
        f"output.figures = {_fmt(cfg.figures)}",
        f"tol.residual = {_fmt(cfg.residual_tol)}",
        f"tol.oracle = {_fmt(cfg.oracle_tol)}",
    ]
    return "\n".join(lines) + "\n"


def load_config(path) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)
