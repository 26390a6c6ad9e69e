"""Run configuration: flat key/value files and command-line flags.

User-facing units are GeV, eV, angstrom and microradian; conversion to
natural units happens once, in :meth:`RunConfig.beam` and :meth:`RunConfig.channel`.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import asdict, dataclass, fields, replace
from typing import Optional

from .channel import BeamParams, ChannelModel


class ConfigError(ValueError):
    pass


MODES = ("angular", "spectrum", "verify")
INTERFERENCE = ("on", "off", "both")
FORMATS = ("csv", "jsonl")
KINEMATICS = ("small_angle", "exact")


@dataclass(frozen=True)
class RunConfig:
    energy_gev: float
    v0_ev: float = 23.0
    dp_angstrom: float = 1.92
    theta_in_urad: Optional[float] = None  # None -> half the critical angle
    n_levels: Optional[int] = None  # None -> every bound level
    j_max: int = 5
    theta_points: int = 200
    phi_points: int = 64
    omega_bins: int = 400
    mode: str = "angular"
    interference: str = "both"
    format: str = "csv"
    out: Optional[str] = None
    broaden_ev: Optional[float] = None
    kinematics: str = "small_angle"

    def beam(self) -> BeamParams:
        return BeamParams(self.energy_gev * 1e9, incidence_angle=self.theta_in_urad * 1e-6)

    def channel(self) -> ChannelModel:
        return ChannelModel.from_angstrom(self.v0_ev, self.dp_angstrom, self.n_levels)

    def echo(self) -> dict:
        """Resolved configuration in file-key form; ``out`` is left out."""
        d = {k.replace("_", "-"): v for k, v in asdict(self).items() if k != "out"}
        return {k: v for k, v in d.items() if v is not None}


_FIELDS = {f.name: f for f in fields(RunConfig)}
_INT = {"n_levels", "j_max", "theta_points", "phi_points", "omega_bins"}
_FLOAT = {"energy_gev", "v0_ev", "dp_angstrom", "theta_in_urad", "broaden_ev"}
_CHOICES = {"mode": MODES, "interference": INTERFERENCE, "format": FORMATS,
            "kinematics": KINEMATICS}


def _key(raw: str) -> str:
    key = raw.strip().replace("-", "_")
    if key not in _FIELDS:
        raise ConfigError(f"unknown configuration key {raw.strip()!r}")
    return key


def _coerce(key: str, value):
    if value is None:
        return None
    try:
        if key in _INT:
            f = float(value)
            if f != int(f):
                raise ValueError
            return int(f)
        if key in _FLOAT:
            return float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{key.replace('_', '-')}: cannot read {value!r} as a number") from None
    return str(value)


def read_config_file(path: str) -> dict:
    """Parse ``key = value`` lines.

    Output tables carry their configuration as ``# config: key = value``
    comment lines (CSV) or a leading ``{"config": ...}`` object (JSON lines),
    and both are accepted here, so a table reproduces its own run.
    """
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    out = {}
    embedded = any(ln.startswith("# config:") or ln.startswith('{"config"') for ln in lines)
    for num, line in enumerate(lines, 1):
        s = line.strip()
        if s.startswith("# config:"):
            s = s[len("# config:"):].strip()
        elif s.startswith('{"config"'):
            for k, v in json.loads(s)["config"].items():
                out[_key(k)] = v
            continue
        elif not s or s.startswith("#") or embedded:
            continue
        sep = "=" if "=" in s else ":" if ":" in s else None
        if sep is None:
            raise ConfigError(f"{path}:{num}: expected 'key = value'")
        k, v = s.split(sep, 1)
        out[_key(k)] = v.strip()
    return out


def load_config(flags: dict, path: Optional[str] = None) -> RunConfig:
    """Merge file values and flags (flags win), fill defaults, validate."""
    values = {}
    if path is not None:
        try:
            values.update(read_config_file(path))
        except OSError as exc:
            raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    for k, v in flags.items():
        if v is not None:
            values[_key(k)] = v
    values = {k: _coerce(k, v) for k, v in values.items()}
    if values.get("energy_gev") is None:
        raise ConfigError("missing required field energy-gev")
    cfg = RunConfig(**values)
    return validate(cfg)


def validate(cfg: RunConfig) -> RunConfig:
    for name in ("energy_gev", "v0_ev", "dp_angstrom"):
        v = getattr(cfg, name)
        if not (math.isfinite(v) and v > 0):
            raise ConfigError(f"{name.replace('_', '-')} must be positive, got {v}")
    for name in ("j_max", "theta_points", "phi_points", "omega_bins"):
        if getattr(cfg, name) < 1:
            raise ConfigError(f"{name.replace('_', '-')} must be at least 1")
    if cfg.theta_points < 2 or cfg.phi_points < 2:
        raise ConfigError("theta-points and phi-points must be at least 2")
    if cfg.n_levels is not None and cfg.n_levels < 1:
        raise ConfigError("n-levels must be at least 1")
    if cfg.broaden_ev is not None and not cfg.broaden_ev > 0:
        raise ConfigError(f"broaden-ev must be positive, got {cfg.broaden_ev}")
    for name, choices in _CHOICES.items():
        if getattr(cfg, name) not in choices:
            raise ConfigError(f"{name} must be one of {', '.join(choices)}")
    try:
        beam0 = BeamParams(cfg.energy_gev * 1e9)
        model = cfg.channel()
        theta_p = model.critical_angle(beam0)
        if cfg.theta_in_urad is None:
            cfg = replace(cfg, theta_in_urad=0.5 * theta_p * 1e6)
        if abs(cfg.theta_in_urad) * 1e-6 > theta_p:
            warnings.warn(
                f"theta-in {cfg.theta_in_urad} urad exceeds the critical angle "
                f"{theta_p * 1e6:.4g} urad", stacklevel=2)
        beam = cfg.beam()
        top = model.n_levels(beam)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if cfg.j_max > top:
        raise ConfigError(f"j-max={cfg.j_max} exceeds the retained levels ({top})")
    return cfg
