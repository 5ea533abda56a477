"""Configuration files, CSV series/sweep tables and run manifests."""

from __future__ import annotations

import csv
import json
import math
import platform
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .model import Channel, SimulationParams, validate
from .sse import MagnetizationSeries

__all__ = [
    "CONFIG_KEYS",
    "ConfigError",
    "RunManifest",
    "parse_config",
    "read_config_file",
    "read_series",
    "write_series",
    "write_sweep",
]

SERIES_HEADER = ("t", "sigma_z", "stderr")
SWEEP_HEADER = ("gamma_in", "omega_fit", "gamma_fit", "omega_niba", "gamma_niba", "damping_class")

_CONVERTERS = {
    "delta": float,
    "alpha": float,
    "omega_c": float,
    "gamma_phi": float,
    "gamma_x": float,
    "t_max": float,
    "dt": float,
    "m_max": int,
    "n_traj": int,
    "seed": int,
    "channel": Channel,
}
CONFIG_KEYS = tuple(_CONVERTERS)
_REQUIRED = ("delta", "alpha", "omega_c")


class ConfigError(ValueError):
    pass


def _convert(key: str, raw, where: str):
    try:
        return _CONVERTERS[key](raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: bad value {raw!r} for {key!r} ({exc})") from None


def read_config_file(path) -> dict:
    """Parse flat ``key = value`` lines; ``#`` starts a comment."""
    path = Path(path)
    values = {}
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        where = f"{path}:{lineno}"
        if "=" not in line:
            raise ConfigError(f"{where}: expected 'key = value', got {line!r}")
        key, raw = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in _CONVERTERS:
            raise ConfigError(f"{where}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"{where}: duplicate key {key!r}")
        values[key] = _convert(key, raw, where)
    return values


def parse_config(path=None, overrides: dict | None = None) -> SimulationParams:
    """Merge a config file with flag ``overrides`` (which win) and validate."""
    values = read_config_file(path) if path is not None else {}
    for key, raw in (overrides or {}).items():
        if raw is None:
            continue
        if key not in _CONVERTERS:
            raise ConfigError(f"unknown key {key!r}")
        values[key] = _convert(key, raw, "flag")
    missing = [k for k in _REQUIRED if k not in values]
    if missing:
        raise ConfigError(f"missing required key(s): {', '.join(missing)}")
    return validate(SimulationParams(**values))


def _fmt(x: float) -> str:
    return "%.17g" % x


def write_series(series: MagnetizationSeries, path) -> None:
    """CSV ``t,sigma_z,stderr`` with 17 significant digits (exact round trip)."""
    if len(series.times) == 0:
        raise ValueError("refusing to write an empty series")
    path = Path(path)
    try:
        with path.open("w", newline="", encoding="utf-8") as fh:
            fh.write(",".join(SERIES_HEADER) + "\n")
            for t, m, s in zip(series.times, series.mean, series.stderr):
                fh.write(f"{_fmt(t)},{_fmt(m)},{_fmt(s)}\n")
    except OSError as exc:
        raise OSError(f"cannot write series to {path}: {exc}") from exc


def read_series(path) -> MagnetizationSeries:
    path = Path(path)
    with path.open(encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        if header != SERIES_HEADER:
            raise ValueError(f"{path}: expected header {','.join(SERIES_HEADER)}")
        rows = [[float(v) for v in row] for row in reader if row]
    data = np.array(rows, dtype=float).reshape(-1, 3)
    return MagnetizationSeries(times=data[:, 0], mean=data[:, 1], stderr=data[:, 2], n_traj=0)


def write_sweep(rows, path) -> None:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        fh.write(",".join(SWEEP_HEADER) + "\n")
        for r in rows:
            cls = r.damping_class.value if r.damping_class is not None else "error"
            vals = [_fmt(v) for v in (r.gamma_in, r.omega_fit, r.gamma_fit,
                                      r.omega_niba, r.gamma_niba)]
            fh.write(",".join(vals + [cls]) + "\n")


def params_dict(p: SimulationParams) -> dict:
    out = {}
    for f in fields(p):
        v = getattr(p, f.name)
        out[f.name] = v.value if isinstance(v, Channel) else v
    return out


@dataclass
class RunManifest:
    params: dict
    rng: str
    seed: int
    code_version: str
    command: str
    kernel: dict = field(default_factory=dict)
    threads: int = 1
    wall_clock_s: float = math.nan
    outputs: list = field(default_factory=list)
    platform: str = field(default_factory=platform.platform)

    def write(self, path) -> None:
        Path(path).write_text(json.dumps(asdict(self), indent=2, sort_keys=True) + "\n",
                              encoding="utf-8")
