"""Run configuration: TOML file, environment overrides, echo/round-trip."""

from __future__ import annotations

import os
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Mapping

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib
import tomli_w

from .operators import BoseHubbardParams, MeasurementSpec, MicroscopicParams
from .sse import SimConfig

ENV_PREFIX = "HOMODYNE_BH_"


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending field."""


@dataclass
class SweepSpec:
    grid: list[float] | None = None
    u_over_j_min: float | None = None
    u_over_j_max: float | None = None
    points: int | None = None

    def values(self) -> list[float]:
        if self.grid is not None:
            if not self.grid:
                raise ConfigError("sweep.grid is empty")
            return [float(u) for u in self.grid]
        if None in (self.u_over_j_min, self.u_over_j_max, self.points):
            raise ConfigError(
                "missing field sweep.grid (or sweep.u_over_j_min, sweep.u_over_j_max and sweep.points)"
            )
        return list(np.geomspace(self.u_over_j_min, self.u_over_j_max, int(self.points)))


@dataclass
class AnalysisSpec:
    dwell_min: int = 10
    hysteresis: float | None = None
    segment_length: int = 1024


@dataclass
class RunConfig:
    model: BoseHubbardParams = field(default_factory=lambda: BoseHubbardParams(L=6, N=6))
    measurement: MeasurementSpec = field(default_factory=MeasurementSpec)
    sim: SimConfig = field(default_factory=SimConfig)
    micro: MicroscopicParams = field(default_factory=MicroscopicParams)
    sweep: SweepSpec = field(default_factory=SweepSpec)
    analysis: AnalysisSpec = field(default_factory=AnalysisSpec)
    output_dir: str = "out"
    n_trajectories: int = 1
    initial_state: str | list[int] = "ground_state"

    def __post_init__(self):
        if self.n_trajectories < 1:
            raise ConfigError("run.n_trajectories must be at least 1")
        # one source of truth for the measurement strength
        self.sim.gamma = self.measurement.gamma


_SECTIONS = {
    "model": BoseHubbardParams,
    "measurement": MeasurementSpec,
    "sim": SimConfig,
    "micro": MicroscopicParams,
    "sweep": SweepSpec,
    "analysis": AnalysisSpec,
}
_RUN_KEYS = ("output_dir", "n_trajectories", "initial_state")


def _build(section: str, cls, data: Mapping[str, Any]):
    known = {f.name for f in fields(cls)}
    if section == "sim":
        known.discard("gamma")
    for key in data:
        if key not in known:
            raise ConfigError(f"unknown field {section}.{key}")
    kw = dict(data)
    if section == "micro" and isinstance(kw.get("A0"), list):
        re, im = kw["A0"]
        kw["A0"] = complex(re, im)
    if section == "model":
        for req in ("L", "N"):
            if req not in kw:
                raise ConfigError(f"missing field model.{req}")
    try:
        return cls(**kw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[{section}] {exc}") from exc


def _parse_env_value(raw: str):
    try:
        return tomllib.loads(f"v = {raw}")["v"]
    except tomllib.TOMLDecodeError:
        return raw


def apply_env_overrides(data: dict, environ: Mapping[str, str] | None = None) -> dict:
    """Merge ``HOMODYNE_BH_<SECTION>__<KEY>=<toml value>`` variables into ``data``."""
    environ = os.environ if environ is None else environ
    for name, raw in environ.items():
        if not name.startswith(ENV_PREFIX) or "__" not in name[len(ENV_PREFIX):]:
            continue
        section, key = name[len(ENV_PREFIX):].split("__", 1)
        section = section.lower()
        names = [f.name for f in fields(_SECTIONS[section])] if section in _SECTIONS else list(_RUN_KEYS)
        key = next((n for n in names if n.lower() == key.lower()), key.lower())
        data.setdefault(section, {})[key] = _parse_env_value(raw)
    return data


def config_from_dict(data: Mapping[str, Any]) -> RunConfig:
    data = dict(data)
    data.pop("meta", None)
    for key in data:
        if key not in _SECTIONS and key != "run":
            raise ConfigError(f"unknown section [{key}]")
    run = dict(data.get("run", {}))
    for key in run:
        if key not in _RUN_KEYS:
            raise ConfigError(f"unknown field run.{key}")
    kw = {name: _build(name, cls, data[name]) for name, cls in _SECTIONS.items() if name in data}
    if "model" not in kw:
        raise ConfigError("missing section [model]")
    try:
        return RunConfig(**kw, **run)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path: str | os.PathLike | None, environ: Mapping[str, str] | None = None) -> RunConfig:
    data: dict = {}
    if path is not None:
        text = Path(path).read_text(encoding="utf-8")
        try:
            data = tomllib.loads(text)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
    apply_env_overrides(data, environ)
    if not data:
        data = {"model": {"L": 6, "N": 6}}
    return config_from_dict(data)


def _clean(value):
    if isinstance(value, dict):
        return {k: _clean(v) for k, v in value.items() if v is not None}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    if isinstance(value, np.ndarray):
        return _clean(value.tolist())
    if isinstance(value, complex):
        return [value.real, value.imag]
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    return value


def config_to_dict(cfg: RunConfig) -> dict:
    out = {name: _clean(asdict(getattr(cfg, name))) for name in _SECTIONS}
    out["sim"].pop("gamma", None)
    if cfg.measurement.custom_matrix is not None:
        m = np.asarray(cfg.measurement.custom_matrix)
        if np.any(m.imag != 0):
            raise ConfigError("complex custom_matrix cannot be echoed as TOML")
        out["measurement"]["custom_matrix"] = m.real.tolist()
    out["run"] = {
        "output_dir": cfg.output_dir,
        "n_trajectories": cfg.n_trajectories,
        "initial_state": _clean(cfg.initial_state),
    }
    return out


def dumps(data: Mapping[str, Any]) -> str:
    return tomli_w.dumps(_clean(dict(data)))
