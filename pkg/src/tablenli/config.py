"""Engine configuration from TOML or JSON files."""

from __future__ import annotations

import json
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Mapping

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .arith import TriggerLexicon
from .numerals import HaloMode, HaloPolicy


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class BackendConfig:
    kind: str = "mock"  # mock | live
    url: str | None = None
    model: str | None = None
    key: str | None = None
    fixtures: str | None = None
    timeout: float = 60.0


@dataclass(frozen=True)
class EngineConfig:
    halo: HaloPolicy = field(default_factory=HaloPolicy)
    triggers: Mapping[str, str] = field(default_factory=dict)
    aliases: Mapping[str, str] = field(default_factory=dict)
    retries: int = 3
    temperature: float = 0.0
    max_in_flight: int = 4
    parallel: int = 1
    seed: int = 0
    backend: BackendConfig = field(default_factory=BackendConfig)

    def lexicon(self) -> TriggerLexicon:
        return TriggerLexicon(self.triggers)


def _frac(v: Any) -> Fraction:
    # route floats through str so 0.1 becomes 1/10, not its binary expansion
    return Fraction(str(v)) if isinstance(v, float) else Fraction(v)


def halo_from_mapping(raw: Mapping[str, Any]) -> HaloPolicy:
    kwargs: dict[str, Any] = {}
    if "mode" in raw:
        try:
            kwargs["mode"] = HaloMode(raw["mode"])
        except ValueError:
            raise ConfigError(f"halo.mode must be one of {[m.value for m in HaloMode]}") from None
    if "epsilon" in raw:
        kwargs["epsilon"] = _frac(raw["epsilon"])
    if "modifier_width" in raw:
        kwargs["default_modifier_width"] = _frac(raw["modifier_width"])
    if "modifier_widths" in raw:
        kwargs["modifier_widths"] = {k: _frac(v) for k, v in raw["modifier_widths"].items()}
    if "roundness_widths" in raw:
        base = dict(HaloPolicy().roundness_widths)
        base.update({str(k): _frac(v) for k, v in raw["roundness_widths"].items()})
        kwargs["roundness_widths"] = base
    return HaloPolicy(**kwargs)


def config_from_mapping(raw: Mapping[str, Any]) -> EngineConfig:
    known = {"halo", "triggers", "aliases", "retries", "temperature", "max_in_flight",
             "parallel", "seed", "backend"}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    backend = raw.get("backend", {})
    if not isinstance(backend, Mapping):
        raise ConfigError("backend must be a table")
    try:
        backend_cfg = BackendConfig(**backend)
    except TypeError as exc:
        raise ConfigError(f"backend: {exc}") from None
    cfg = EngineConfig(
        halo=halo_from_mapping(raw.get("halo", {})),
        triggers=dict(raw.get("triggers", {})),
        aliases=dict(raw.get("aliases", {})),
        retries=int(raw.get("retries", 3)),
        temperature=float(raw.get("temperature", 0.0)),
        max_in_flight=int(raw.get("max_in_flight", 4)),
        parallel=int(raw.get("parallel", 1)),
        seed=int(raw.get("seed", 0)),
        backend=backend_cfg,
    )
    cfg.lexicon()  # fail early on overlapping trigger words
    if cfg.retries < 0:
        raise ConfigError("retries must be non-negative")
    return cfg


def load_config(path: str | Path | None) -> EngineConfig:
    if path is None:
        return EngineConfig()
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if path.suffix.lower() == ".json":
        raw = json.loads(text)
    else:
        raw = tomllib.loads(text)
    try:
        return config_from_mapping(raw)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
