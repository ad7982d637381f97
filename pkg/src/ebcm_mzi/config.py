"""Run configuration: strict loading, validation, and round-tripping."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .core import DomainError
from .protocols import (DetectorModel, PhaseProtocol, SourceModel,
                        default_phi0_grid)


class ConfigError(ValueError):
    """Bad run configuration; the message names the offending key."""


DEFAULT_PROTOCOLS = ("x=-1", "x=+1", "random/1")
DEFAULT_ALPHA_GRID = (0.5, 0.9, 0.98, 0.99, 0.999)


@dataclass
class RunConfig:
    alpha: float = 0.99
    beta: float = 0.0
    phi0_points: int = 16
    phi0_start: float = 0.0
    phi0_stop: float = 2.0 * math.pi
    photons_per_set: int = 5000
    sets_per_protocol: int = 10
    protocols: tuple[str, ...] = DEFAULT_PROTOCOLS
    source: dict = field(default_factory=dict)
    detector: dict = field(default_factory=dict)
    master_seed: int = 1
    persistence: bool = True
    replicas: int = 20
    poisson_trials: bool = True
    warmup: int = 0
    register_mode: str = "overwrite"
    learn_before_route: bool = False
    alpha_grid: tuple[float, ...] = DEFAULT_ALPHA_GRID
    threads: int = 1

    def __post_init__(self):
        self.validate()

    # -- derived objects ----------------------------------------------------

    def grid(self) -> np.ndarray:
        return default_phi0_grid(self.phi0_points, self.phi0_start,
                                 self.phi0_stop)

    def source_model(self) -> SourceModel:
        return SourceModel(**self.source)

    def detector_model(self) -> DetectorModel:
        return DetectorModel(**self.detector)

    def model_kwargs(self) -> dict:
        return {"register_mode": self.register_mode,
                "learn_before_route": self.learn_before_route}

    # -- validation ---------------------------------------------------------

    def validate(self):
        checks = [
            ("alpha", 0.0 <= self.alpha <= 1.0),
            ("beta", 0.0 <= self.beta <= 0.2),
            ("phi0_points", self.phi0_points >= 1),
            ("phi0_stop", self.phi0_stop > self.phi0_start),
            ("photons_per_set", self.photons_per_set >= 1),
            ("sets_per_protocol", self.sets_per_protocol >= 1),
            ("protocols", len(self.protocols) >= 1),
            ("replicas", self.replicas >= 1),
            ("warmup", self.warmup >= 0),
            ("register_mode", self.register_mode in ("overwrite", "average")),
            ("threads", self.threads >= 1),
            ("alpha_grid", all(0.0 < a <= 1.0 for a in self.alpha_grid)),
        ]
        for key, ok in checks:
            if not ok:
                raise ConfigError(f"invalid value for {key}: "
                                  f"{getattr(self, key)!r}")
        for tag in self.protocols:
            try:
                PhaseProtocol.from_tag(tag)
            except DomainError as exc:
                raise ConfigError(f"invalid value for protocols: {exc}") from exc
        try:
            self.source_model()
        except (DomainError, TypeError) as exc:
            raise ConfigError(f"invalid value for source: {exc}") from exc
        try:
            self.detector_model()
        except (DomainError, TypeError) as exc:
            raise ConfigError(f"invalid value for detector: {exc}") from exc

    # -- serialization ------------------------------------------------------

    def to_dict(self) -> dict:
        d = asdict(self)
        d["protocols"] = list(self.protocols)
        d["alpha_grid"] = list(self.alpha_grid)
        return d

    @staticmethod
    def from_dict(data: dict) -> "RunConfig":
        known = {f for f in RunConfig.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config key: {sorted(unknown)[0]}")
        data = dict(data)
        for key in ("protocols", "alpha_grid"):
            if key in data:
                data[key] = tuple(data[key])
        for sub, allowed in (("source", SourceModel), ("detector", DetectorModel)):
            extra = set(data.get(sub, {})) - set(allowed.__dataclass_fields__)
            if extra:
                raise ConfigError(f"unknown config key: {sub}.{sorted(extra)[0]}")
        try:
            return RunConfig(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @staticmethod
    def from_file(path) -> "RunConfig":
        with open(path) as fh:
            data = json.load(fh)
        if "config" in data and "schema" in data:  # metadata sidecar round-trip
            data = data["config"]
        return RunConfig.from_dict(data)

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")
