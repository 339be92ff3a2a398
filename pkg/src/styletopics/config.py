"""Declarative pipeline configuration, shared by all CLI subcommands.

A single YAML file supplies layer thresholds and model hyperparameters;
command-line flags override individual values.  Schema:

    layers:
      - id: 8            # convolutional layer id
        t1: 0.9          # activation-magnitude threshold (> 0)
        dense: false     # apply the grid-fraction rule?
        grid_fraction: 0.05   # optional, default 1/20
    k: 50                # topic count
    alpha: 1.0           # optional; default 50/k
    beta: 0.01
    iterations: 1000
    seed: 42
    metric: euclidean    # euclidean | cosine | hellinger
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional

import yaml

from .errors import ConfigurationError
from .styleeval import DEFAULT_METRIC, METRICS
from .visual import DEFAULT_GRID_FRACTION, LayerSpec

_TOP_KEYS = {"layers", "k", "alpha", "beta", "iterations", "seed", "metric"}
_LAYER_KEYS = {"id", "t1", "dense", "grid_fraction"}


@dataclass
class PipelineConfig:
    layers: List[LayerSpec] = field(default_factory=list)
    k: int = 50
    alpha: Optional[float] = None  # None means 50/k
    beta: float = 0.01
    iterations: int = 1000
    seed: int = 0
    metric: str = DEFAULT_METRIC

    def __post_init__(self) -> None:
        if self.metric not in METRICS:
            raise ConfigurationError(
                f"metric must be one of {METRICS}, got {self.metric!r}"
            )
        seen = set()
        for spec in self.layers:
            if spec.layer_id in seen:
                raise ConfigurationError(f"duplicate layer {spec.layer_id} in config")
            seen.add(spec.layer_id)

    def layer(self, layer_id: int) -> LayerSpec:
        for spec in self.layers:
            if spec.layer_id == layer_id:
                return spec
        raise ConfigurationError(f"layer {layer_id} is not configured")


def _parse_layer(entry: dict) -> LayerSpec:
    if not isinstance(entry, dict):
        raise ConfigurationError(f"layer entry must be a mapping, got {entry!r}")
    unknown = set(entry) - _LAYER_KEYS
    if unknown:
        raise ConfigurationError(f"unknown layer config keys: {sorted(unknown)}")
    if "id" not in entry or "t1" not in entry:
        raise ConfigurationError(f"layer entry needs 'id' and 't1': {entry!r}")
    return LayerSpec(
        layer_id=int(entry["id"]),
        t1=float(entry["t1"]),
        dense=bool(entry.get("dense", False)),
        grid_fraction=float(entry.get("grid_fraction", DEFAULT_GRID_FRACTION)),
    )


def parse_config(text: str) -> PipelineConfig:
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"invalid config YAML: {exc}") from exc
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigurationError("config must be a mapping of keys to values")
    unknown = set(data) - _TOP_KEYS
    if unknown:
        raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")

    layers = [_parse_layer(entry) for entry in data.get("layers") or []]
    alpha = data.get("alpha")
    return PipelineConfig(
        layers=layers,
        k=int(data.get("k", 50)),
        alpha=None if alpha is None else float(alpha),
        beta=float(data.get("beta", 0.01)),
        iterations=int(data.get("iterations", 1000)),
        seed=int(data.get("seed", 0)),
        metric=str(data.get("metric", DEFAULT_METRIC)),
    )


def load_config(path) -> PipelineConfig:
    with open(path, "r", encoding="utf-8") as f:
        return parse_config(f.read())
