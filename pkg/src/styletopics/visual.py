"""Visual documents from activation grids.

A channel of a convolutional layer is treated as a vocabulary word; a
channel whose activation magnitude clears a per-layer threshold is "active"
and contributes the token ``"<layer_id>:<channel>"`` to the owning item's
document.  Layers classified as dense additionally require the threshold to
be cleared on a minimum fraction of the response grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, Iterable, List, Sequence, Set

import numpy as np

from .errors import ConfigurationError
from .interchange import ActivationRecord

DEFAULT_GRID_FRACTION = 1.0 / 20.0
DENSE_CUTOFF = 1.0 / 3.0


@dataclass(frozen=True)
class LayerSpec:
    """Thresholding configuration for one convolutional layer.

    ``t1`` is the activation-magnitude threshold (strict: a cell counts only
    when |value| > t1).  When ``dense`` is set, a channel is active only if
    at least ceil(grid_fraction * H * W) cells clear the threshold.
    """

    layer_id: int
    t1: float
    dense: bool = False
    grid_fraction: float = DEFAULT_GRID_FRACTION

    def __post_init__(self) -> None:
        if self.t1 <= 0:
            raise ConfigurationError(f"layer {self.layer_id}: t1 must be > 0, got {self.t1}")
        if not (0.0 < self.grid_fraction <= 1.0):
            raise ConfigurationError(
                f"layer {self.layer_id}: grid_fraction must be in (0, 1], "
                f"got {self.grid_fraction}"
            )


@dataclass(frozen=True)
class VisualDocument:
    """Per-item bag of visual words: unique tokens, sorted lexicographically."""

    item_id: str
    tokens: tuple

    def __post_init__(self) -> None:
        if list(self.tokens) != sorted(set(self.tokens)):
            raise ValueError(f"tokens of {self.item_id!r} must be unique and sorted")


def active_channels(record: ActivationRecord, spec: LayerSpec) -> Set[int]:
    """Channel indices of ``record`` that clear the layer's threshold.

    Magnitudes are absolute values of the raw activations, so sign carries
    no information.  Non-dense layers need a single cell above t1; dense
    layers need at least ceil(grid_fraction * H * W) such cells.
    """
    if record.layer_id != spec.layer_id:
        raise ConfigurationError(
            f"record layer {record.layer_id} does not match spec layer {spec.layer_id}"
        )
    magnitudes = np.abs(record.grid())
    cells_over = (magnitudes > spec.t1).reshape(record.channels, -1).sum(axis=1)
    if spec.dense:
        needed = math.ceil(spec.grid_fraction * record.height * record.width)
    else:
        needed = 1
    return set(np.flatnonzero(cells_over >= needed).tolist())


def compute_layer_density(
    sample: Iterable[ActivationRecord], t1: float
) -> Dict[int, float]:
    """Mean fraction of channels active under the primary (single-cell) rule.

    Returns one density per layer present in ``sample``, averaged over that
    layer's records.
    """
    if t1 <= 0:
        raise ConfigurationError(f"t1 must be > 0, got {t1}")
    fractions: Dict[int, List[float]] = {}
    for record in sample:
        spec = LayerSpec(layer_id=record.layer_id, t1=t1, dense=False)
        active = active_channels(record, spec)
        fractions.setdefault(record.layer_id, []).append(len(active) / record.channels)
    if not fractions:
        raise ConfigurationError("empty activation sample: no densities to compute")
    return {layer: sum(f) / len(f) for layer, f in sorted(fractions.items())}


def classify_dense(density: float) -> bool:
    """True when strictly more than a third of channels are active on average."""
    if not (0.0 <= density <= 1.0):
        raise ConfigurationError(f"density must be in [0, 1], got {density}")
    return density > DENSE_CUTOFF


def build_item_documents(
    records: Iterable[ActivationRecord], specs: Iterable[LayerSpec]
) -> List[VisualDocument]:
    """Union the active channels of every (image, layer) into item documents.

    Tokens are ``"<layer_id>:<channel>"`` strings, deduplicated per item.
    Items are emitted in order of first appearance; tokens are sorted
    lexicographically, so the output is deterministic regardless of how an
    item's records are interleaved in the stream.
    """
    by_layer: Dict[int, LayerSpec] = {}
    for spec in specs:
        if spec.layer_id in by_layer:
            raise ConfigurationError(f"duplicate spec for layer {spec.layer_id}")
        by_layer[spec.layer_id] = spec

    tokens_by_item: Dict[str, Set[str]] = {}
    for record in records:
        spec = by_layer.get(record.layer_id)
        if spec is None:
            raise ConfigurationError(
                f"record references layer {record.layer_id} which has no LayerSpec"
            )
        bag = tokens_by_item.setdefault(record.item_id, set())
        for channel in active_channels(record, spec):
            bag.add(f"{record.layer_id}:{channel}")

    return [
        VisualDocument(item_id=item, tokens=tuple(sorted(bag)))
        for item, bag in tokens_by_item.items()
    ]


def calibrate_threshold(
    sample: Sequence[ActivationRecord], percentile: float = 90.0
) -> float:
    """Nearest-rank percentile of pooled activation magnitudes.

    Pools |value| over every cell of every record in ``sample`` and returns
    the value at rank ceil(percentile/100 * n).  Percentile 100 is the
    maximum magnitude.
    """
    if not (0.0 < percentile <= 100.0):
        raise ConfigurationError(f"percentile must be in (0, 100], got {percentile}")
    if not sample:
        raise ConfigurationError("empty activation sample: cannot calibrate a threshold")
    pooled = np.sort(np.abs(np.concatenate([r.values for r in sample])))
    rank = math.ceil(percentile / 100.0 * pooled.size)
    return float(pooled[rank - 1])
