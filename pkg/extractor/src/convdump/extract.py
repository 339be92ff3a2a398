"""Manifest-driven batch extraction of convolutional activations.

Images listed in a CSV manifest (item_id,image_id,path) are pushed through
the network in batches; the configured layers' pre-ReLU outputs are
written as one OVAC record per (image, layer), in manifest order with
layers ascending.  Unreadable images are skipped with a warning and
counted in the summary.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from typing import IO, Iterable, Iterator, List, Tuple

import numpy as np
import torch
from PIL import Image
from torch import nn
from torchvision import transforms

from .ovac import ActivationRecord, write_stream
from .resnet import capture_modules

log = logging.getLogger("convdump")

# the network's published input normalization
PREPROCESS = transforms.Compose([
    transforms.Resize(256),
    transforms.CenterCrop(224),
    transforms.ToTensor(),
    transforms.Normalize(mean=[0.485, 0.456, 0.406], std=[0.229, 0.224, 0.225]),
])


@dataclass(frozen=True)
class ManifestEntry:
    item_id: str
    image_id: str
    path: str


@dataclass
class ExtractionSummary:
    records_written: int = 0
    images_skipped: int = 0


def read_manifest(stream: Iterable[str]) -> List[ManifestEntry]:
    """Parse item_id,image_id,path rows; a header row is skipped."""
    entries: List[ManifestEntry] = []
    for lineno, row in enumerate(csv.reader(stream), start=1):
        if not row:
            continue
        if lineno == 1 and row[0].strip().lower() == "item_id":
            continue
        if len(row) != 3:
            raise ValueError(
                f"line {lineno}: expected item_id,image_id,path, got {row!r}"
            )
        item_id, image_id, path = (cell.strip() for cell in row)
        if not item_id or not path:
            raise ValueError(f"line {lineno}: item_id and path must be non-empty")
        entries.append(ManifestEntry(item_id, image_id, path))
    return entries


def load_image(path: str) -> torch.Tensor:
    with Image.open(path) as img:
        return PREPROCESS(img.convert("RGB"))


def _batches(entries: List[ManifestEntry], size: int) -> Iterator[List[ManifestEntry]]:
    for start in range(0, len(entries), size):
        yield entries[start : start + size]


def iter_records(
    model: nn.Module,
    entries: List[ManifestEntry],
    layers: List[int],
    batch_size: int = 8,
    capture: str = "bn",
    summary: ExtractionSummary | None = None,
) -> Iterator[ActivationRecord]:
    """Yield OVAC records for every readable (image, layer) combination."""
    if batch_size < 1:
        raise ValueError(f"batch size must be >= 1, got {batch_size}")
    layers = sorted(set(layers))
    targets = capture_modules(model, layers, capture)
    index_of = {module: i for i, module in targets.items()}
    captured: dict[int, torch.Tensor] = {}

    def hook(module, inputs, output):
        captured[index_of[module]] = output.detach()

    handles = [module.register_forward_hook(hook) for module in targets.values()]
    model.eval()
    try:
        torch.use_deterministic_algorithms(True)
        with torch.no_grad():
            for batch in _batches(entries, batch_size):
                kept: List[ManifestEntry] = []
                tensors: List[torch.Tensor] = []
                for entry in batch:
                    try:
                        tensors.append(load_image(entry.path))
                    except OSError as exc:
                        log.warning("skipping unreadable image %s: %s", entry.path, exc)
                        if summary is not None:
                            summary.images_skipped += 1
                        continue
                    kept.append(entry)
                if not kept:
                    continue
                captured.clear()
                model(torch.stack(tensors))
                for position, entry in enumerate(kept):
                    for layer in layers:
                        grid = captured[layer][position].cpu().numpy()
                        c, h, w = grid.shape
                        record = ActivationRecord(
                            item_id=entry.item_id, image_id=entry.image_id,
                            layer_id=layer, channels=c, height=h, width=w,
                            values=np.ascontiguousarray(grid, dtype=np.float32).reshape(-1),
                        )
                        if summary is not None:
                            summary.records_written += 1
                        yield record
    finally:
        for handle in handles:
            handle.remove()


def extract_to(
    out: IO[bytes],
    model: nn.Module,
    entries: List[ManifestEntry],
    layers: List[int],
    batch_size: int = 8,
    capture: str = "bn",
) -> ExtractionSummary:
    """Run the full extraction, writing one OVAC stream to ``out``."""
    summary = ExtractionSummary()
    write_stream(
        iter_records(model, entries, layers, batch_size, capture, summary), out
    )
    return summary


def extract_to_file(path, model, entries, layers, batch_size=8, capture="bn"):
    with open(path, "wb") as f:
        return extract_to(f, model, entries, layers, batch_size, capture)
