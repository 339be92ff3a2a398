"""Writer for the OVAC activation interchange stream.

Layout (all integers little-endian):

    header: magic "OVAC", u16 version = 1, u16 reserved = 0
    record: u16 item_id byte length, item_id UTF-8
            u16 image_id byte length, image_id UTF-8
            u32 layer_id, u32 channels, u32 height, u32 width
            channels * height * width float32 values, channel-major

This module is self-contained on purpose: the byte layout is the contract
between the extractor and its consumers, so it is implemented here rather
than imported from any consumer.
"""

from __future__ import annotations

from dataclasses import dataclass
from struct import Struct
from typing import IO, Iterable

import numpy as np

MAGIC = b"OVAC"
VERSION = 1

_HEADER = Struct("<4sHH")
_U16 = Struct("<H")
_FIXED = Struct("<IIII")


@dataclass
class ActivationRecord:
    """One image's activation grid at one convolutional layer."""

    item_id: str
    image_id: str
    layer_id: int
    channels: int
    height: int
    width: int
    values: np.ndarray  # flat float32, length channels * height * width

    def validate(self) -> None:
        if not self.item_id:
            raise ValueError("item_id must be non-empty")
        for name, dim in (("layer_id", self.layer_id), ("channels", self.channels),
                          ("height", self.height), ("width", self.width)):
            if dim < 1:
                raise ValueError(f"{name} must be >= 1, got {dim}")
        expected = self.channels * self.height * self.width
        if self.values.size != expected:
            raise ValueError(
                f"expected {expected} values, got {self.values.size}"
            )
        if not np.isfinite(self.values).all():
            raise ValueError("activation values must be finite")


def _write_string(out: IO[bytes], value: str) -> None:
    raw = value.encode("utf-8")
    if len(raw) > 0xFFFF:
        raise ValueError(f"string too long for a u16 length prefix: {len(raw)} bytes")
    out.write(_U16.pack(len(raw)))
    out.write(raw)


def write_stream(records: Iterable[ActivationRecord], out: IO[bytes]) -> int:
    """Write a full OVAC stream; returns the record count.

    Each record is validated before any of its bytes are written, so a
    failure leaves the stream at a record boundary.
    """
    out.write(_HEADER.pack(MAGIC, VERSION, 0))
    count = 0
    for record in records:
        record.validate()
        _write_string(out, record.item_id)
        _write_string(out, record.image_id)
        out.write(_FIXED.pack(record.layer_id, record.channels,
                              record.height, record.width))
        out.write(np.ascontiguousarray(record.values, dtype="<f4").tobytes())
        count += 1
    return count


def write_file(records: Iterable[ActivationRecord], path) -> int:
    with open(path, "wb") as f:
        return write_stream(records, f)
