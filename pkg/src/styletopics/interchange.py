"""Binary interchange stream for convolutional activation grids.

The "OVAC" stream is the contract between the activation extractor and the
document-building pipeline.  Layout (all integers little-endian):

    header:  magic b"OVAC" | version u16 (= 1) | reserved u16 (= 0)
    record:  item_id  u16 length + UTF-8 bytes
             image_id u16 length + UTF-8 bytes
             layer_id u32
             C, H, W  u32 each
             C*H*W    IEEE-754 float32 values, channel-major then row-major

Records repeat until EOF.  No compression, no index, no checksum.
"""

from __future__ import annotations

import io
import struct
from dataclasses import dataclass, field
from typing import BinaryIO, Iterable, Iterator

import numpy as np

from .errors import StyleTopicsError

MAGIC = b"OVAC"
VERSION = 1

_HEADER = struct.Struct("<4sHH")
_U16 = struct.Struct("<H")
_FIXED = struct.Struct("<IIII")  # layer_id, C, H, W


class StreamFormatError(StyleTopicsError):
    """The byte stream is not an OVAC stream (bad magic or malformed field)."""


class UnsupportedVersionError(StreamFormatError):
    """The stream declares a format version this reader does not implement."""


class StreamTruncatedError(StreamFormatError):
    """The stream ended inside a record.

    Attributes:
        offset: byte offset at which the incomplete read began.
    """

    def __init__(self, message: str, offset: int):
        super().__init__(message)
        self.offset = offset


@dataclass
class ActivationRecord:
    """One image's activation grid at one convolutional layer.

    ``values`` has length C*H*W, ordered channel-major then row-major, and
    must be finite throughout.
    """

    item_id: str
    image_id: str
    layer_id: int
    channels: int
    height: int
    width: int
    values: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        if not self.item_id:
            raise ValueError("item_id must be non-empty")
        if self.channels < 1 or self.height < 1 or self.width < 1:
            raise ValueError(
                f"grid dimensions must be >= 1, got C={self.channels} "
                f"H={self.height} W={self.width}"
            )
        self.values = np.ascontiguousarray(self.values, dtype=np.float32).reshape(-1)
        expected = self.channels * self.height * self.width
        if self.values.size != expected:
            raise ValueError(
                f"values has {self.values.size} entries, expected "
                f"C*H*W = {expected}"
            )
        if not np.all(np.isfinite(self.values)):
            raise ValueError(
                f"non-finite activation value in record "
                f"({self.item_id!r}, {self.image_id!r}, layer {self.layer_id})"
            )

    def grid(self) -> np.ndarray:
        """Values reshaped to (C, H, W)."""
        return self.values.reshape(self.channels, self.height, self.width)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ActivationRecord):
            return NotImplemented
        return (
            self.item_id == other.item_id
            and self.image_id == other.image_id
            and self.layer_id == other.layer_id
            and self.channels == other.channels
            and self.height == other.height
            and self.width == other.width
            and np.array_equal(self.values, other.values)
        )


def _encode_str(value: str) -> bytes:
    raw = value.encode("utf-8")
    if len(raw) > 0xFFFF:
        raise ValueError(f"string field longer than 65535 UTF-8 bytes: {value[:40]!r}...")
    return _U16.pack(len(raw)) + raw


def write_activation_stream(records: Iterable[ActivationRecord], out: BinaryIO) -> int:
    """Write ``records`` to ``out`` as an OVAC stream.

    Each record is validated before any of its bytes are written; a record
    that fails validation (e.g. a NaN value) leaves the stream at a clean
    record boundary.  Returns the number of records written.
    """
    out.write(_HEADER.pack(MAGIC, VERSION, 0))
    n = 0
    for rec in records:
        values = np.ascontiguousarray(rec.values, dtype=np.float32)
        if not np.all(np.isfinite(values)):
            raise ValueError(
                f"non-finite activation value in record "
                f"({rec.item_id!r}, {rec.image_id!r}, layer {rec.layer_id})"
            )
        buf = bytearray()
        buf += _encode_str(rec.item_id)
        buf += _encode_str(rec.image_id)
        buf += _FIXED.pack(rec.layer_id, rec.channels, rec.height, rec.width)
        buf += values.tobytes()
        out.write(bytes(buf))
        n += 1
    return n


def write_activation_file(records: Iterable[ActivationRecord], path) -> int:
    with open(path, "wb") as f:
        return write_activation_stream(records, f)


def _read_exact(stream: BinaryIO, n: int, offset: int, what: str) -> bytes:
    data = stream.read(n)
    if len(data) != n:
        raise StreamTruncatedError(
            f"stream truncated at byte offset {offset}: expected {n} bytes "
            f"for {what}, got {len(data)}",
            offset,
        )
    return data


def read_activation_stream(stream: BinaryIO) -> Iterator[ActivationRecord]:
    """Yield records from an OVAC ``stream`` until EOF.

    Reads incrementally; the whole stream is never held in memory.  Raises
    StreamFormatError on a bad magic, UnsupportedVersionError on a version
    other than 1, and StreamTruncatedError (naming the byte offset) when
    the stream ends inside a record.
    """
    header = stream.read(_HEADER.size)
    if len(header) < _HEADER.size:
        raise StreamTruncatedError(
            f"stream truncated at byte offset 0: expected {_HEADER.size} header "
            f"bytes, got {len(header)}",
            0,
        )
    magic, version, _reserved = _HEADER.unpack(header)
    if magic != MAGIC:
        raise StreamFormatError(f"bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise UnsupportedVersionError(f"unsupported stream version {version}")

    offset = _HEADER.size
    while True:
        first = stream.read(_U16.size)
        if len(first) == 0:
            return  # clean EOF at a record boundary
        if len(first) < _U16.size:
            raise StreamTruncatedError(
                f"stream truncated at byte offset {offset}: expected 2 bytes "
                f"for item_id length, got {len(first)}",
                offset,
            )
        (item_len,) = _U16.unpack(first)
        offset += _U16.size
        item_id = _read_exact(stream, item_len, offset, "item_id").decode("utf-8")
        offset += item_len

        (image_len,) = _U16.unpack(_read_exact(stream, _U16.size, offset, "image_id length"))
        offset += _U16.size
        image_id = _read_exact(stream, image_len, offset, "image_id").decode("utf-8")
        offset += image_len

        fixed = _read_exact(stream, _FIXED.size, offset, "layer_id/C/H/W")
        layer_id, c, h, w = _FIXED.unpack(fixed)
        offset += _FIXED.size

        n_values = c * h * w
        payload = _read_exact(stream, 4 * n_values, offset, f"{n_values} float32 values")
        offset += 4 * n_values
        values = np.frombuffer(payload, dtype="<f4").astype(np.float32)

        yield ActivationRecord(
            item_id=item_id,
            image_id=image_id,
            layer_id=layer_id,
            channels=c,
            height=h,
            width=w,
            values=values,
        )


def read_activation_file(path) -> Iterator[ActivationRecord]:
    """Yield records from an OVAC file, closing it when exhausted."""
    with open(path, "rb") as f:
        yield from read_activation_stream(f)


def stream_to_bytes(records: Iterable[ActivationRecord]) -> bytes:
    """Serialize ``records`` to an in-memory OVAC byte string."""
    buf = io.BytesIO()
    write_activation_stream(records, buf)
    return buf.getvalue()
