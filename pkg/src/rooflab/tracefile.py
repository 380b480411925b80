"""Memory access traces and their binary file format.

A trace is an ordered sequence of reads, each identified by the array it
touches (a small integer id), a byte offset inside that array, and an
access size in bytes.  On disk the format is:

    bytes 0..7    magic ``RLTRACE1``
    bytes 8..15   record count, unsigned 64-bit little-endian
    then per record, 10 bytes:
        array id   u8
        offset     u64 little-endian
        size       u8  (1..255)

Traces carry reads only; the simulator treats every record as a load.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ValidationError

TRACE_MAGIC = b"RLTRACE1"

_RECORD_DTYPE = np.dtype([("id", "u1"), ("offset", "<u8"), ("size", "u1")])
assert _RECORD_DTYPE.itemsize == 10


@dataclass(frozen=True)
class AccessTrace:
    """Column-oriented view of a read trace."""

    ids: np.ndarray      # uint8, shape (n,)
    offsets: np.ndarray  # uint64, shape (n,)
    sizes: np.ndarray    # uint8, shape (n,)

    def __post_init__(self) -> None:
        n = len(self.ids)
        if len(self.offsets) != n or len(self.sizes) != n:
            raise ValidationError("trace columns must have equal length")
        if n and self.sizes.min() < 1:
            raise ValidationError("trace access sizes must be at least 1 byte")

    def __len__(self) -> int:
        return len(self.ids)

    @classmethod
    def from_arrays(cls, ids, offsets, sizes) -> "AccessTrace":
        return cls(
            np.ascontiguousarray(ids, dtype=np.uint8),
            np.ascontiguousarray(offsets, dtype=np.uint64),
            np.ascontiguousarray(sizes, dtype=np.uint8),
        )

    def total_bytes(self) -> int:
        """Sum of access sizes; what the trace asks of the first level."""
        return int(self.sizes.sum(dtype=np.uint64))

    def sorted_multiset_key(self) -> np.ndarray:
        """A canonical ordering of the records, for multiset comparisons."""
        packed = (
            self.offsets.astype(np.uint64) * np.uint64(256 * 256)
            + self.ids.astype(np.uint64) * np.uint64(256)
            + self.sizes.astype(np.uint64)
        )
        return np.sort(packed)


def write_trace(trace: AccessTrace, path: str | Path) -> None:
    records = np.empty(len(trace), dtype=_RECORD_DTYPE)
    records["id"] = trace.ids
    records["offset"] = trace.offsets
    records["size"] = trace.sizes
    with open(path, "wb") as fh:
        fh.write(TRACE_MAGIC)
        fh.write(np.uint64(len(trace)).tobytes())
        fh.write(records.tobytes())


def read_trace(path: str | Path) -> AccessTrace:
    raw = Path(path).read_bytes()
    if len(raw) < 16 or raw[:8] != TRACE_MAGIC:
        raise ValidationError(f"{path}: not a trace file (bad magic)")
    count = int(np.frombuffer(raw[8:16], dtype="<u8")[0])
    body = raw[16:]
    if len(body) != count * _RECORD_DTYPE.itemsize:
        raise ValidationError(
            f"{path}: truncated trace, header says {count} records "
            f"but body holds {len(body)} bytes"
        )
    records = np.frombuffer(body, dtype=_RECORD_DTYPE)
    return AccessTrace(
        ids=records["id"].copy(),
        offsets=records["offset"].astype(np.uint64),
        sizes=records["size"].copy(),
    )
