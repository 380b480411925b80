"""Two-level set-associative cache simulator for read traces.

Both levels use LRU replacement within a set, start cold, and form an
inclusive hierarchy: a line evicted from L2 is invalidated in L1 as
well, so L1 never holds a line L2 has dropped.  Accesses that span a
line boundary are split into one lookup per touched line.

Byte accounting is definitional rather than modeled: L1 traffic is the
sum of access sizes, L2 traffic is L1 misses times the L1 line size,
and memory traffic is L2 misses times the L2 line size.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numba import njit

from .errors import ValidationError
from .metrics import LevelBytes
from .tracefile import AccessTrace

# Array ids live in the top bits so that distinct arrays can never share
# a cache line, whatever their offsets.
ARRAY_ID_SHIFT = 36


@dataclass(frozen=True)
class CacheLevelConfig:
    """Geometry of one cache level."""

    capacity_bytes: int
    line_bytes: int
    associativity: int

    def __post_init__(self) -> None:
        if self.line_bytes <= 0 or self.line_bytes & (self.line_bytes - 1):
            raise ValidationError(
                f"line_bytes must be a positive power of two, got {self.line_bytes!r}"
            )
        if self.associativity < 1:
            raise ValidationError(f"associativity must be at least 1, got {self.associativity!r}")
        if self.capacity_bytes <= 0:
            raise ValidationError(f"capacity_bytes must be positive, got {self.capacity_bytes!r}")
        if self.capacity_bytes % (self.line_bytes * self.associativity):
            raise ValidationError(
                f"capacity_bytes {self.capacity_bytes} is not a whole number of sets "
                f"(line_bytes {self.line_bytes} x associativity {self.associativity})"
            )

    @property
    def num_sets(self) -> int:
        return self.capacity_bytes // (self.line_bytes * self.associativity)

    @property
    def num_lines(self) -> int:
        return self.capacity_bytes // self.line_bytes

    @classmethod
    def from_dict(cls, data: dict) -> "CacheLevelConfig":
        if not isinstance(data, dict):
            raise ValidationError("cache level config must be a JSON object")
        known = {"capacity_bytes", "line_bytes", "associativity"}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ValidationError(f"cache level config has unknown fields: {', '.join(unknown)}")
        missing = sorted(known - set(data))
        if missing:
            raise ValidationError(f"cache level config missing fields: {', '.join(missing)}")
        return cls(int(data["capacity_bytes"]), int(data["line_bytes"]), int(data["associativity"]))

    def to_dict(self) -> dict:
        return {
            "capacity_bytes": self.capacity_bytes,
            "line_bytes": self.line_bytes,
            "associativity": self.associativity,
        }


@dataclass(frozen=True)
class CacheConfig:
    """An L1/L2 pair; L2 lines must be at least as large as L1 lines."""

    l1: CacheLevelConfig
    l2: CacheLevelConfig

    def __post_init__(self) -> None:
        if self.l2.line_bytes < self.l1.line_bytes:
            raise ValidationError(
                f"l2 line_bytes {self.l2.line_bytes} smaller than l1 line_bytes "
                f"{self.l1.line_bytes}"
            )
        if self.l2.line_bytes % self.l1.line_bytes:
            raise ValidationError(
                f"l2 line_bytes {self.l2.line_bytes} is not a multiple of l1 line_bytes "
                f"{self.l1.line_bytes}"
            )

    @classmethod
    def from_dict(cls, data: dict) -> "CacheConfig":
        if not isinstance(data, dict):
            raise ValidationError("cache config must be a JSON object")
        unknown = sorted(set(data) - {"l1", "l2"})
        if unknown:
            raise ValidationError(f"cache config has unknown fields: {', '.join(unknown)}")
        missing = sorted({"l1", "l2"} - set(data))
        if missing:
            raise ValidationError(f"cache config missing fields: {', '.join(missing)}")
        return cls(CacheLevelConfig.from_dict(data["l1"]), CacheLevelConfig.from_dict(data["l2"]))

    def to_dict(self) -> dict:
        return {"l1": self.l1.to_dict(), "l2": self.l2.to_dict()}


def bundled_cachesim_path() -> Path:
    """Path of the shipped desk-scale cache geometry.

    Sized so the sweep problem is an interesting fit rather than fully
    resident, with set counts of 9 and 45 so that the power-of-two
    column strides in the generated arrays do not all land in one set.
    """
    return Path(__file__).parent / "data" / "desk.cachesim.json"


def load_cache_config(path: str | Path) -> CacheConfig:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: not valid JSON: {exc}") from exc
    try:
        return CacheConfig.from_dict(data)
    except ValidationError as exc:
        raise ValidationError(f"{path}: {exc}") from None


@dataclass(frozen=True)
class SimOutcome:
    """Hit/miss counts and the per-level traffic they imply."""

    accesses: int
    l1_lookups: int
    l1_hits: int
    l1_misses: int
    l2_hits: int
    l2_misses: int
    bytes: LevelBytes

    @property
    def l1_hit_rate(self) -> float:
        return self.l1_hits / self.l1_lookups if self.l1_lookups else 0.0

    @property
    def l2_hit_rate(self) -> float:
        lookups = self.l2_hits + self.l2_misses
        return self.l2_hits / lookups if lookups else 0.0

    def to_dict(self) -> dict:
        return {
            "accesses": self.accesses,
            "l1_lookups": self.l1_lookups,
            "l1_hits": self.l1_hits,
            "l1_misses": self.l1_misses,
            "l2_hits": self.l2_hits,
            "l2_misses": self.l2_misses,
            "l1_hit_rate": self.l1_hit_rate,
            "l2_hit_rate": self.l2_hit_rate,
            "bytes": self.bytes.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SimOutcome":
        bytes_raw = data["bytes"]
        return cls(
            accesses=int(data["accesses"]),
            l1_lookups=int(data["l1_lookups"]),
            l1_hits=int(data["l1_hits"]),
            l1_misses=int(data["l1_misses"]),
            l2_hits=int(data["l2_hits"]),
            l2_misses=int(data["l2_misses"]),
            bytes=LevelBytes(float(bytes_raw["l1"]), float(bytes_raw["l2"]), float(bytes_raw["hbm"])),
        )


@njit(cache=False)
def _run_two_level(
    lines: np.ndarray,
    l1_sets: int,
    l1_assoc: int,
    l2_sets: int,
    l2_assoc: int,
    line_ratio: int,
) -> tuple[int, int, int, int]:
    """Drive both levels over a sequence of L1 line indices.

    Tags store the global L1 line index (or L2 line index at L2), -1 for
    an empty way.  Within a set, way 0 is most recently used; a hit or
    fill rotates the line to the front.  Returns (l1 hits, l1 misses,
    l2 hits, l2 misses).
    """
    l1_tags = np.full((l1_sets, l1_assoc), -1, dtype=np.int64)
    l2_tags = np.full((l2_sets, l2_assoc), -1, dtype=np.int64)
    l1_hits = 0
    l1_misses = 0
    l2_hits = 0
    l2_misses = 0

    for i in range(lines.shape[0]):
        line = lines[i]
        set1 = line % l1_sets
        row1 = l1_tags[set1]
        hit_way = -1
        for w in range(l1_assoc):
            if row1[w] == line:
                hit_way = w
                break
        if hit_way >= 0:
            for w in range(hit_way, 0, -1):
                row1[w] = row1[w - 1]
            row1[0] = line
            l1_hits += 1
            continue
        l1_misses += 1

        # L2 lookup for the containing L2 line.
        line2 = line // line_ratio
        set2 = line2 % l2_sets
        row2 = l2_tags[set2]
        hit2 = -1
        for w in range(l2_assoc):
            if row2[w] == line2:
                hit2 = w
                break
        if hit2 >= 0:
            for w in range(hit2, 0, -1):
                row2[w] = row2[w - 1]
            row2[0] = line2
            l2_hits += 1
        else:
            l2_misses += 1
            victim2 = row2[l2_assoc - 1]
            for w in range(l2_assoc - 1, 0, -1):
                row2[w] = row2[w - 1]
            row2[0] = line2
            if victim2 >= 0:
                # Inclusion: drop every L1 line the evicted L2 line covered.
                base = victim2 * line_ratio
                for k in range(line_ratio):
                    vline = base + k
                    vset = l1_tags[vline % l1_sets]
                    for w in range(l1_assoc):
                        if vset[w] == vline:
                            for z in range(w, l1_assoc - 1):
                                vset[z] = vset[z + 1]
                            vset[l1_assoc - 1] = -1
                            break

        # Fill L1 (the victim leaves silently; L1 is read-only and clean).
        for w in range(l1_assoc - 1, 0, -1):
            row1[w] = row1[w - 1]
        row1[0] = line

    return l1_hits, l1_misses, l2_hits, l2_misses


def _expand_to_line_touches(trace: AccessTrace, line_bytes: int) -> np.ndarray:
    """L1 line index per lookup, splitting accesses that cross lines."""
    if len(trace) == 0:
        return np.empty(0, dtype=np.int64)
    if np.any(trace.offsets >= np.uint64(1) << np.uint64(ARRAY_ID_SHIFT)):
        raise ValidationError(f"trace offsets must be below 2**{ARRAY_ID_SHIFT}")
    addr = (trace.ids.astype(np.int64) << ARRAY_ID_SHIFT) + trace.offsets.astype(np.int64)
    first = addr // line_bytes
    last = (addr + trace.sizes.astype(np.int64) - 1) // line_bytes
    span = last - first + 1
    if int(span.max()) == 1:
        return first
    total = int(span.sum())
    starts = np.zeros(len(span) + 1, dtype=np.int64)
    np.cumsum(span, out=starts[1:])
    # Repeat each first line, then add the step within its own access.
    out = np.repeat(first, span)
    step = np.arange(total, dtype=np.int64) - np.repeat(starts[:-1], span)
    return out + step


def simulate(trace: AccessTrace, config: CacheConfig) -> SimOutcome:
    """Run a read trace through the two-level hierarchy from a cold start."""
    lines = _expand_to_line_touches(trace, config.l1.line_bytes)
    ratio = config.l2.line_bytes // config.l1.line_bytes
    l1_hits, l1_misses, l2_hits, l2_misses = _run_two_level(
        lines,
        config.l1.num_sets,
        config.l1.associativity,
        config.l2.num_sets,
        config.l2.associativity,
        ratio,
    )
    level_bytes = LevelBytes(
        l1=float(trace.total_bytes()),
        l2=float(l1_misses * config.l1.line_bytes),
        hbm=float(l2_misses * config.l2.line_bytes),
    )
    return SimOutcome(
        accesses=len(trace),
        l1_lookups=int(lines.shape[0]),
        l1_hits=int(l1_hits),
        l1_misses=int(l1_misses),
        l2_hits=int(l2_hits),
        l2_misses=int(l2_misses),
        bytes=level_bytes,
    )


def hit_rate_report(outcomes: list[tuple[str, SimOutcome]]) -> dict:
    """Tabulate hit rates for a sequence of labeled outcomes.

    The deltas compare the last entry against the first, which is the
    natural reading for an optimization sweep.
    """
    if not outcomes:
        raise ValidationError("hit_rate_report needs at least one outcome")
    rows = [
        {
            "label": label,
            "l1_hit_rate": outcome.l1_hit_rate,
            "l2_hit_rate": outcome.l2_hit_rate,
            "hbm_bytes": outcome.bytes.hbm,
        }
        for label, outcome in outcomes
    ]
    return {
        "rows": rows,
        "l1_hit_rate_delta": rows[-1]["l1_hit_rate"] - rows[0]["l1_hit_rate"],
        "l2_hit_rate_delta": rows[-1]["l2_hit_rate"] - rows[0]["l2_hit_rate"],
    }
