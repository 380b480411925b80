"""Kernel measurement records: instruction counters, bytes, runtime.

The JSON metrics format is a list of records whose keys mirror the
KernelMetrics field names.  A record is self-contained: anything a
roofline needs for one kernel in one configuration.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, fields
from pathlib import Path

from .errors import DomainError, ValidationError


@dataclass(frozen=True)
class InstructionCounters:
    """Double-precision instruction counts, classified by flop weight.

    ``dfma`` counts fused multiply-adds (two flops each), ``dadd`` and
    ``dmul`` plain one-flop instructions, ``ddiv`` divides (weighting is
    the caller's choice), and ``dother`` everything tracked but not
    counted as flops (compares, square roots, and the like).
    """

    dadd: int = 0
    dmul: int = 0
    dfma: int = 0
    ddiv: int = 0
    dother: int = 0

    def __post_init__(self) -> None:
        for f in fields(self):
            if getattr(self, f.name) < 0:
                raise ValidationError(f"counter {f.name} must be non-negative")

    def __add__(self, other: "InstructionCounters") -> "InstructionCounters":
        return InstructionCounters(
            self.dadd + other.dadd,
            self.dmul + other.dmul,
            self.dfma + other.dfma,
            self.ddiv + other.ddiv,
            self.dother + other.dother,
        )

    def scaled(self, factor: int) -> "InstructionCounters":
        if factor < 0:
            raise DomainError(f"scale factor must be non-negative, got {factor!r}")
        return InstructionCounters(
            self.dadd * factor,
            self.dmul * factor,
            self.dfma * factor,
            self.ddiv * factor,
            self.dother * factor,
        )

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def total_flops(counters: InstructionCounters, div_weight: float = 1.0) -> float:
    """Flop count of a counter set: 2*dfma + dadd + dmul + div_weight*ddiv.

    ``div_weight`` lets a divide count as more than one flop when the
    analysis wants to charge its true instruction expansion.
    """
    if div_weight < 0:
        raise DomainError(f"div_weight must be non-negative, got {div_weight!r}")
    return (
        2.0 * counters.dfma
        + counters.dadd
        + counters.dmul
        + div_weight * counters.ddiv
    )


def fma_ratio(counters: InstructionCounters) -> float:
    """Fraction of floating-point instructions that are FMAs."""
    denom = counters.dadd + counters.dmul + counters.dfma
    if denom == 0:
        raise DomainError("fma_ratio undefined: no dadd/dmul/dfma instructions")
    return counters.dfma / denom


@dataclass(frozen=True)
class LevelBytes:
    """Bytes moved at each memory level while a kernel ran."""

    l1: float
    l2: float
    hbm: float

    def __post_init__(self) -> None:
        for f in fields(self):
            if getattr(self, f.name) < 0:
                raise ValidationError(f"bytes at {f.name} must be non-negative")

    def to_dict(self) -> dict:
        return {"l1": self.l1, "l2": self.l2, "hbm": self.hbm}

    def get(self, level: str) -> float:
        try:
            return getattr(self, level.lower())
        except AttributeError:
            raise ValidationError(f"no byte counter for level {level!r}") from None


@dataclass(frozen=True)
class KernelMetrics:
    """Everything measured about one kernel run."""

    label: str
    runtime: float
    counters: InstructionCounters
    bytes: LevelBytes | None = None
    system: str | None = None
    registers_per_thread: int | None = None
    threads_per_block: int | None = None
    achieved_warps_per_sm: int | None = None

    def __post_init__(self) -> None:
        if not self.label:
            raise ValidationError("metrics record needs a non-empty label")
        if self.runtime <= 0:
            raise ValidationError(
                f"record {self.label!r}: runtime must be positive, got {self.runtime!r}"
            )


def metrics_to_dict(record: KernelMetrics) -> dict:
    out: dict = {
        "label": record.label,
        "runtime": record.runtime,
        "counters": record.counters.to_dict(),
        "bytes": record.bytes.to_dict() if record.bytes is not None else None,
    }
    for name in ("system", "registers_per_thread", "threads_per_block", "achieved_warps_per_sm"):
        value = getattr(record, name)
        if value is not None:
            out[name] = value
    return out


_RECORD_FIELDS = {
    "label",
    "runtime",
    "counters",
    "bytes",
    "system",
    "registers_per_thread",
    "threads_per_block",
    "achieved_warps_per_sm",
}


def metrics_from_dict(data: dict) -> KernelMetrics:
    if not isinstance(data, dict):
        raise ValidationError(f"metrics record must be a JSON object, got {type(data).__name__}")
    unknown = sorted(set(data) - _RECORD_FIELDS)
    if unknown:
        raise ValidationError(f"metrics record has unknown fields: {', '.join(unknown)}")
    for required in ("label", "runtime", "counters"):
        if required not in data:
            raise ValidationError(f"metrics record missing field: {required}")
    counters_raw = data["counters"]
    extra = sorted(set(counters_raw) - {"dadd", "dmul", "dfma", "ddiv", "dother"})
    if extra:
        raise ValidationError(f"counters block has unknown fields: {', '.join(extra)}")
    counters = InstructionCounters(**{k: int(v) for k, v in counters_raw.items()})
    bytes_raw = data.get("bytes")
    level_bytes = None
    if bytes_raw is not None:
        extra = sorted(set(bytes_raw) - {"l1", "l2", "hbm"})
        if extra:
            raise ValidationError(f"bytes block has unknown fields: {', '.join(extra)}")
        missing = sorted({"l1", "l2", "hbm"} - set(bytes_raw))
        if missing:
            raise ValidationError(f"bytes block missing fields: {', '.join(missing)}")
        level_bytes = LevelBytes(**{k: float(v) for k, v in bytes_raw.items()})
    return KernelMetrics(
        label=str(data["label"]),
        runtime=float(data["runtime"]),
        counters=counters,
        bytes=level_bytes,
        system=data.get("system"),
        registers_per_thread=_opt_int(data, "registers_per_thread"),
        threads_per_block=_opt_int(data, "threads_per_block"),
        achieved_warps_per_sm=_opt_int(data, "achieved_warps_per_sm"),
    )


def _opt_int(data: dict, key: str) -> int | None:
    value = data.get(key)
    return None if value is None else int(value)


def load_metrics(path: str | Path) -> list[KernelMetrics]:
    """Read a JSON metrics file (a list of records)."""
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: not valid JSON: {exc}") from exc
    if not isinstance(data, list):
        raise ValidationError(f"{path}: metrics file must hold a JSON list of records")
    try:
        return [metrics_from_dict(entry) for entry in data]
    except ValidationError as exc:
        raise ValidationError(f"{path}: {exc}") from None


def save_metrics(records: list[KernelMetrics], path: str | Path) -> None:
    Path(path).write_text(
        json.dumps([metrics_to_dict(r) for r in records], indent=2) + "\n",
        encoding="utf-8",
    )


def bundled_dataset_path() -> Path:
    """Path of the shipped measurement set: nine kernel versions timed on
    two V100 systems, with their launch configurations."""
    return Path(__file__).parent / "data" / "gpp-optimization-path.metrics.json"


# Column names as a profiler CSV export typically spells them.  Values are
# the CSV column to read for each supported record field; counters default
# to zero and bytes to absent when their columns are left out of a mapping.
DEFAULT_PROFILER_MAPPING: dict[str, str] = {
    "label": "Kernel Name",
    "runtime": "gpu__time_duration.sum",
    "dadd": "smsp__sass_thread_inst_executed_op_dadd_pred_on.sum",
    "dmul": "smsp__sass_thread_inst_executed_op_dmul_pred_on.sum",
    "dfma": "smsp__sass_thread_inst_executed_op_dfma_pred_on.sum",
    "l1": "l1tex__t_bytes.sum",
    "l2": "lts__t_bytes.sum",
    "hbm": "dram__bytes.sum",
}

_COUNTER_KEYS = ("dadd", "dmul", "dfma", "ddiv", "dother")
_BYTE_KEYS = ("l1", "l2", "hbm")


def import_profiler_csv(
    path: str | Path,
    mapping: dict[str, str] | None = None,
    runtime_scale: float = 1.0,
) -> list[KernelMetrics]:
    """Convert a profiler CSV export into metrics records, one per row.

    ``mapping`` names the CSV column for each field of interest; fields
    left unmapped are simply absent from the result.  A mapped column
    that the file does not contain is an error naming that column.
    ``runtime_scale`` converts the runtime column into seconds (for
    example 1e-9 for a nanosecond export).
    """
    mapping = dict(DEFAULT_PROFILER_MAPPING if mapping is None else mapping)
    allowed = {"label", "runtime", "system"} | set(_COUNTER_KEYS) | set(_BYTE_KEYS)
    unknown = sorted(set(mapping) - allowed)
    if unknown:
        raise ValidationError(f"profiler mapping has unknown fields: {', '.join(unknown)}")
    for required in ("label", "runtime"):
        if required not in mapping:
            raise ValidationError(f"profiler mapping must map {required!r}")

    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = sorted({col for col in mapping.values() if col not in header})
        if missing:
            raise ValidationError(f"{path}: CSV is missing mapped columns: {', '.join(missing)}")
        records = []
        for row in reader:
            counters = InstructionCounters(
                **{
                    key: int(float(row[mapping[key]]))
                    for key in _COUNTER_KEYS
                    if key in mapping
                }
            )
            level_bytes = None
            if any(key in mapping for key in _BYTE_KEYS):
                missing_bytes = sorted(k for k in _BYTE_KEYS if k not in mapping)
                if missing_bytes:
                    raise ValidationError(
                        "profiler mapping must map all of l1/l2/hbm or none, "
                        f"missing: {', '.join(missing_bytes)}"
                    )
                level_bytes = LevelBytes(
                    **{key: float(row[mapping[key]]) for key in _BYTE_KEYS}
                )
            records.append(
                KernelMetrics(
                    label=row[mapping["label"]],
                    runtime=float(row[mapping["runtime"]]) * runtime_scale,
                    counters=counters,
                    bytes=level_bytes,
                    system=row[mapping["system"]] if "system" in mapping else None,
                )
            )
    return records
