"""The roofline model itself: intensities, attainable bounds, trajectories.

The attainable throughput at arithmetic intensity ``ai`` against one
memory level is ``min(peak, ai * bandwidth)``.  A kernel is bandwidth
bound at a level when its intensity sits left of the ridge point
(``ai < peak / bandwidth``); a kernel exactly at the ridge counts as
compute bound.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .errors import DomainError, ValidationError
from .machine import MachineDescription, fma_adjusted_peak, machine_balance, machine_from_dict, machine_to_dict
from .metrics import KernelMetrics, LevelBytes, fma_ratio, metrics_from_dict, metrics_to_dict, total_flops

COMPUTE_BOUND = "compute-bound"
BANDWIDTH_BOUND = "bandwidth-bound"


def arithmetic_intensity(flops: float, bytes_moved: float) -> float:
    """Flops per byte of traffic at one memory level."""
    if flops < 0:
        raise DomainError(f"flops must be non-negative, got {flops!r}")
    if bytes_moved <= 0:
        raise DomainError(f"bytes_moved must be positive, got {bytes_moved!r}")
    return flops / bytes_moved


def achieved_throughput(flops: float, runtime_s: float) -> float:
    """Flops per second actually delivered."""
    if flops < 0:
        raise DomainError(f"flops must be non-negative, got {flops!r}")
    if runtime_s <= 0:
        raise DomainError(f"runtime_s must be positive, got {runtime_s!r}")
    return flops / runtime_s


def attainable(peak_flop_per_s: float, bandwidth_bytes_per_s: float, ai: float) -> float:
    """Roofline bound at intensity ``ai``: min(peak, ai * bandwidth)."""
    if ai < 0:
        raise DomainError(f"ai must be non-negative, got {ai!r}")
    if peak_flop_per_s <= 0 or bandwidth_bytes_per_s <= 0:
        raise DomainError("peak and bandwidth must be positive")
    return min(peak_flop_per_s, ai * bandwidth_bytes_per_s)


def classify(peak_flop_per_s: float, bandwidth_bytes_per_s: float, ai: float) -> str:
    """Which side of the ridge an intensity falls on; ties are compute bound."""
    balance = machine_balance(peak_flop_per_s, bandwidth_bytes_per_s)
    return BANDWIDTH_BOUND if ai < balance else COMPUTE_BOUND


@dataclass(frozen=True)
class RooflinePoint:
    """One kernel plotted against one memory level."""

    label: str
    level: str
    ai: float
    throughput: float
    attainable: float
    bound: str

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "level": self.level,
            "ai": self.ai,
            "throughput": self.throughput,
            "attainable": self.attainable,
            "bound": self.bound,
        }


def locality_gaps(level_bytes: LevelBytes) -> tuple[float, float]:
    """Intensity ratios between adjacent levels: (l1/l2, l2/hbm).

    A gap well above 1 means the nearer level filters most of the
    traffic before it reaches the farther one; a gap of 1 means the
    level is transparent for this kernel.
    """
    if level_bytes.l2 <= 0 or level_bytes.hbm <= 0:
        raise DomainError("locality gaps need positive l2 and hbm byte counts")
    return (level_bytes.l1 / level_bytes.l2, level_bytes.l2 / level_bytes.hbm)


@dataclass(frozen=True)
class TrajectoryEntry:
    """One kernel's spot in an optimization sequence."""

    label: str
    runtime: float
    flops: float
    throughput: float
    fraction_of_peak: float
    fraction_of_adjusted_peak: float | None
    step_speedup: float | None
    points: tuple[RooflinePoint, ...]
    gaps: tuple[float, float] | None
    registers_per_thread: int | None = None
    threads_per_block: int | None = None
    achieved_warps_per_sm: int | None = None


@dataclass(frozen=True)
class TrajectorySequence:
    """The entries of one system, in optimization order."""

    system: str | None
    entries: tuple[TrajectoryEntry, ...]
    cumulative_speedup: float | None


@dataclass(frozen=True)
class TrajectoryReport:
    """A full analysis run: machine context plus per-system sequences."""

    machine: MachineDescription
    ceiling_label: str
    fma_ratio: float | None
    div_weight: float
    sequences: tuple[TrajectorySequence, ...]


def _entry_for(
    record: KernelMetrics,
    machine: MachineDescription,
    peak: float,
    adjusted: float | None,
    div_weight: float,
    prev_runtime: float | None,
) -> TrajectoryEntry:
    flops = total_flops(record.counters, div_weight)
    throughput = achieved_throughput(flops, record.runtime)
    points: list[RooflinePoint] = []
    gaps = None
    if record.bytes is not None:
        for level in machine.levels:
            try:
                moved = record.bytes.get(level.name)
            except ValidationError:
                continue
            if moved <= 0:
                continue
            ai = arithmetic_intensity(flops, moved)
            points.append(
                RooflinePoint(
                    label=record.label,
                    level=level.name,
                    ai=ai,
                    throughput=throughput,
                    attainable=attainable(peak, level.bandwidth_bytes_per_s, ai),
                    bound=classify(peak, level.bandwidth_bytes_per_s, ai),
                )
            )
        if record.bytes.l2 > 0 and record.bytes.hbm > 0:
            gaps = locality_gaps(record.bytes)
    return TrajectoryEntry(
        label=record.label,
        runtime=record.runtime,
        flops=flops,
        throughput=throughput,
        fraction_of_peak=throughput / peak,
        fraction_of_adjusted_peak=None if adjusted is None else throughput / adjusted,
        step_speedup=None if prev_runtime is None else prev_runtime / record.runtime,
        points=tuple(points),
        gaps=gaps,
        registers_per_thread=record.registers_per_thread,
        threads_per_block=record.threads_per_block,
        achieved_warps_per_sm=record.achieved_warps_per_sm,
    )


def trajectory(
    records: list[KernelMetrics],
    machine: MachineDescription,
    fma_ratio: float | None = None,
    div_weight: float = 1.0,
    ceiling_label: str | None = None,
) -> TrajectoryReport:
    """Analyze an ordered record list as one or more optimization paths.

    Records are grouped by their ``system`` field (order preserved); the
    speedup chain runs within each group.  ``fma_ratio`` adds fractions
    of the FMA-adjusted peak alongside fractions of the full ceiling.
    """
    if not records:
        raise ValidationError("trajectory needs at least one metrics record")
    ceiling = (
        machine.default_ceiling() if ceiling_label is None else machine.ceiling(ceiling_label)
    )
    peak = ceiling.peak_flop_per_s
    adjusted = None if fma_ratio is None else fma_adjusted_peak(peak, fma_ratio)

    order: list[str | None] = []
    grouped: dict[str | None, list[KernelMetrics]] = {}
    for record in records:
        if record.system not in grouped:
            order.append(record.system)
            grouped[record.system] = []
        grouped[record.system].append(record)

    sequences = []
    for system in order:
        group = grouped[system]
        entries = []
        prev_runtime = None
        for record in group:
            entries.append(_entry_for(record, machine, peak, adjusted, div_weight, prev_runtime))
            prev_runtime = record.runtime
        cumulative = group[0].runtime / group[-1].runtime if len(group) > 1 else None
        sequences.append(
            TrajectorySequence(system=system, entries=tuple(entries), cumulative_speedup=cumulative)
        )
    return TrajectoryReport(
        machine=machine,
        ceiling_label=ceiling.label,
        fma_ratio=fma_ratio,
        div_weight=div_weight,
        sequences=tuple(sequences),
    )


def mix_fma_ratio(records: list[KernelMetrics]) -> float:
    """FMA ratio of the summed counters of a record list."""
    totals = records[0].counters
    for record in records[1:]:
        totals = totals + record.counters
    return fma_ratio(totals)


def report_to_dict(report: TrajectoryReport) -> dict:
    return {
        "machine": machine_to_dict(report.machine),
        "ceiling_label": report.ceiling_label,
        "fma_ratio": report.fma_ratio,
        "div_weight": report.div_weight,
        "sequences": [
            {
                "system": seq.system,
                "cumulative_speedup": seq.cumulative_speedup,
                "entries": [
                    {
                        "label": e.label,
                        "runtime": e.runtime,
                        "flops": e.flops,
                        "throughput": e.throughput,
                        "fraction_of_peak": e.fraction_of_peak,
                        "fraction_of_adjusted_peak": e.fraction_of_adjusted_peak,
                        "step_speedup": e.step_speedup,
                        "points": [p.to_dict() for p in e.points],
                        "gaps": list(e.gaps) if e.gaps is not None else None,
                        "registers_per_thread": e.registers_per_thread,
                        "threads_per_block": e.threads_per_block,
                        "achieved_warps_per_sm": e.achieved_warps_per_sm,
                    }
                    for e in seq.entries
                ],
            }
            for seq in report.sequences
        ],
    }


def report_from_dict(data: dict) -> TrajectoryReport:
    try:
        machine = machine_from_dict(data["machine"])
        sequences = []
        for seq in data["sequences"]:
            entries = []
            for e in seq["entries"]:
                points = tuple(
                    RooflinePoint(
                        label=p["label"],
                        level=p["level"],
                        ai=float(p["ai"]),
                        throughput=float(p["throughput"]),
                        attainable=float(p["attainable"]),
                        bound=p["bound"],
                    )
                    for p in e["points"]
                )
                gaps = e.get("gaps")
                entries.append(
                    TrajectoryEntry(
                        label=e["label"],
                        runtime=float(e["runtime"]),
                        flops=float(e["flops"]),
                        throughput=float(e["throughput"]),
                        fraction_of_peak=float(e["fraction_of_peak"]),
                        fraction_of_adjusted_peak=(
                            None
                            if e.get("fraction_of_adjusted_peak") is None
                            else float(e["fraction_of_adjusted_peak"])
                        ),
                        step_speedup=(
                            None if e.get("step_speedup") is None else float(e["step_speedup"])
                        ),
                        points=points,
                        gaps=None if gaps is None else (float(gaps[0]), float(gaps[1])),
                        registers_per_thread=e.get("registers_per_thread"),
                        threads_per_block=e.get("threads_per_block"),
                        achieved_warps_per_sm=e.get("achieved_warps_per_sm"),
                    )
                )
            sequences.append(
                TrajectorySequence(
                    system=seq.get("system"),
                    entries=tuple(entries),
                    cumulative_speedup=(
                        None
                        if seq.get("cumulative_speedup") is None
                        else float(seq["cumulative_speedup"])
                    ),
                )
            )
        return TrajectoryReport(
            machine=machine,
            ceiling_label=data["ceiling_label"],
            fma_ratio=None if data.get("fma_ratio") is None else float(data["fma_ratio"]),
            div_weight=float(data.get("div_weight", 1.0)),
            sequences=tuple(sequences),
        )
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"malformed trajectory report: {exc!r}") from exc


def save_report(report: TrajectoryReport, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(report_to_dict(report), indent=2) + "\n", encoding="utf-8"
    )


def load_report(path: str | Path) -> TrajectoryReport:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: not valid JSON: {exc}") from exc
    try:
        return report_from_dict(data)
    except ValidationError as exc:
        raise ValidationError(f"{path}: {exc}") from None


def all_points(report: TrajectoryReport) -> list[RooflinePoint]:
    """Every roofline point in the report, in sequence order."""
    points: list[RooflinePoint] = []
    for seq in report.sequences:
        for entry in seq.entries:
            points.extend(entry.points)
    return points
