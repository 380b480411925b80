"""Machine descriptions: compute ceilings, memory levels, and balance.

A machine file is UTF-8 JSON with explicit units in the field names.  The
peak of the primary ceiling is stored alongside the parameters it was
derived from, and loading validates that the two agree instead of silently
recomputing one from the other.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .cachesim import CacheConfig
from .errors import DomainError, ValidationError
from .occupancy import SMResources

_PEAK_MATCH_RTOL = 1e-9


def theoretical_peak(
    num_units: int,
    lanes_per_unit: int,
    ops_per_lane_cycle: int,
    clock_hz: float,
) -> float:
    """Peak FLOP/s of a chip: units x lanes x ops-per-lane-cycle x clock.

    ``ops_per_lane_cycle`` is 2 for a lane that retires one fused
    multiply-add per cycle, 1 for plain add/mul pipes.
    """
    for name, value in (
        ("num_units", num_units),
        ("lanes_per_unit", lanes_per_unit),
        ("ops_per_lane_cycle", ops_per_lane_cycle),
        ("clock_hz", clock_hz),
    ):
        if value <= 0:
            raise DomainError(f"{name} must be positive, got {value!r}")
    return num_units * lanes_per_unit * ops_per_lane_cycle * clock_hz


def fma_fraction(fma_ratio: float) -> float:
    """Fraction of peak reachable by an instruction mix with the given
    FMA ratio: ``(1 + ratio) / 2``.

    A ratio of 1.0 (pure FMA) keeps the full peak; a ratio of 0.0 halves
    it because every issue slot then carries one flop instead of two.
    """
    if not 0.0 <= fma_ratio <= 1.0:
        raise DomainError(f"fma_ratio must be in [0, 1], got {fma_ratio!r}")
    return (1.0 + fma_ratio) / 2.0


def fma_adjusted_peak(peak_flop_per_s: float, fma_ratio: float) -> float:
    """Scale a theoretical peak down to what a partially-FMA mix can reach."""
    if peak_flop_per_s <= 0:
        raise DomainError(f"peak_flop_per_s must be positive, got {peak_flop_per_s!r}")
    return peak_flop_per_s * fma_fraction(fma_ratio)


def machine_balance(peak_flop_per_s: float, bandwidth_bytes_per_s: float) -> float:
    """Ridge point of a roofline in FLOPs per byte: peak / bandwidth."""
    if peak_flop_per_s <= 0:
        raise DomainError(f"peak_flop_per_s must be positive, got {peak_flop_per_s!r}")
    if bandwidth_bytes_per_s <= 0:
        raise DomainError(
            f"bandwidth_bytes_per_s must be positive, got {bandwidth_bytes_per_s!r}"
        )
    return peak_flop_per_s / bandwidth_bytes_per_s


@dataclass(frozen=True)
class MemoryLevel:
    """One level of the memory hierarchy with a sustained bandwidth."""

    name: str
    bandwidth_bytes_per_s: float

    def __post_init__(self) -> None:
        if not self.name:
            raise ValidationError("memory level name must be non-empty")
        if self.bandwidth_bytes_per_s <= 0:
            raise ValidationError(
                f"level {self.name!r}: bandwidth_bytes_per_s must be positive, "
                f"got {self.bandwidth_bytes_per_s!r}"
            )


@dataclass(frozen=True)
class ComputeCeiling:
    """A horizontal roof: peak FLOP/s for one precision / instruction mix."""

    label: str
    precision: str
    peak_flop_per_s: float

    def __post_init__(self) -> None:
        if not self.label:
            raise ValidationError("ceiling label must be non-empty")
        if self.peak_flop_per_s <= 0:
            raise ValidationError(
                f"ceiling {self.label!r}: peak_flop_per_s must be positive, "
                f"got {self.peak_flop_per_s!r}"
            )


@dataclass(frozen=True)
class MachineDescription:
    """A machine as seen by the roofline model.

    ``num_units`` x ``lanes_per_unit`` x ``ops_per_lane_cycle`` x ``clock_hz``
    must reproduce the peak of at least one ceiling (the derived one);
    this is checked at construction.  Levels and ceilings are keyed by
    name and label, so their order in the file does not matter.
    """

    name: str
    num_units: int
    lanes_per_unit: int
    ops_per_lane_cycle: int
    clock_hz: float
    levels: tuple[MemoryLevel, ...]
    ceilings: tuple[ComputeCeiling, ...]
    sm_resources: SMResources = field(default_factory=SMResources)
    cache_sim: CacheConfig | None = None
    notes: str | None = None

    def __post_init__(self) -> None:
        if not self.levels:
            raise ValidationError("machine must declare at least one memory level")
        if not self.ceilings:
            raise ValidationError("machine must declare at least one ceiling")
        names = [lv.name for lv in self.levels]
        if len(set(names)) != len(names):
            raise ValidationError(f"duplicate memory level names: {names}")
        labels = [c.label for c in self.ceilings]
        if len(set(labels)) != len(labels):
            raise ValidationError(f"duplicate ceiling labels: {labels}")
        derived = self.derived_peak
        if not any(
            abs(c.peak_flop_per_s - derived) <= _PEAK_MATCH_RTOL * derived
            for c in self.ceilings
        ):
            raise ValidationError(
                f"no ceiling matches the derived peak {derived!r} "
                "(num_units x lanes_per_unit x ops_per_lane_cycle x clock_hz); "
                "fix the ceiling peak_flop_per_s or the derivation fields"
            )

    @property
    def derived_peak(self) -> float:
        return theoretical_peak(
            self.num_units, self.lanes_per_unit, self.ops_per_lane_cycle, self.clock_hz
        )

    def level(self, name: str) -> MemoryLevel:
        for lv in self.levels:
            if lv.name == name:
                return lv
        raise ValidationError(f"machine {self.name!r} has no memory level {name!r}")

    def ceiling(self, label: str) -> ComputeCeiling:
        for c in self.ceilings:
            if c.label == label:
                return c
        raise ValidationError(f"machine {self.name!r} has no ceiling {label!r}")

    def default_ceiling(self) -> ComputeCeiling:
        """The highest ceiling; what classification measures against."""
        return max(self.ceilings, key=lambda c: c.peak_flop_per_s)

    def balance(self, level_name: str, ceiling_label: str | None = None) -> float:
        """Machine balance of one level against a ceiling (default: highest)."""
        ceiling = (
            self.default_ceiling() if ceiling_label is None else self.ceiling(ceiling_label)
        )
        return machine_balance(
            ceiling.peak_flop_per_s, self.level(level_name).bandwidth_bytes_per_s
        )


_REQUIRED_FIELDS = (
    "name",
    "num_units",
    "lanes_per_unit",
    "ops_per_lane_cycle",
    "clock_hz",
    "levels",
    "ceilings",
)
_OPTIONAL_FIELDS = ("sm_resources", "cache_sim", "notes")


def machine_from_dict(data: dict) -> MachineDescription:
    if not isinstance(data, dict):
        raise ValidationError(f"machine description must be a JSON object, got {type(data).__name__}")
    missing = [f for f in _REQUIRED_FIELDS if f not in data]
    if missing:
        raise ValidationError(f"machine description missing fields: {', '.join(missing)}")
    unknown = sorted(set(data) - set(_REQUIRED_FIELDS) - set(_OPTIONAL_FIELDS))
    if unknown:
        raise ValidationError(f"machine description has unknown fields: {', '.join(unknown)}")

    def _level(entry: dict) -> MemoryLevel:
        extra = sorted(set(entry) - {"name", "bandwidth_bytes_per_s"})
        if extra:
            raise ValidationError(f"memory level has unknown fields: {', '.join(extra)}")
        try:
            return MemoryLevel(entry["name"], float(entry["bandwidth_bytes_per_s"]))
        except KeyError as exc:
            raise ValidationError(f"memory level missing field: {exc.args[0]}") from None

    def _ceiling(entry: dict) -> ComputeCeiling:
        extra = sorted(set(entry) - {"label", "precision", "peak_flop_per_s"})
        if extra:
            raise ValidationError(f"ceiling has unknown fields: {', '.join(extra)}")
        try:
            return ComputeCeiling(
                entry["label"], entry["precision"], float(entry["peak_flop_per_s"])
            )
        except KeyError as exc:
            raise ValidationError(f"ceiling missing field: {exc.args[0]}") from None

    sm = data.get("sm_resources")
    cache = data.get("cache_sim")
    return MachineDescription(
        name=str(data["name"]),
        num_units=int(data["num_units"]),
        lanes_per_unit=int(data["lanes_per_unit"]),
        ops_per_lane_cycle=int(data["ops_per_lane_cycle"]),
        clock_hz=float(data["clock_hz"]),
        levels=tuple(_level(e) for e in data["levels"]),
        ceilings=tuple(_ceiling(e) for e in data["ceilings"]),
        sm_resources=SMResources.from_dict(sm) if sm is not None else SMResources(),
        cache_sim=CacheConfig.from_dict(cache) if cache is not None else None,
        notes=data.get("notes"),
    )


def machine_to_dict(machine: MachineDescription) -> dict:
    out: dict = {
        "name": machine.name,
        "num_units": machine.num_units,
        "lanes_per_unit": machine.lanes_per_unit,
        "ops_per_lane_cycle": machine.ops_per_lane_cycle,
        "clock_hz": machine.clock_hz,
        "levels": [
            {"name": lv.name, "bandwidth_bytes_per_s": lv.bandwidth_bytes_per_s}
            for lv in machine.levels
        ],
        "ceilings": [
            {"label": c.label, "precision": c.precision, "peak_flop_per_s": c.peak_flop_per_s}
            for c in machine.ceilings
        ],
        "sm_resources": machine.sm_resources.to_dict(),
    }
    if machine.cache_sim is not None:
        out["cache_sim"] = machine.cache_sim.to_dict()
    if machine.notes is not None:
        out["notes"] = machine.notes
    return out


def load_machine(path: str | Path) -> MachineDescription:
    """Load and validate a machine file."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: not valid JSON: {exc}") from exc
    try:
        return machine_from_dict(data)
    except ValidationError as exc:
        raise ValidationError(f"{path}: {exc}") from None


def save_machine(machine: MachineDescription, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(machine_to_dict(machine), indent=2) + "\n", encoding="utf-8"
    )


def bundled_machine_path() -> Path:
    """Path of the machine file shipped inside the package."""
    return Path(__file__).resolve().parent / "data" / "v100.machine"
