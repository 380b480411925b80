"""Register-file occupancy model for a streaming multiprocessor.

Registers are allocated per warp in fixed granules, so the warp count an
SM can host is a step function of registers per thread.  The model here
reproduces the usual CUDA occupancy arithmetic: round the per-thread
count up to the allocation unit, multiply by the warp width, round up to
the warp allocation granule, then take the tightest of the register,
thread, and block limits.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import DomainError, ValidationError


def _roundup(value: int, granule: int) -> int:
    return -(-value // granule) * granule


@dataclass(frozen=True)
class SMResources:
    """Per-SM limits that bound how many warps can be resident."""

    register_file: int = 65536
    max_warps: int = 64
    max_threads: int = 2048
    max_threads_per_block: int = 1024
    max_blocks: int = 32
    reg_alloc_granularity: int = 256
    reg_per_thread_granularity: int = 8
    warp_size: int = 32

    def __post_init__(self) -> None:
        for name in (
            "register_file",
            "max_warps",
            "max_threads",
            "max_threads_per_block",
            "max_blocks",
            "reg_alloc_granularity",
            "reg_per_thread_granularity",
            "warp_size",
        ):
            if getattr(self, name) <= 0:
                raise ValidationError(f"sm_resources.{name} must be positive")

    @classmethod
    def from_dict(cls, data: dict) -> "SMResources":
        if not isinstance(data, dict):
            raise ValidationError("sm_resources must be a JSON object")
        known = {f for f in cls.__dataclass_fields__}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ValidationError(f"sm_resources has unknown fields: {', '.join(unknown)}")
        return cls(**{k: int(v) for k, v in data.items()})

    def to_dict(self) -> dict:
        return {f: getattr(self, f) for f in self.__dataclass_fields__}


@dataclass(frozen=True)
class LaunchConfig:
    """A kernel launch as the occupancy model sees it."""

    registers_per_thread: int
    threads_per_block: int


@dataclass(frozen=True)
class OccupancyResult:
    """Resident warps per SM and what capped them.

    ``limited_by`` is one of ``"registers"``, ``"threads"``, ``"blocks"``.
    A launch that reaches the device warp limit reports ``"threads"``,
    since thread capacity is what full occupancy exhausts.
    """

    warps: int
    blocks: int
    regs_per_warp: int
    limited_by: str
    max_warps: int

    @property
    def occupancy(self) -> float:
        return self.warps / self.max_warps


def regs_per_warp(registers_per_thread: int, resources: SMResources = SMResources()) -> int:
    """Registers one warp actually reserves, after both rounding steps."""
    if not 1 <= registers_per_thread <= 255:
        raise DomainError(
            f"registers_per_thread must be in [1, 255], got {registers_per_thread!r}"
        )
    per_thread = _roundup(registers_per_thread, resources.reg_per_thread_granularity)
    return _roundup(per_thread * resources.warp_size, resources.reg_alloc_granularity)


def theoretical_active_warps(
    launch: LaunchConfig, resources: SMResources = SMResources()
) -> OccupancyResult:
    """Warps per SM the register file and launch shape allow."""
    tpb = launch.threads_per_block
    if tpb < resources.warp_size or tpb % resources.warp_size != 0:
        raise DomainError(
            f"threads_per_block must be a positive multiple of {resources.warp_size}, "
            f"got {tpb!r}"
        )
    if tpb > resources.max_threads_per_block:
        raise DomainError(
            f"threads_per_block {tpb} exceeds the block limit "
            f"{resources.max_threads_per_block}"
        )
    rpw = regs_per_warp(launch.registers_per_thread, resources)
    warps_per_block = tpb // resources.warp_size

    by_registers = resources.register_file // (rpw * warps_per_block)
    by_threads = resources.max_threads // tpb
    by_blocks = resources.max_blocks
    blocks = min(by_registers, by_threads, by_blocks)
    warps = min(blocks * warps_per_block, resources.max_warps)

    if warps >= resources.max_warps:
        limited_by = "threads"
    elif blocks == by_registers:
        limited_by = "registers"
    elif blocks == by_threads:
        limited_by = "threads"
    else:
        limited_by = "blocks"
    return OccupancyResult(
        warps=warps,
        blocks=blocks,
        regs_per_warp=rpw,
        limited_by=limited_by,
        max_warps=resources.max_warps,
    )
