"""Roofline analysis toolkit.

Core surface: machine descriptions with derived ceilings, kernel
metrics with exact instruction counters, roofline classification and
optimization trajectories, an SM occupancy model, a two-level cache
simulator driven by binary read traces, a nine-version synthetic kernel
workload that exercises all of it, and a deterministic SVG chart
renderer.
"""

from .errors import DomainError, RooflabError, SynthesisError, ValidationError
from .machine import (
    ComputeCeiling,
    MachineDescription,
    MemoryLevel,
    bundled_machine_path,
    fma_adjusted_peak,
    fma_fraction,
    load_machine,
    machine_balance,
    save_machine,
    theoretical_peak,
)
from .metrics import (
    InstructionCounters,
    KernelMetrics,
    LevelBytes,
    bundled_dataset_path,
    fma_ratio,
    import_profiler_csv,
    load_metrics,
    save_metrics,
    total_flops,
)
from .occupancy import (
    LaunchConfig,
    OccupancyResult,
    SMResources,
    regs_per_warp,
    theoretical_active_warps,
)
from .roofline import (
    BANDWIDTH_BOUND,
    COMPUTE_BOUND,
    RooflinePoint,
    TrajectoryReport,
    achieved_throughput,
    arithmetic_intensity,
    attainable,
    classify,
    load_report,
    locality_gaps,
    save_report,
    trajectory,
)
from .cachesim import (
    CacheConfig,
    CacheLevelConfig,
    SimOutcome,
    bundled_cachesim_path,
    hit_rate_report,
    load_cache_config,
    simulate,
)
from .tracefile import AccessTrace, read_trace, write_trace
from .chart import ChartSpec, color_for_label, render_chart, validate_geometry

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
