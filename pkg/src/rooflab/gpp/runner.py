"""The nine kernel versions: traversal orders, traces, and run orchestration.

A version is a recipe, not new physics: it names an arithmetic variant,
a traversal order for the (band, igp, ig, iw) nest, an element layout
for the aqsmtemp array, and the launch shape the compiled kernel used.
Results come from the variant alone; traversal shows up in the memory
trace and the instruction counters.

Trace semantics are fixed across versions so traces stay comparable:
every loop instance issues exactly four element reads, in the order
wtilde, aqsntemp, i_eps, aqsmtemp, with no hoisting of loop-invariant
loads.  Versions that keep the iw pair innermost therefore emit eight
reads per tuple back to back; the iw-outermost version emits the same
reads split across two full passes.  Every version's trace is therefore
a permutation of one multiset of reads; even the aqsmtemp transpose
preserves the multiset (both layouts cover the same cells equally
often) and shows up only in which instance reads which address, which
is exactly the part a cache responds to.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, replace

import numpy as np

from ..cachesim import CacheConfig, SimOutcome, simulate
from ..errors import DomainError
from ..metrics import InstructionCounters, KernelMetrics, LevelBytes
from ..occupancy import LaunchConfig, OccupancyResult, SMResources, theoretical_active_warps
from ..tracefile import AccessTrace
from .kernel import BranchStats, branch_stats, counters_from_stats, evaluate_variant
from .problem import BYTES_PER_ELEMENT, NW, GPPProblem, GPPResult

ARRAY_WTILDE = 0
ARRAY_I_EPS = 1
ARRAY_AQSNTEMP = 2
ARRAY_AQSMTEMP = 3

ARRAY_NAMES = {
    ARRAY_WTILDE: "wtilde",
    ARRAY_I_EPS: "i_eps",
    ARRAY_AQSNTEMP: "aqsntemp",
    ARRAY_AQSMTEMP: "aqsmtemp",
}

# One instance reads its wtilde element, the aqsntemp element, the
# i_eps element, then the aqsmtemp element.
_READ_ORDER = (ARRAY_WTILDE, ARRAY_AQSNTEMP, ARRAY_I_EPS, ARRAY_AQSMTEMP)

WARP_SIZE = 32


@dataclass(frozen=True)
class VersionSpec:
    name: str
    variant: str
    order: str  # band_major | igp_major | iw_major | warp_blocked
    aqsm_band_fast: bool
    registers_per_thread: int
    threads_per_block: int
    description: str

    @property
    def t_per_instance(self) -> bool:
        """Whether the band weight t is rebuilt for each iw pass."""
        return self.order == "iw_major"

    @property
    def far_takes_sqrt(self) -> bool:
        return self.variant == "rcp_sq"


VERSIONS: dict[str, VersionSpec] = {
    spec.name: spec
    for spec in (
        VersionSpec(
            "v0", "div", "band_major", False, 154, 128,
            "baseline nest with library complex division and magnitude predicates",
        ),
        VersionSpec(
            "v1", "rcp", "band_major", False, 160, 128,
            "complex division rewritten as reciprocal times multiply",
        ),
        VersionSpec(
            "v2", "rcp", "band_major", False, 160, 128,
            "reciprocal form with the branch bodies folded together; modeled like v1",
        ),
        VersionSpec(
            "v3", "rcp_sq", "band_major", False, 154, 128,
            "predicates compare squared magnitudes; sqrt survives only on the far branch",
        ),
        VersionSpec(
            "v4", "rcp_sq", "igp_major", False, 170, 128,
            "nest reordered to igp, ig, band so the band reduction runs innermost",
        ),
        VersionSpec(
            "v5", "rcp_sq", "iw_major", False, 136, 128,
            "iw hoisted outermost: one full pass of the nest per iw value",
        ),
        VersionSpec(
            "v6", "rcp_sq", "warp_blocked", False, 178, 128,
            "band-blocked warp-lockstep traversal over ig chunks",
        ),
        VersionSpec(
            "v7", "rcp_sq", "warp_blocked", True, 184, 128,
            "warp-lockstep traversal with aqsmtemp transposed to band-fastest",
        ),
        VersionSpec(
            "v8", "rcp_sq", "warp_blocked", True, 128, 512,
            "v7 recompiled at 512 threads per block under a 128 register budget",
        ),
    )
}

VERSION_NAMES = tuple(VERSIONS)


def version_spec(name: str) -> VersionSpec:
    try:
        return VERSIONS[name]
    except KeyError:
        raise DomainError(f"unknown version {name!r}, expected one of {', '.join(VERSIONS)}") from None


def block_sizes(nbands: int, ncouls: int) -> tuple[int, int]:
    """Band block count and ig chunk width for the warp-lockstep order.

    The band dimension splits into ``bbs`` interleaved phases (scaled so
    a thousand-band problem gets 64 of them); ig is chunked ``ibs`` wide
    so one block of threads covers a chunk per step.
    """
    bbs = max(1, round(nbands * 64 / 1000))
    ibs = min(128, ncouls)
    return bbs, ibs


def _band_major(nbands: int, ngpown: int, ncouls: int):
    b = np.repeat(np.arange(nbands, dtype=np.int64), ngpown * ncouls)
    g = np.tile(np.repeat(np.arange(ngpown, dtype=np.int64), ncouls), nbands)
    i = np.tile(np.arange(ncouls, dtype=np.int64), nbands * ngpown)
    return b, g, i


def _igp_major(nbands: int, ngpown: int, ncouls: int):
    g = np.repeat(np.arange(ngpown, dtype=np.int64), ncouls * nbands)
    i = np.tile(np.repeat(np.arange(ncouls, dtype=np.int64), nbands), ngpown)
    b = np.tile(np.arange(nbands, dtype=np.int64), ncouls * ngpown)
    return b, g, i


def _warp_blocked(nbands: int, ngpown: int, ncouls: int):
    bbs, ibs = block_sizes(nbands, ncouls)
    n_warps = -(-ibs // WARP_SIZE)
    n_chains = -(-ncouls // ibs)
    lanes = np.arange(WARP_SIZE, dtype=np.int64)

    phase_blocks = []
    for phase in range(bbs):
        bands = np.arange(phase, nbands, bbs, dtype=np.int64)
        if bands.size == 0:
            continue
        w_ax, b_ax, j_ax, l_ax = np.meshgrid(
            np.arange(n_warps, dtype=np.int64),
            bands,
            np.arange(n_chains, dtype=np.int64),
            lanes,
            indexing="ij",
        )
        ig = j_ax * ibs + w_ax * WARP_SIZE + l_ax
        keep = (ig < ncouls).ravel()
        phase_blocks.append((b_ax.ravel()[keep], ig.ravel()[keep]))

    g_parts = []
    b_parts = []
    i_parts = []
    igp = np.arange(ngpown, dtype=np.int64)
    for b_block, i_block in phase_blocks:
        g_parts.append(np.repeat(igp, b_block.size))
        b_parts.append(np.tile(b_block, ngpown))
        i_parts.append(np.tile(i_block, ngpown))
    return (
        np.concatenate(b_parts),
        np.concatenate(g_parts),
        np.concatenate(i_parts),
    )


def tuple_order(name: str, nbands: int, ngpown: int, ncouls: int):
    """The (band, igp, ig) visit sequence of one version, tuple-major."""
    spec = version_spec(name)
    if spec.order in ("band_major",):
        return _band_major(nbands, ngpown, ncouls)
    if spec.order in ("igp_major", "iw_major"):
        return _igp_major(nbands, ngpown, ncouls)
    return _warp_blocked(nbands, ngpown, ncouls)


def build_trace(name: str, nbands: int, ngpown: int, ncouls: int) -> AccessTrace:
    """Element-granularity read trace of one version over the nest."""
    spec = version_spec(name)
    b, g, i = tuple_order(name, nbands, ngpown, ncouls)
    n_tuples = b.size

    offsets = np.empty((n_tuples, 4), dtype=np.int64)
    offsets[:, 0] = i + g * ncouls          # wtilde
    offsets[:, 1] = i + b * ncouls          # aqsntemp
    offsets[:, 2] = i + g * ncouls          # i_eps
    if spec.aqsm_band_fast:
        offsets[:, 3] = b + g * nbands      # aqsmtemp, band-fastest layout
    else:
        offsets[:, 3] = g + b * ngpown
    offsets *= BYTES_PER_ELEMENT

    if spec.order == "iw_major":
        per_instance = np.tile(offsets, (NW, 1))
    else:
        per_instance = np.repeat(offsets, NW, axis=0)
    n_events = per_instance.shape[0] * 4
    ids = np.tile(np.array(_READ_ORDER, dtype=np.uint8), n_events // 4)
    sizes = np.full(n_events, BYTES_PER_ELEMENT, dtype=np.uint8)
    return AccessTrace(
        ids=ids,
        offsets=per_instance.reshape(-1).astype(np.uint64),
        sizes=sizes,
    )


@dataclass(frozen=True)
class RunArtifacts:
    """Everything one modeled kernel execution produces."""

    version: str
    dims: tuple[int, int, int]
    variant: str
    result: GPPResult
    counters: InstructionCounters
    stats: BranchStats
    elapsed_s: float
    registers_per_thread: int
    threads_per_block: int
    occupancy: OccupancyResult
    description: str
    trace: AccessTrace | None = None
    sim: SimOutcome | None = None


def run_version(
    problem: GPPProblem,
    name: str,
    trace: bool = False,
    contraction: bool = True,
    resources: SMResources = SMResources(),
) -> RunArtifacts:
    """Evaluate one version on a problem and collect its artifacts."""
    spec = version_spec(name)
    start = time.perf_counter()
    result = evaluate_variant(problem, spec.variant)
    elapsed = time.perf_counter() - start

    stats = branch_stats(problem, spec.variant)
    t_products = problem.tuples * (NW if spec.t_per_instance else 1)
    counters = counters_from_stats(
        spec.variant, stats, t_products, spec.far_takes_sqrt, contraction
    )
    access_trace = (
        build_trace(name, problem.nbands, problem.ngpown, problem.ncouls) if trace else None
    )
    occ = theoretical_active_warps(
        LaunchConfig(spec.registers_per_thread, spec.threads_per_block), resources
    )
    return RunArtifacts(
        version=name,
        dims=problem.dims,
        variant=spec.variant,
        result=result,
        counters=counters,
        stats=stats,
        elapsed_s=elapsed,
        registers_per_thread=spec.registers_per_thread,
        threads_per_block=spec.threads_per_block,
        occupancy=occ,
        description=spec.description,
        trace=access_trace,
    )


def run_sweep(
    problem: GPPProblem,
    names: tuple[str, ...] | list[str] | None = None,
    trace: bool = False,
    sim_config: CacheConfig | None = None,
    resources: SMResources = SMResources(),
) -> list[RunArtifacts]:
    """Run several versions; optionally push each trace through the cache."""
    selected = tuple(VERSION_NAMES if names is None else names)
    artifacts = []
    for name in selected:
        art = run_version(
            problem, name, trace=trace or sim_config is not None, resources=resources
        )
        if sim_config is not None:
            art = replace(art, sim=simulate(art.trace, sim_config))
            if not trace:
                art = replace(art, trace=None)
        artifacts.append(art)
    return artifacts


def emit_metrics(
    artifacts: RunArtifacts,
    runtime: float | None = None,
    system: str | None = None,
) -> KernelMetrics:
    """Package run artifacts as a metrics record.

    ``runtime`` defaults to the measured evaluation time; byte counts
    come from the cache simulation when one was attached.
    """
    level_bytes: LevelBytes | None = None
    if artifacts.sim is not None:
        level_bytes = artifacts.sim.bytes
    return KernelMetrics(
        label=artifacts.version,
        runtime=artifacts.elapsed_s if runtime is None else runtime,
        counters=artifacts.counters,
        bytes=level_bytes,
        system=system,
        registers_per_thread=artifacts.registers_per_thread,
        threads_per_block=artifacts.threads_per_block,
        achieved_warps_per_sm=artifacts.occupancy.warps,
    )
