"""A small complex-arithmetic reduction kernel in nine modeled versions.

The subpackage synthesizes inputs, evaluates every version against a
slow reference, derives exact instruction counts, and emits element
read traces suitable for the cache simulator.
"""

from .kernel import (
    BranchStats,
    VariantTerms,
    branch_stats,
    complex_reciprocal,
    counters_from_stats,
    evaluate_variant,
    primitive_table,
    variant_terms,
)
from .problem import (
    BOUNDARY_MARGIN,
    DEFAULT_DIMS,
    LIMIT_ONE,
    LIMIT_TWO,
    NW,
    SWEEP_DIMS,
    TOL_ZERO,
    GPPProblem,
    GPPResult,
    bundled_golden_path,
    load_golden,
    max_rel_error,
    reference_result,
    save_golden,
    synth_problem,
)
from .runner import (
    ARRAY_NAMES,
    VERSION_NAMES,
    VERSIONS,
    RunArtifacts,
    VersionSpec,
    block_sizes,
    build_trace,
    emit_metrics,
    run_sweep,
    run_version,
    tuple_order,
    version_spec,
)

__all__ = [name for name in dir() if not name.startswith("_")]
