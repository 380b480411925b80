"""Arithmetic variants of the kernel and their exact instruction counts.

Three numerically distinct formulations of the per-tuple math exist
across the nine versions:

    ``div``     library complex division for delw, magnitude predicates
    ``rcp``     explicit reciprocal (conjugate over squared magnitude)
                composed with a multiply, magnitude predicates
    ``rcp_sq``  the reciprocal form, with predicates on squared
                magnitudes against squared cutoffs (one sqrt survives,
                on the far branch only)

Instruction counts are assembled analytically: a fixed decomposition
table per primitive operation, multiplied by how often each path runs.
Branch decisions do not depend on the band index, so the per-(iw,ig,igp)
decision masks scale by nbands and the whole count is exact without
tracing a single instruction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DomainError
from ..metrics import InstructionCounters
from .problem import LIMIT_ONE, LIMIT_TWO, NW, TOL_ZERO, GPPProblem, GPPResult

VARIANTS = ("div", "rcp", "rcp_sq")


def complex_reciprocal(z: np.ndarray | complex) -> np.ndarray | complex:
    """1/z computed as conj(z) / (re^2 + im^2), the kernel's spelling.

    Raises for inputs whose squared magnitude is at or below the
    vanishing tolerance; the kernel never divides there either.
    """
    arr = np.asarray(z)
    denom = arr.real * arr.real + arr.imag * arr.imag
    if np.any(denom <= TOL_ZERO * TOL_ZERO):
        raise DomainError("complex_reciprocal: input magnitude at or below tol_zero")
    inv = 1.0 / denom
    out = np.conj(arr) * inv
    return out if isinstance(z, np.ndarray) else complex(out)


@dataclass(frozen=True)
class VariantTerms:
    """Per-(iw, ig, igp) branch terms, before any band weighting.

    ``sch`` and ``ssx`` are the per-tuple contributions (already zeroed
    outside their branches); ``near``/``far`` are the decision masks.
    All four have shape (NW, ncouls, ngpown).
    """

    sch: np.ndarray
    ssx: np.ndarray
    near: np.ndarray
    far: np.ndarray


def variant_terms(problem: GPPProblem, variant: str) -> VariantTerms:
    if variant not in VARIANTS:
        raise DomainError(f"unknown variant {variant!r}, expected one of {VARIANTS}")
    wt = problem.wtilde[None, :, :]
    eps = problem.i_eps[None, :, :]
    wdiff = problem.wx[:, None, None] - wt

    if variant == "div":
        delw = wt / wdiff
    else:
        denom = wdiff.real * wdiff.real + wdiff.imag * wdiff.imag
        inv = 1.0 / denom
        rcp = np.conj(wdiff) * inv
        delw = wt * rcp

    if variant == "rcp_sq":
        wdiff_sq = wdiff.real * wdiff.real + wdiff.imag * wdiff.imag
        delw_sq = delw.real * delw.real + delw.imag * delw.imag
        near = (wdiff_sq > LIMIT_TWO * LIMIT_TWO) & (delw_sq < LIMIT_ONE * LIMIT_ONE)
        far = ~near & (delw_sq > TOL_ZERO * TOL_ZERO)
        delwr = np.sqrt(delw_sq)
    else:
        wdiffr = np.abs(wdiff)
        delwr = np.abs(delw)
        near = (wdiffr > LIMIT_TWO) & (delwr < LIMIT_ONE)
        far = ~near & (delwr > TOL_ZERO)

    p = delw * eps
    zero = np.zeros_like(p)
    sch = np.where(near, 0.5 * p, zero)
    safe = np.where(far, delwr, 1.0)
    ssx = np.where(near, p, np.where(far, -0.25 * eps / safe, zero))
    return VariantTerms(sch=sch, ssx=ssx, near=near, far=far)


def evaluate_variant(problem: GPPProblem, variant: str) -> GPPResult:
    """Reduce a variant's terms over the full nest.

    The reduction factors the band weight into ``w[ig, igp] = sum over
    bands of aqsntemp[ig, band] * conj(aqsmtemp[igp, band])`` and then
    contracts once per accumulator.  Every version sharing a variant
    therefore produces bit-identical accumulators; versions differ in
    traversal order, which lives in their traces and counters.
    """
    terms = variant_terms(problem, variant)
    weight = problem.aqsntemp @ np.conj(problem.aqsmtemp).T
    achtemp = np.empty(NW, dtype=np.complex128)
    asxtemp = np.empty(NW, dtype=np.complex128)
    for iw in range(NW):
        achtemp[iw] = np.sum(terms.sch[iw] * weight)
        asxtemp[iw] = np.sum(terms.ssx[iw] * weight)
    return GPPResult(achtemp=achtemp, asxtemp=asxtemp)


@dataclass(frozen=True)
class BranchStats:
    """How often each path of the nest runs, over the whole problem."""

    instances: int  # (band, igp, ig, iw) tuples evaluated
    near: int       # instances taking the near branch
    far: int        # instances taking the far branch

    @property
    def degenerate(self) -> int:
        return self.instances - self.near - self.far


def branch_stats(problem: GPPProblem, variant: str) -> BranchStats:
    terms = variant_terms(problem, variant)
    per_band = NW * problem.ncouls * problem.ngpown
    return BranchStats(
        instances=per_band * problem.nbands,
        near=int(terms.near.sum()) * problem.nbands,
        far=int(terms.far.sum()) * problem.nbands,
    )


def _c(dadd=0, dmul=0, dfma=0, ddiv=0, dother=0) -> InstructionCounters:
    return InstructionCounters(dadd=dadd, dmul=dmul, dfma=dfma, ddiv=ddiv, dother=dother)


# Primitive decompositions with multiply-add contraction available.
_ON = {
    "wdiff": _c(dadd=1),                      # real minus complex; im is a free negate
    "cdiv": _c(dmul=3, dfma=3, ddiv=2),       # numerator cmul + squared-mag denom + 2 real divides
    "crcp": _c(dmul=3, dfma=1, ddiv=1),       # squared mag, one real divide, conj scale
    "cmul": _c(dmul=2, dfma=2),
    "mag2": _c(dmul=1, dfma=1),
    "abs": _c(dmul=1, dfma=1, dother=1),      # mag2 then sqrt
    "cmp": _c(dother=1),
    "near_body": _c(dmul=4, dfma=2),          # p = delw*i_eps (cmul) + 0.5 scale
    "far_body": _c(dmul=2, ddiv=1),           # s = -0.25/delwr, then complex scale
    "sqrt": _c(dother=1),
    "mac2": _c(dfma=8),                       # two complex multiply-accumulates
    "tprod": _c(dmul=2, dfma=2),              # aqsntemp * conj(aqsmtemp)
}

# The same primitives with contraction disabled (every fma split).
_OFF = {
    "wdiff": _c(dadd=1),
    "cdiv": _c(dadd=3, dmul=6, ddiv=2),
    "crcp": _c(dadd=1, dmul=4, ddiv=1),
    "cmul": _c(dadd=2, dmul=4),
    "mag2": _c(dadd=1, dmul=2),
    "abs": _c(dadd=1, dmul=2, dother=1),
    "cmp": _c(dother=1),
    "near_body": _c(dadd=2, dmul=6),
    "far_body": _c(dmul=2, ddiv=1),
    "sqrt": _c(dother=1),
    "mac2": _c(dadd=8, dmul=8),
    "tprod": _c(dadd=2, dmul=4),
}


def primitive_table(contraction: bool = True) -> dict[str, InstructionCounters]:
    return dict(_ON if contraction else _OFF)


def _per_instance(variant: str, table: dict[str, InstructionCounters]) -> InstructionCounters:
    """Instructions every (band, igp, ig, iw) instance executes."""
    base = table["wdiff"] + table["mac2"] + table["cmp"].scaled(2)
    if variant == "div":
        return base + table["cdiv"] + table["abs"].scaled(2)
    if variant == "rcp":
        return base + table["crcp"] + table["cmul"] + table["abs"].scaled(2)
    return base + table["crcp"] + table["cmul"] + table["mag2"].scaled(2)


def counters_from_stats(
    variant: str,
    stats: BranchStats,
    t_products: int,
    far_takes_sqrt: bool,
    contraction: bool = True,
) -> InstructionCounters:
    """Assemble exact counts from branch statistics.

    ``t_products`` is how many times the band weight ``t`` is formed
    (once per tuple normally; once per instance when the iw loop is
    hoisted outermost).  ``far_takes_sqrt`` marks the squared-predicate
    formulation, whose far branch must recover the true magnitude.
    """
    table = primitive_table(contraction)
    counts = _per_instance(variant, table).scaled(stats.instances)
    counts = counts + table["near_body"].scaled(stats.near)
    # Instances that fail the near predicate evaluate the vanishing test.
    counts = counts + table["cmp"].scaled(stats.instances - stats.near)
    far_body = table["far_body"] + (table["sqrt"] if far_takes_sqrt else _c())
    counts = counts + far_body.scaled(stats.far)
    return counts + table["tprod"].scaled(t_products)
