"""Synthetic inputs and the reference evaluator for the GPP kernel family.

The kernel sweeps a four-deep loop nest over (band, igp, ig, iw).  For
each tuple it forms ``wdiff = wx[iw] - wtilde[ig, igp]`` and the ratio
``delw = wtilde / wdiff``, picks one of two branches on the magnitudes
of those values, and accumulates two complex reductions weighted by
``t = aqsntemp[ig, band] * conj(aqsmtemp[igp, band])``:

    near branch (|wdiff| above the cutoff, |delw| below its limit):
        sch = 0.5 * delw * i_eps,   ssx = delw * i_eps
    far branch (otherwise, when |delw| is not vanishing):
        sch = 0,                    ssx = -0.25 * i_eps / |delw|
    degenerate (|delw| vanishing): both zero

The accumulators are indexed by iw only, so the whole nest reduces to
``2 * nw`` complex numbers.  ``reference_result`` walks the nest in the
plain order with no algebraic regrouping and serves as the oracle the
optimized variants are checked against.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import DomainError, SynthesisError, ValidationError

NW = 2
DEFAULT_DIMS = (64, 64, 512)
SWEEP_DIMS = (4, 64, 512)

# Branch cutoffs, as the kernel family has always spelled them: the
# lower bound on |wdiff| is limit_two, the upper bound on |delw| is
# limit_one, and magnitudes at or below tol_zero count as vanishing.
LIMIT_TWO = 0.5
LIMIT_ONE = 2.0
TOL_ZERO = 1e-12

# Synthesized inputs must keep every magnitude this far (relative) from
# each cutoff, so that all nine variants agree on every branch decision
# no matter how they rearrange the predicate arithmetic.
BOUNDARY_MARGIN = 1e-12

BYTES_PER_ELEMENT = 16  # complex128


@dataclass(frozen=True)
class GPPProblem:
    """One problem instance: dimensions plus the four input arrays.

    Arrays are stored column-major so a fixed-igp (or fixed-band) slice
    is contiguous, matching how the kernel walks them:

        wtilde[ig, igp], i_eps[ig, igp]     shape (ncouls, ngpown)
        aqsntemp[ig, band]                  shape (ncouls, nbands)
        aqsmtemp[igp, band]                 shape (ngpown, nbands)
        wx[iw]                              shape (NW,)
    """

    nbands: int
    ngpown: int
    ncouls: int
    wtilde: np.ndarray
    i_eps: np.ndarray
    aqsntemp: np.ndarray
    aqsmtemp: np.ndarray
    wx: np.ndarray
    seed: int | None = None

    @property
    def dims(self) -> tuple[int, int, int]:
        return (self.nbands, self.ngpown, self.ncouls)

    @property
    def tuples(self) -> int:
        return self.nbands * self.ngpown * self.ncouls

    def footprint_bytes(self) -> int:
        """Bytes of array data one full pass must touch at least once."""
        return BYTES_PER_ELEMENT * (
            2 * self.ncouls * self.ngpown
            + self.ncouls * self.nbands
            + self.ngpown * self.nbands
        )


@dataclass(frozen=True)
class GPPResult:
    """The two length-NW complex accumulators."""

    achtemp: np.ndarray
    asxtemp: np.ndarray


def max_rel_error(result: GPPResult, reference: GPPResult) -> float:
    """Largest per-component relative difference across both accumulators."""
    worst = 0.0
    for got, want in ((result.achtemp, reference.achtemp), (result.asxtemp, reference.asxtemp)):
        denom = np.abs(want)
        if np.any(denom == 0.0):
            raise DomainError("reference accumulator has a zero component")
        worst = max(worst, float(np.max(np.abs(got - want) / denom)))
    return worst


def _complex_uniform(rng: np.random.Generator, shape: tuple[int, ...]) -> np.ndarray:
    re = rng.uniform(-1.0, 1.0, size=shape)
    im = rng.uniform(-1.0, 1.0, size=shape)
    return np.asfortranarray(re + 1j * im)


def synth_problem(
    nbands: int = DEFAULT_DIMS[0],
    ngpown: int = DEFAULT_DIMS[1],
    ncouls: int = DEFAULT_DIMS[2],
    seed: int = 42,
) -> GPPProblem:
    """Draw a random problem and vet it for branch safety.

    Complex components are uniform on [-1, 1]; the wx evaluation points
    are uniform on [1, 2].  Arrays are filled in a fixed order (wtilde,
    i_eps, aqsntemp, aqsmtemp, wx; real parts before imaginary), so one
    seed always denotes one problem.  Raises SynthesisError when any
    magnitude lands within BOUNDARY_MARGIN of a branch cutoff, since
    branch decisions there would depend on rounding.  Whether both
    branches actually fire is a property of the draw, not a validity
    requirement: a tiny problem, or one whose wx values both land high
    enough, takes the near path everywhere and is still well-formed.
    """
    for name, value in (("nbands", nbands), ("ngpown", ngpown), ("ncouls", ncouls)):
        if value < 1:
            raise DomainError(f"{name} must be at least 1, got {value!r}")
    rng = np.random.default_rng(seed)
    wtilde = _complex_uniform(rng, (ncouls, ngpown))
    i_eps = _complex_uniform(rng, (ncouls, ngpown))
    aqsntemp = _complex_uniform(rng, (ncouls, nbands))
    aqsmtemp = _complex_uniform(rng, (ngpown, nbands))
    wx = rng.uniform(1.0, 2.0, size=NW)
    problem = GPPProblem(
        nbands=nbands,
        ngpown=ngpown,
        ncouls=ncouls,
        wtilde=wtilde,
        i_eps=i_eps,
        aqsntemp=aqsntemp,
        aqsmtemp=aqsmtemp,
        wx=wx,
        seed=seed,
    )
    _check_branch_safety(problem)
    for arr in (wtilde, i_eps, aqsntemp, aqsmtemp, wx):
        arr.flags.writeable = False
    return problem


def _check_branch_safety(problem: GPPProblem) -> None:
    wdiff = problem.wx[:, None, None] - problem.wtilde[None, :, :]
    wdiffr = np.abs(wdiff)
    with np.errstate(divide="ignore", invalid="ignore"):
        delwr = np.abs(problem.wtilde[None, :, :] / wdiff)
    if not np.all(np.isfinite(delwr)):
        raise SynthesisError("seed produced a singular wdiff; choose another seed")
    for value, cutoff, what in (
        (wdiffr, LIMIT_TWO, "|wdiff| vs its lower cutoff"),
        (delwr, LIMIT_ONE, "|delw| vs its upper limit"),
        (delwr, TOL_ZERO, "|delw| vs the vanishing tolerance"),
    ):
        margin = np.min(np.abs(value - cutoff))
        if margin <= BOUNDARY_MARGIN * cutoff:
            raise SynthesisError(
                f"seed {problem.seed!r} puts {what} within {margin:.3e} of the cutoff; "
                "branch decisions would be representation-dependent"
            )


def reference_result(problem: GPPProblem) -> GPPResult:
    """Evaluate the nest in plain (band, igp, ig, iw) order.

    Each (band, igp) block is summed over ig on its own and added to the
    accumulators immediately, with the branch formulas written exactly
    as the statement of the kernel gives them.  No factoring, no shared
    subexpressions across blocks: this is deliberately the slow way.
    """
    achtemp = np.zeros(NW, dtype=np.complex128)
    asxtemp = np.zeros(NW, dtype=np.complex128)
    zero = np.zeros(problem.ncouls, dtype=np.complex128)
    for band in range(problem.nbands):
        for igp in range(problem.ngpown):
            wt = problem.wtilde[:, igp]
            eps = problem.i_eps[:, igp]
            t = problem.aqsntemp[:, band] * np.conj(problem.aqsmtemp[igp, band])
            for iw in range(NW):
                wdiff = problem.wx[iw] - wt
                delw = wt / wdiff
                wdiffr = np.abs(wdiff)
                delwr = np.abs(delw)
                near = (wdiffr > LIMIT_TWO) & (delwr < LIMIT_ONE)
                far = ~near & (delwr > TOL_ZERO)
                p = delw * eps
                sch = np.where(near, 0.5 * p, zero)
                safe = np.where(far, delwr, 1.0)
                ssx = np.where(near, p, np.where(far, -0.25 * eps / safe, zero))
                achtemp[iw] += np.sum(sch * t)
                asxtemp[iw] += np.sum(ssx * t)
    return GPPResult(achtemp=achtemp, asxtemp=asxtemp)


def result_to_dict(problem_dims: tuple[int, int, int], seed: int | None, result: GPPResult) -> dict:
    return {
        "dims": list(problem_dims),
        "seed": seed,
        "nw": NW,
        "achtemp": [[float(z.real), float(z.imag)] for z in result.achtemp],
        "asxtemp": [[float(z.real), float(z.imag)] for z in result.asxtemp],
    }


def result_from_dict(data: dict) -> tuple[tuple[int, int, int], int | None, GPPResult]:
    try:
        dims = tuple(int(d) for d in data["dims"])
        if len(dims) != 3:
            raise ValidationError("golden result dims must have three entries")
        ach = np.array([complex(re, im) for re, im in data["achtemp"]], dtype=np.complex128)
        asx = np.array([complex(re, im) for re, im in data["asxtemp"]], dtype=np.complex128)
        if len(ach) != data["nw"] or len(asx) != data["nw"]:
            raise ValidationError("golden result accumulator length disagrees with nw")
        return dims, data.get("seed"), GPPResult(achtemp=ach, asxtemp=asx)
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"malformed golden result file: {exc!r}") from exc


def load_golden(path: str | Path) -> tuple[tuple[int, int, int], int | None, GPPResult]:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: not valid JSON: {exc}") from exc
    return result_from_dict(data)


def save_golden(
    problem_dims: tuple[int, int, int], seed: int | None, result: GPPResult, path: str | Path
) -> None:
    Path(path).write_text(
        json.dumps(result_to_dict(problem_dims, seed, result), indent=2) + "\n",
        encoding="utf-8",
    )


def bundled_golden_path() -> Path:
    return Path(__file__).resolve().parent.parent / "data" / "gpp-golden-seed42-64x64x512.json"
