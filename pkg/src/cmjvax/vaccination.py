"""Vaccination coverage functions and the pruning operator.

A coverage function maps calendar time to the immune fraction of the
population.  Pruning derives the vaccinated tree from an unvaccinated
one: birth i is aborted iff its coupling uniform is <= the coverage at
its birth time, and aborting an individual removes its whole subtree.
Because the uniforms are attached to the tree, pruning is a pure
function and nested coverage functions yield nested deletions.
"""

from dataclasses import dataclass
from typing import FrozenSet, List, Tuple, Union

import numpy as np

from ._backend import jit
from .errors import InvalidLawError
from .tree import BranchingTree, TreeBatch

ALPHA_STEP = 0
ALPHA_RAMP = 1
ALPHA_PIECEWISE = 2

_EMPTY_F8 = np.empty(0, dtype=np.float64)


@dataclass(frozen=True)
class StepCoverage:
    """0 before ``start``, then constant ``coverage`` (right-continuous)."""

    coverage: float
    start: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.coverage <= 1.0:
            raise InvalidLawError("coverage must be in [0, 1]")
        if self.start < 0.0:
            raise InvalidLawError("start time must be >= 0")

    def __call__(self, t: float) -> float:
        return self.coverage if t >= self.start else 0.0


@dataclass(frozen=True)
class RampCoverage:
    """No coverage until ``delay``, linear growth at ``rate`` for
    ``duration`` time units, then the plateau ``duration * rate``."""

    delay: float
    duration: float
    rate: float

    def __post_init__(self):
        if self.delay < 0.0 or self.duration < 0.0 or self.rate < 0.0:
            raise InvalidLawError("ramp parameters must be >= 0")
        if self.duration * self.rate > 1.0 + 1e-12:
            raise InvalidLawError("ramp plateau duration * rate must not exceed 1")

    @property
    def plateau(self) -> float:
        return min(self.duration * self.rate, 1.0)

    def __call__(self, t: float) -> float:
        if t <= self.delay:
            return 0.0
        if t <= self.delay + self.duration:
            return min(self.rate * (t - self.delay), 1.0)
        return self.plateau


@dataclass(frozen=True)
class PiecewiseCoverage:
    """Right-continuous step function: 0 before the first breakpoint,
    ``values[i]`` on [times[i], times[i+1])."""

    times: Tuple[float, ...]
    values: Tuple[float, ...]

    def __post_init__(self):
        if len(self.times) != len(self.values) or not self.times:
            raise InvalidLawError("piecewise coverage needs matching times and values")
        prev = -1.0
        for t in self.times:
            if t < 0.0 or t <= prev:
                raise InvalidLawError("breakpoints must be >= 0 and strictly increasing")
            prev = t
        for v in self.values:
            if not 0.0 <= v <= 1.0:
                raise InvalidLawError("coverage values must be in [0, 1]")

    def __call__(self, t: float) -> float:
        if t < self.times[0]:
            return 0.0
        idx = 0
        for i, bp in enumerate(self.times):
            if t >= bp:
                idx = i
            else:
                break
        return self.values[idx]


VaccinationFunction = Union[StepCoverage, RampCoverage, PiecewiseCoverage]


def never_vaccinate() -> StepCoverage:
    return StepCoverage(0.0, 0.0)


def full_coverage() -> StepCoverage:
    return StepCoverage(1.0, 0.0)


def final_value(alpha: VaccinationFunction) -> float:
    """Limit of the coverage as t grows."""
    if isinstance(alpha, StepCoverage):
        return alpha.coverage
    if isinstance(alpha, RampCoverage):
        return alpha.plateau
    return alpha.values[-1]


def _breakpoints(alpha: VaccinationFunction) -> List[float]:
    if isinstance(alpha, StepCoverage):
        return [alpha.start]
    if isinstance(alpha, RampCoverage):
        return [alpha.delay, alpha.delay + alpha.duration]
    return list(alpha.times)


def _value_left(alpha: VaccinationFunction, t: float) -> float:
    """Left limit of alpha at t > 0."""
    if isinstance(alpha, RampCoverage):
        return alpha(t)  # continuous
    if isinstance(alpha, StepCoverage):
        return alpha.coverage if t > alpha.start else 0.0
    best = 0.0
    for bp, v in zip(alpha.times, alpha.values):
        if bp < t:
            best = v
        else:
            break
    return best


def precedes(alpha: VaccinationFunction, other: VaccinationFunction) -> bool:
    """True iff alpha(t) <= other(t) for every t >= 0.

    Exact: both sides are piecewise linear, so dominance on the sorted
    union of breakpoints (values and left limits) plus the final values
    decides the whole half-line.
    """
    points = sorted(set([0.0] + _breakpoints(alpha) + _breakpoints(other)))
    for t in points:
        if alpha(t) > other(t):
            return False
        if t > 0.0 and _value_left(alpha, t) > _value_left(other, t):
            return False
    return final_value(alpha) <= final_value(other)


def alpha_spec(alpha: VaccinationFunction) -> dict:
    """Dict form matching the config grammar for coverage functions."""
    if isinstance(alpha, StepCoverage):
        return {"kind": "step", "c": alpha.coverage, "t0": alpha.start}
    if isinstance(alpha, RampCoverage):
        return {"kind": "ramp", "M": alpha.delay, "tv": alpha.duration,
                "p0": alpha.rate}
    return {"kind": "piecewise", "t": list(alpha.times), "v": list(alpha.values)}


def alpha_from_spec(spec: dict) -> VaccinationFunction:
    """Parse ``{kind="step", c=..., t0=...}`` style tables."""
    if not isinstance(spec, dict) or "kind" not in spec:
        raise InvalidLawError("coverage spec must be a table with a 'kind' key")
    kind = spec["kind"]
    keys = set(spec) - {"kind"}
    if kind == "step":
        if not keys <= {"c", "t0"} or "c" not in keys:
            raise InvalidLawError("step coverage takes keys c and optional t0")
        return StepCoverage(float(spec["c"]), float(spec.get("t0", 0.0)))
    if kind == "ramp":
        if keys != {"M", "tv", "p0"}:
            raise InvalidLawError("ramp coverage takes keys M, tv, p0")
        return RampCoverage(float(spec["M"]), float(spec["tv"]), float(spec["p0"]))
    if kind == "piecewise":
        if keys != {"t", "v"}:
            raise InvalidLawError("piecewise coverage takes keys t and v")
        return PiecewiseCoverage(tuple(float(x) for x in spec["t"]),
                                 tuple(float(x) for x in spec["v"]))
    raise InvalidLawError(f"unknown coverage kind {kind!r}")


@dataclass(frozen=True)
class PruneMask:
    """Deleted birth indices (1-based, canonical order), closed under descent."""

    deleted: FrozenSet[int]
    surviving_count: int

    def survives(self, individual_id: int, initials: int) -> bool:
        if individual_id < initials:
            return True
        return (individual_id - initials + 1) not in self.deleted


def encode_alpha(alpha: VaccinationFunction):
    """Pack a coverage function for the kernels: (kind, p0, p1, p2, times, values)."""
    if isinstance(alpha, StepCoverage):
        return ALPHA_STEP, alpha.coverage, alpha.start, 0.0, _EMPTY_F8, _EMPTY_F8
    if isinstance(alpha, RampCoverage):
        return (ALPHA_RAMP, alpha.delay, alpha.duration, alpha.rate,
                _EMPTY_F8, _EMPTY_F8)
    return (ALPHA_PIECEWISE, 0.0, 0.0, 0.0,
            np.asarray(alpha.times, dtype=np.float64),
            np.asarray(alpha.values, dtype=np.float64))


@jit
def _alpha_value(kind, p0, p1, p2, times, values, t):
    if kind == ALPHA_STEP:
        return p0 if t >= p1 else 0.0
    if kind == ALPHA_RAMP:
        if t <= p0:
            return 0.0
        if t <= p0 + p1:
            v = p2 * (t - p0)
            return v if v < 1.0 else 1.0
        v = p1 * p2
        return v if v < 1.0 else 1.0
    if t < times[0]:
        return 0.0
    idx = 0
    for i in range(times.shape[0]):
        if t >= times[i]:
            idx = i
        else:
            break
    return values[idx]


@jit
def _prune_chunk(offsets, parent, birth, uniforms, a,
                 kind, p0, p1, p2, times, values, alive):
    """Survival flags for every individual of every tree under one coverage."""
    nrep = offsets.shape[0] - 1
    for r in range(nrep):
        lo = offsets[r]
        hi = offsets[r + 1]
        for j in range(lo, hi):
            if j - lo < a:
                alive[j] = True
            else:
                pj = lo + parent[j]
                if not alive[pj]:
                    alive[j] = False
                else:
                    # delete iff U <= alpha(birth time); boundary "<=" is normative
                    cov = _alpha_value(kind, p0, p1, p2, times, values, birth[j])
                    alive[j] = uniforms[j] > cov


def prune_batch(batch: TreeBatch, alpha: VaccinationFunction) -> np.ndarray:
    """Survival mask over the flat individual arrays of a batch."""
    kind, p0, p1, p2, times, values = encode_alpha(alpha)
    alive = np.empty(batch.offsets[-1], dtype=np.bool_)
    _prune_chunk(batch.offsets, batch.parent, batch.birth_time, batch.coupling_u,
                 batch.a, kind, p0, p1, p2, times, values, alive)
    return alive


def prune(tree: BranchingTree, alpha: VaccinationFunction) -> PruneMask:
    """Prune one tree; pure function of (tree, alpha)."""
    a = tree.initials
    n = len(tree.individuals)
    alive = [True] * n
    deleted = set()
    for ind in tree.individuals[a:]:
        parent_alive = alive[ind.parent]
        if not parent_alive or ind.coupling_uniform <= alpha(ind.birth_time):
            alive[ind.id] = False
            deleted.add(ind.id - a + 1)
    return PruneMask(deleted=frozenset(deleted), surviving_count=n - len(deleted))


def survival_flags(tree: BranchingTree, mask: PruneMask) -> np.ndarray:
    out = np.ones(len(tree.individuals), dtype=np.bool_)
    for idx in mask.deleted:
        out[idx + tree.initials - 1] = False
    return out
