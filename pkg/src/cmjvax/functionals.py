"""Outbreak functionals that can only shrink under pruning.

Extinction time, duration excluding the first incubation, peak
prevalence, births by a deadline, and total births.  All are evaluated
on a (tree, mask) pair; the batch kernels evaluate the same quantities
over flat replicate arrays.

An individual is alive on [birth, death): a child born exactly at its
parent's death does not overlap the parent, so single chains have peak
prevalence 1.
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ._backend import jit
from .errors import CensoredTreeError, EmptyInputError, MultipleInitialsError, OutOfDomainError
from .rng import RandomStream
from .tree import BranchingTree, TreeBatch
from .vaccination import PruneMask, survival_flags

F_EXTINCTION = 0
F_DURATION = 1
F_PEAK = 2
F_BIRTHS_BY = 3
F_TOTAL_BIRTHS = 4

_NAMES = {"T": F_EXTINCTION, "Ttilde": F_DURATION, "M": F_PEAK, "Ninf": F_TOTAL_BIRTHS}
_CODE_NAMES = {v: k for k, v in _NAMES.items()}
_CODE_NAMES[F_BIRTHS_BY] = "Nt"


@dataclass(frozen=True)
class Functional:
    """Named functional; ``t_param`` only applies to births-by-time."""

    code: int
    t_param: Optional[float] = None

    def __post_init__(self):
        if self.code == F_BIRTHS_BY:
            if self.t_param is None or self.t_param < 0:
                raise OutOfDomainError("Nt needs a nonnegative time parameter")
        elif self.t_param is not None:
            raise OutOfDomainError("only Nt takes a time parameter")

    @property
    def all_time(self) -> bool:
        return self.code != F_BIRTHS_BY

    @property
    def time_valued(self) -> bool:
        return self.code in (F_EXTINCTION, F_DURATION)

    def __str__(self) -> str:
        if self.code == F_BIRTHS_BY:
            return f"Nt:{self.t_param:g}"
        return _CODE_NAMES[self.code]


def parse_functional(name: str) -> Functional:
    """Parse CLI/config selectors: T, Ttilde, M, Nt:<days>, Ninf."""
    name = name.strip()
    if name in _NAMES:
        return Functional(_NAMES[name])
    if name.startswith("Nt:"):
        return Functional(F_BIRTHS_BY, float(name[3:]))
    raise OutOfDomainError(f"unknown functional {name!r}; "
                           "expected T, Ttilde, M, Nt:<days>, or Ninf")


def _require_uncensored(tree: BranchingTree, what: str) -> None:
    if tree.censored:
        raise CensoredTreeError(
            f"{what} is biased on a tree that hit its birth cap")


def extinction_time(tree: BranchingTree, mask: PruneMask) -> float:
    """Last death time among survivors (the initials always survive)."""
    _require_uncensored(tree, "extinction time")
    if tree.initials < 1:
        raise EmptyInputError("extinction time of an empty process is undefined")
    alive = survival_flags(tree, mask)
    best = 0.0
    for ind in tree.individuals:
        if alive[ind.id] and ind.death_time > best:
            best = ind.death_time
    return best


def duration_excl_incubation(tree: BranchingTree, mask: PruneMask) -> float:
    """Extinction time minus the first individual's lifetime; 0 when no
    birth survives."""
    if tree.initials != 1:
        raise MultipleInitialsError(
            "duration excluding incubation is defined for a single initial case")
    t = extinction_time(tree, mask)
    return t - tree.individuals[0].death_time


def max_population(tree: BranchingTree, mask: PruneMask) -> int:
    """Peak number of simultaneously alive survivors."""
    _require_uncensored(tree, "peak population")
    alive = survival_flags(tree, mask)
    births = sorted(ind.birth_time for ind in tree.individuals if alive[ind.id])
    deaths = sorted(ind.death_time for ind in tree.individuals if alive[ind.id])
    peak = 0
    current = 0
    i = j = 0
    n = len(births)
    while i < n:
        if deaths[j] <= births[i]:
            current -= 1
            j += 1
        else:
            current += 1
            if current > peak:
                peak = current
            i += 1
    return peak


def births_by(tree: BranchingTree, mask: PruneMask, t: float) -> int:
    """Surviving non-initial births in (0, t]."""
    if tree.censored and t > tree.caps.horizon:
        raise CensoredTreeError("births_by beyond the horizon on a capped tree")
    alive = survival_flags(tree, mask)
    count = 0
    for ind in tree.individuals[tree.initials:]:
        if alive[ind.id] and 0.0 < ind.birth_time <= t:
            count += 1
    return count


def total_births(tree: BranchingTree, mask: PruneMask) -> int:
    """All surviving non-initial births."""
    _require_uncensored(tree, "total births")
    alive = survival_flags(tree, mask)
    return int(sum(1 for ind in tree.individuals[tree.initials:] if alive[ind.id]))


def to_weeks(duration_days: float) -> int:
    """Whole weeks, rounded up; 0 stays 0."""
    if duration_days < 0:
        raise OutOfDomainError("durations are nonnegative")
    return int(math.ceil(duration_days / 7.0))


def max_of_z(samples, z: int, rng: RandomStream) -> float:
    """Resample ``z`` values with replacement and return the maximum.

    One bootstrap realization of the extinction time with z initial
    cases: independent initials make it the max of z single-initial
    copies.
    """
    if z < 1:
        raise OutOfDomainError("z must be at least 1")
    n = len(samples)
    if n == 0:
        raise EmptyInputError("cannot resample from an empty sample set")
    best = -math.inf
    for _ in range(z):
        v = samples[rng.integers(n)]
        if v > best:
            best = v
    return float(best)


@jit
def _functional_chunk(code, t_param, a, offsets, birth, death, alive, out):
    nrep = offsets.shape[0] - 1
    for r in range(nrep):
        lo = offsets[r]
        hi = offsets[r + 1]
        if code == F_EXTINCTION or code == F_DURATION:
            best = 0.0
            for j in range(lo, hi):
                if alive[j] and death[j] > best:
                    best = death[j]
            if code == F_DURATION:
                best -= death[lo]
            out[r] = best
        elif code == F_PEAK:
            count = 0
            for j in range(lo, hi):
                if alive[j]:
                    count += 1
            bt = np.empty(count, dtype=np.float64)
            dt = np.empty(count, dtype=np.float64)
            k = 0
            for j in range(lo, hi):
                if alive[j]:
                    bt[k] = birth[j]
                    dt[k] = death[j]
                    k += 1
            bt.sort()
            dt.sort()
            peak = 0
            current = 0
            i = 0
            jj = 0
            while i < count:
                if dt[jj] <= bt[i]:
                    current -= 1
                    jj += 1
                else:
                    current += 1
                    if current > peak:
                        peak = current
                    i += 1
            out[r] = peak
        elif code == F_BIRTHS_BY:
            count = 0
            for j in range(lo + a, hi):
                if alive[j] and 0.0 < birth[j] <= t_param:
                    count += 1
            out[r] = count
        else:  # total births
            count = 0
            for j in range(lo + a, hi):
                if alive[j]:
                    count += 1
            out[r] = count


def evaluate_batch(batch: TreeBatch, alive: np.ndarray,
                   functional: Functional) -> np.ndarray:
    """Per-replicate functional values over a pruned batch."""
    out = np.empty(batch.n, dtype=np.float64)
    t_param = float(functional.t_param) if functional.t_param is not None else 0.0
    _functional_chunk(functional.code, t_param, batch.a, batch.offsets,
                      batch.birth_time, batch.death_time, alive, out)
    return out
