"""Coupled Monte-Carlo estimation across families of coverage functions.

One batch of unvaccinated replicates (plus per-birth uniforms) is
frozen and every coverage function is evaluated against it - common
random numbers by construction.  Under that coupling, distribution
functions are ordered at every point and quantiles are ordered at
every level whenever the coverage functions themselves are ordered,
exactly and not just statistically.
"""

import json
import math
import warnings
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Union

import numpy as np

from .errors import EmptyInputError, ExplosionRateError, MultipleInitialsError, OutOfDomainError
from .functionals import F_DURATION, Functional, evaluate_batch, parse_functional
from .reproduction import ReproductionLaw, critical_coverage, law_spec
from .tree import SimCaps, TreeBatch, simulate_batch
from .vaccination import VaccinationFunction, alpha_spec, final_value, prune_batch


@dataclass(frozen=True)
class EmpiricalDistribution:
    """Sorted Monte-Carlo samples of one functional under one coverage."""

    samples: np.ndarray
    meta: Dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.samples) < 1:
            raise EmptyInputError("an empirical distribution needs samples")

    @property
    def n(self) -> int:
        return len(self.samples)

    def cdf(self, x: float) -> float:
        """Fraction of samples <= x (right-continuous)."""
        return float(np.searchsorted(self.samples, x, side="right")) / self.n

    def quantile(self, p: float) -> float:
        """Smallest sample with cdf >= p; order statistic, no interpolation."""
        if not 0.0 < p < 1.0:
            raise OutOfDomainError("quantile order must lie in (0, 1)")
        k = math.ceil(self.n * p)
        k = min(max(k, 1), self.n)
        return float(self.samples[k - 1])

    def mean(self) -> float:
        return float(np.mean(self.samples))

    def se_mean(self) -> float:
        if self.n < 2:
            return 0.0
        return float(np.std(self.samples, ddof=1) / math.sqrt(self.n))

    def dkw_band(self, delta: float = 0.05) -> float:
        """Half-width of the level-(1-delta) uniform confidence band."""
        return math.sqrt(math.log(2.0 / delta) / (2.0 * self.n))


class CoupledBatch:
    """A frozen set of replicates every coverage function is pruned against.

    Trees are either cached in memory (default; a few MB for typical
    runs) or regenerated from the seed on each use - both paths produce
    identical arrays because generation is a pure function of the seed.
    """

    def __init__(self, law: ReproductionLaw, a: int, caps: SimCaps, n: int,
                 master_seed: int, threads: int = 1, chunk_size: int = 4096,
                 cache: bool = True):
        self.law = law
        self.a = a
        self.caps = caps
        self.n = n
        self.master_seed = master_seed
        self.threads = threads
        self.chunk_size = chunk_size
        self.cache = cache
        self._batch: Optional[TreeBatch] = None

    def tree_batch(self) -> TreeBatch:
        if self._batch is not None:
            return self._batch
        batch = simulate_batch(self.law, self.a, self.caps, self.n,
                               self.master_seed, threads=self.threads,
                               chunk_size=self.chunk_size)
        if self.cache:
            self._batch = batch
        return batch

    @property
    def censored_count(self) -> int:
        return int(np.count_nonzero(self.tree_batch().censored))

    def evaluate(self, alpha: VaccinationFunction,
                 functional: Functional) -> np.ndarray:
        """Raw per-replicate functional values (replicate order)."""
        batch = self.tree_batch()
        alive = prune_batch(batch, alpha)
        return evaluate_batch(batch, alive, functional)


def _check_explosions(coupled: CoupledBatch, functional: Functional) -> None:
    if not functional.all_time:
        return
    bad = coupled.censored_count
    if bad > 0.01 * coupled.n:
        raise ExplosionRateError(
            f"{bad} of {coupled.n} replicates hit max_births="
            f"{coupled.caps.max_births} before horizon={coupled.caps.horizon}; "
            f"an all-time functional would be biased. Raise max_births, lower "
            f"the horizon, or switch to Nt:<t>.")


def run_coupled(law: ReproductionLaw, a: int, caps: SimCaps,
                functional: Union[Functional, str],
                alphas: Sequence[VaccinationFunction], n: int,
                master_seed: int, threads: int = 1,
                cache: bool = True) -> List[EmpiricalDistribution]:
    """Estimate the functional's distribution under each coverage function,
    all against the same trees and uniforms."""
    if isinstance(functional, str):
        functional = parse_functional(functional)
    if n < 1:
        raise EmptyInputError("need at least one replicate")
    if functional.code == F_DURATION and a != 1:
        raise MultipleInitialsError(
            "duration excluding incubation needs a single initial case")

    coupled = CoupledBatch(law, a, caps, n, master_seed, threads=threads,
                           cache=cache)
    _check_explosions(coupled, functional)

    c_inf = critical_coverage(law)
    if functional.all_time and c_inf > 0.0:
        low = [alpha for alpha in alphas if final_value(alpha) < c_inf]
        if low:
            warnings.warn(
                "supercritical law with coverage plateau below "
                f"{c_inf:.4f}: all-time functionals are evaluated on the "
                f"horizon-restricted process (cutoff {caps.horizon})",
                UserWarning, stacklevel=2)

    out = []
    for alpha in alphas:
        values = coupled.evaluate(alpha, functional)
        out.append(EmpiricalDistribution(
            samples=np.sort(values),
            meta={
                "functional": str(functional),
                "alpha": alpha_spec(alpha),
                "law": law_spec(law),
                "caps": {"horizon": caps.horizon, "max_births": caps.max_births},
                "a": a,
                "n": n,
                "master_seed": master_seed,
            },
        ))
    return out


def continuity_modulus(dist: EmpiricalDistribution, eps: float) -> float:
    """Largest coverage perturbation with CDF effect at most ``eps``.

    Inverts the empirical probability generating function of the birth
    counts: solves pgf(1 - delta) = 1 - eps by bisection (absolute
    tolerance 1e-10), clamping to 1 when even total deletion cannot
    reach 1 - eps.
    """
    if not 0.0 < eps < 1.0:
        raise OutOfDomainError("eps must lie in (0, 1)")
    samples = dist.samples
    ints = np.rint(samples).astype(np.int64)
    if np.any(ints < 0) or np.max(np.abs(samples - ints)) > 1e-9:
        raise OutOfDomainError("continuity modulus needs nonnegative integer counts")
    freq = np.bincount(ints).astype(np.float64) / len(ints)

    def pgf(s: float) -> float:
        acc = 0.0
        for k in range(len(freq) - 1, -1, -1):
            acc = acc * s + freq[k]
        return acc

    target = 1.0 - eps
    if pgf(0.0) > target:
        return 1.0
    lo, hi = 0.0, 1.0  # pgf(1 - lo) = 1 >= target >= pgf(1 - hi)
    while hi - lo > 1e-10:
        mid = 0.5 * (lo + hi)
        if pgf(1.0 - mid) >= target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _fmt(x) -> str:
    if isinstance(x, float):
        return repr(x)
    return str(x)


def alpha_ids(count: int) -> List[str]:
    width = max(2, len(str(count - 1)))
    return [f"a{i:0{width}d}" for i in range(count)]


def write_estimates_csv(path, dists: Sequence[EmpiricalDistribution],
                        ps: Sequence[float]) -> None:
    """Long-format per-coverage summary: one row per (alpha, quantile order)."""
    ids = alpha_ids(len(dists))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("alpha_id,n,mean,se_mean,p,quantile_p\n")
        for aid, dist in zip(ids, dists):
            for p in ps:
                fh.write(",".join([
                    aid, str(dist.n), _fmt(dist.mean()), _fmt(dist.se_mean()),
                    _fmt(float(p)), _fmt(dist.quantile(p)),
                ]) + "\n")


def write_cdf_csv(path, dists: Sequence[EmpiricalDistribution],
                  delta: float = 0.05) -> None:
    """Long-format CDF table with a DKW uniform band half-width."""
    ids = alpha_ids(len(dists))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("alpha_id,x,cdf,band\n")
        for aid, dist in zip(ids, dists):
            band = dist.dkw_band(delta)
            xs = np.unique(dist.samples)
            for x in xs:
                fh.write(",".join([
                    aid, _fmt(float(x)), _fmt(dist.cdf(float(x))), _fmt(band),
                ]) + "\n")


def write_meta_json(path, dists: Sequence[EmpiricalDistribution],
                    extra: Optional[Dict] = None) -> None:
    ids = alpha_ids(len(dists))
    payload = {
        "alphas": {aid: dist.meta for aid, dist in zip(ids, dists)},
    }
    if extra:
        payload.update(extra)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
