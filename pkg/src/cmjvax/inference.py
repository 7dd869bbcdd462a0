"""Closed-form outbreak-size results and estimators.

The total progeny of a Poisson-offspring process started from ``a``
cases follows the Borel-Tanner law; its mean links total size to the
offspring mean, which in turn has a closed-form MLE from (initial,
total-birth) pairs of independent extinct outbreaks.
"""

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .errors import EmptyInputError, InvalidLawError, OutOfDomainError
from .special import chi2_sf, gammaln, reg_lower_gamma


@dataclass(frozen=True)
class OutbreakSizeRecord:
    """Initial cases and non-initial total births of one extinct outbreak."""

    a: int
    n: int

    def __post_init__(self):
        if self.a < 1 or self.n < 0 or self.a != int(self.a) or self.n != int(self.n):
            raise OutOfDomainError("need integer a >= 1 and n >= 0")


def borel_tanner_pmf(a: int, m: float, k: int) -> float:
    """P(total non-initial births = k) for Poisson(m) offspring, a initials.

    a * m^k * (a+k)^(k-1) * exp(-(a+k) m) / k!, evaluated in log space so
    the (a+k)^(k-1) factor cannot overflow.
    """
    if a < 1:
        raise OutOfDomainError("need at least one initial case")
    if not 0.0 <= m < 1.0:
        raise OutOfDomainError("offspring mean must lie in [0, 1) for a proper law")
    if k < 0:
        raise OutOfDomainError("k must be nonnegative")
    if m == 0.0:
        return 1.0 if k == 0 else 0.0
    if k == 0:
        return math.exp(-a * m)
    log_p = (math.log(a) + k * math.log(m) + (k - 1) * math.log(a + k)
             - (a + k) * m - gammaln(k + 1.0))
    return math.exp(log_p)


def borel_tanner_table(a: int, m: float, mass: float = 1.0 - 1e-6,
                       k_max: Optional[int] = None) -> List[Tuple[int, float]]:
    """(k, pmf) rows until the cumulative mass reaches ``mass``."""
    if k_max is None:
        k_max = 10_000_000
    rows = []
    total = 0.0
    for k in range(k_max + 1):
        p = borel_tanner_pmf(a, m, k)
        rows.append((k, p))
        total += p
        if total >= mass:
            break
    return rows


def mle_offspring_mean(records: Sequence[OutbreakSizeRecord]) -> float:
    """Offspring-mean MLE from independent extinct outbreaks:
    sum(n) / sum(a + n)."""
    if not records:
        raise EmptyInputError("no outbreak size records")
    total_n = sum(r.n for r in records)
    total_an = sum(r.a + r.n for r in records)
    return total_n / total_an


def mean_outbreak_size(m: float) -> float:
    """Expected non-initial outbreak size per initial case: m / (1 - m)."""
    if not 0.0 <= m < 1.0:
        raise OutOfDomainError("offspring mean must lie in [0, 1)")
    return m / (1.0 - m)


def gamma_coverage(mean: float, shape: float, lo: float, hi: float) -> float:
    """P(lo <= X <= hi) for a gamma lifetime with the given mean and shape.

    Uses the package's own regularized incomplete gamma, so the value
    does not depend on any platform statistics library.
    """
    if mean <= 0 or shape <= 0:
        raise InvalidLawError("gamma needs positive mean and shape")
    if lo < 0 or not lo < hi:
        raise OutOfDomainError("need 0 <= lo < hi")
    rate = shape / mean
    lower = reg_lower_gamma(shape, rate * lo) if lo > 0 else 0.0
    if math.isinf(hi):
        upper = 1.0
    else:
        upper = reg_lower_gamma(shape, rate * hi)
    return float(upper - lower)


def chi_square_gof(observed: np.ndarray, probs: np.ndarray,
                   min_expected: float = 5.0) -> Tuple[float, int, float]:
    """Pearson goodness-of-fit with tail grouping.

    ``observed[k]`` are frequencies over k = 0, 1, ...; ``probs`` the
    model pmf over the same support plus (implicitly) everything beyond,
    which is grouped into the final bin.  Adjacent bins are merged from
    the tail until every expected count reaches ``min_expected``.
    Returns (statistic, degrees of freedom, p-value).
    """
    observed = np.asarray(observed, dtype=np.float64)
    probs = np.asarray(probs, dtype=np.float64)
    if len(observed) != len(probs):
        raise OutOfDomainError("observed and probs must have equal length")
    total = observed.sum()
    if total <= 0:
        raise EmptyInputError("no observations")
    tail_p = max(0.0, 1.0 - probs.sum())

    # bins: each prob plus the implicit tail, merged backwards until big enough
    obs_bins = list(observed) + [0.0]
    p_bins = list(probs) + [tail_p]
    merged_obs: List[float] = []
    merged_p: List[float] = []
    acc_o = acc_p = 0.0
    for o, p in zip(reversed(obs_bins), reversed(p_bins)):
        acc_o += o
        acc_p += p
        if acc_p * total >= min_expected:
            merged_obs.append(acc_o)
            merged_p.append(acc_p)
            acc_o = acc_p = 0.0
    if not merged_obs:
        raise OutOfDomainError("not enough mass to form a single bin")
    # leftover head mass folds into the last-formed (i.e. leading) bin
    merged_obs[-1] += acc_o
    merged_p[-1] += acc_p
    merged_obs.reverse()
    merged_p.reverse()

    stat = 0.0
    for o, p in zip(merged_obs, merged_p):
        expected = p * total
        if expected > 0:
            stat += (o - expected) ** 2 / expected
    df = len(merged_obs) - 1
    if df < 1:
        return stat, 0, 1.0
    return stat, df, chi2_sf(stat, df)
