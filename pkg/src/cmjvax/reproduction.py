"""Reproduction laws and life-history sampling.

A law has three orthogonal axes: the lifetime distribution, the
offspring-count distribution, and how contact times are placed on the
lifetime.  The at-death placement with Poisson counts and a gamma
lifetime is the transmission model fitted in the mumps case study;
richer placements share the same code path.

All samplers draw by inversion (one uniform per value, fixed
algorithms), so a given seed yields the same tree topology under any
lifetime parameters - the property the sensitivity analysis relies on.
"""

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from ._backend import jit
from .errors import InvalidLawError
from .rng import RandomStream, stream_double
from .special import gamma_quantile

LIFE_GAMMA = 0
LIFE_EXPONENTIAL = 1
LIFE_FIXED = 2

OFFSPRING_POISSON = 0
OFFSPRING_FIXED = 1
OFFSPRING_BERNOULLI = 2
OFFSPRING_NONE = 3

PLACE_AT_DEATH = 0
PLACE_UNIFORM = 1
PLACE_RATE = 2

_LIFE_KINDS = {"gamma": LIFE_GAMMA, "exponential": LIFE_EXPONENTIAL, "fixed": LIFE_FIXED}
_OFFSPRING_KINDS = {"poisson": OFFSPRING_POISSON, "fixed": OFFSPRING_FIXED,
                    "bernoulli": OFFSPRING_BERNOULLI}
_PLACE_KINDS = {"at_death": PLACE_AT_DEATH, "uniform_over_lifetime": PLACE_UNIFORM,
                "poisson_process_rate": PLACE_RATE}


@dataclass(frozen=True)
class ReproductionLaw:
    """Distributional recipe for a life history (lifetime, contact times).

    lifetime   : ("gamma", shape, mean) | ("exponential", mean) | ("fixed", value)
    offspring  : ("poisson", mean) | ("fixed", count) | ("bernoulli", p),
                 or None when the placement is a rate process
    placement  : ("at_death",) | ("uniform_over_lifetime",)
                 | ("poisson_process_rate", rate)

    Times are in days throughout; week conversions happen at reporting.
    """

    lifetime: Tuple
    offspring: Optional[Tuple]
    placement: Tuple = ("at_death",)

    def __post_init__(self):
        lt = self.lifetime
        if not isinstance(lt, tuple) or not lt or lt[0] not in _LIFE_KINDS:
            raise InvalidLawError(f"unknown lifetime law: {lt!r}")
        if lt[0] == "gamma":
            if len(lt) != 3 or lt[1] <= 0 or lt[2] <= 0:
                raise InvalidLawError("gamma lifetime needs shape > 0 and mean > 0")
        elif len(lt) != 2 or lt[1] <= 0:
            raise InvalidLawError(f"{lt[0]} lifetime needs a positive parameter")

        pl = self.placement
        if not isinstance(pl, tuple) or not pl or pl[0] not in _PLACE_KINDS:
            raise InvalidLawError(f"unknown contact placement: {pl!r}")
        if pl[0] == "poisson_process_rate":
            if len(pl) != 2 or pl[1] <= 0:
                raise InvalidLawError("poisson_process_rate needs rate > 0")
            if self.offspring is not None:
                raise InvalidLawError(
                    "offspring law must be absent when the contact point process "
                    "determines counts")
            return
        if len(pl) != 1:
            raise InvalidLawError(f"placement {pl[0]} takes no parameters")

        off = self.offspring
        if not isinstance(off, tuple) or len(off) != 2 or off[0] not in _OFFSPRING_KINDS:
            raise InvalidLawError(f"unknown offspring law: {off!r}")
        kind, par = off
        if kind == "poisson" and not par >= 0:
            raise InvalidLawError("poisson offspring mean must be >= 0")
        if kind == "fixed" and (par < 0 or par != int(par)):
            raise InvalidLawError("fixed offspring count must be a nonnegative integer")
        if kind == "bernoulli" and not 0 <= par <= 1:
            raise InvalidLawError("bernoulli offspring probability must be in [0, 1]")


@dataclass(frozen=True)
class LifeHistory:
    lifetime: float
    contact_ages: Tuple[float, ...]

    def __post_init__(self):
        if self.lifetime <= 0:
            raise InvalidLawError("lifetime must be positive")
        prev = 0.0
        for age in self.contact_ages:
            if age < prev or age > self.lifetime:
                raise InvalidLawError("contact ages must be sorted within [0, lifetime]")
            prev = age


def bhbp(offspring_mean_value: float, lifetime_mean: float,
         lifetime_shape: float) -> ReproductionLaw:
    """Gamma lifetime, Poisson offspring, reproduction at death."""
    return ReproductionLaw(
        lifetime=("gamma", lifetime_shape, lifetime_mean),
        offspring=("poisson", offspring_mean_value),
        placement=("at_death",),
    )


def mean_lifetime(law: ReproductionLaw) -> float:
    kind = law.lifetime[0]
    if kind == "gamma":
        return float(law.lifetime[2])
    return float(law.lifetime[1])


def offspring_mean(law: ReproductionLaw) -> float:
    """Exact mean number of contacts per individual."""
    if law.placement[0] == "poisson_process_rate":
        return law.placement[1] * mean_lifetime(law)
    kind, par = law.offspring
    if kind == "poisson":
        return float(par)
    if kind == "fixed":
        return float(par)
    return float(par)  # bernoulli


def critical_coverage(law: ReproductionLaw) -> float:
    """max(0, 1 - 1/m): the least constant coverage making the process subcritical."""
    m = offspring_mean(law)
    if m <= 1.0:
        return 0.0
    return 1.0 - 1.0 / m


def law_spec(law: ReproductionLaw) -> dict:
    """Nested-dict form of a law, matching the config file grammar."""
    lt = law.lifetime
    if lt[0] == "gamma":
        lifetime = {"kind": "gamma", "shape": lt[1], "mean": lt[2]}
    elif lt[0] == "exponential":
        lifetime = {"kind": "exponential", "mean": lt[1]}
    else:
        lifetime = {"kind": "fixed", "value": lt[1]}
    out = {"lifetime": lifetime}
    if law.placement[0] == "poisson_process_rate":
        out["placement"] = {"kind": "poisson_process_rate", "rate": law.placement[1]}
    else:
        kind, par = law.offspring
        if kind == "poisson":
            out["offspring"] = {"kind": "poisson", "mean": par}
        elif kind == "fixed":
            out["offspring"] = {"kind": "fixed", "count": int(par)}
        else:
            out["offspring"] = {"kind": "bernoulli", "p": par}
        out["placement"] = {"kind": law.placement[0]}
    return out


def _take(table: dict, context: str, required, optional=()) -> dict:
    unknown = set(table) - set(required) - set(optional)
    if unknown:
        raise InvalidLawError(f"unknown keys in {context}: {sorted(unknown)}")
    missing = [k for k in required if k not in table]
    if missing:
        raise InvalidLawError(f"missing keys in {context}: {missing}")
    return table


def law_from_spec(spec: dict) -> ReproductionLaw:
    """Parse the nested config form back into a validated law."""
    if not isinstance(spec, dict):
        raise InvalidLawError("law must be a table")
    _take(spec, "law", ["lifetime"], ["offspring", "placement"])
    lt = spec["lifetime"]
    kind = lt.get("kind")
    if kind == "gamma":
        _take(lt, "lifetime", ["kind", "shape", "mean"])
        lifetime = ("gamma", float(lt["shape"]), float(lt["mean"]))
    elif kind == "exponential":
        _take(lt, "lifetime", ["kind", "mean"])
        lifetime = ("exponential", float(lt["mean"]))
    elif kind == "fixed":
        _take(lt, "lifetime", ["kind", "value"])
        lifetime = ("fixed", float(lt["value"]))
    else:
        raise InvalidLawError(f"unknown lifetime kind {kind!r}")

    placement_spec = spec.get("placement", {"kind": "at_death"})
    pkind = placement_spec.get("kind")
    if pkind == "poisson_process_rate":
        _take(placement_spec, "placement", ["kind", "rate"])
        if "offspring" in spec:
            raise InvalidLawError(
                "offspring law must be absent for poisson_process_rate placement")
        return ReproductionLaw(lifetime=lifetime, offspring=None,
                               placement=("poisson_process_rate",
                                          float(placement_spec["rate"])))
    if pkind not in ("at_death", "uniform_over_lifetime"):
        raise InvalidLawError(f"unknown placement kind {pkind!r}")
    _take(placement_spec, "placement", ["kind"])

    if "offspring" not in spec:
        raise InvalidLawError("law needs an offspring table")
    off = spec["offspring"]
    okind = off.get("kind")
    if okind == "poisson":
        _take(off, "offspring", ["kind", "mean"])
        offspring = ("poisson", float(off["mean"]))
    elif okind == "fixed":
        _take(off, "offspring", ["kind", "count"])
        offspring = ("fixed", int(off["count"]))
    elif okind == "bernoulli":
        _take(off, "offspring", ["kind", "p"])
        offspring = ("bernoulli", float(off["p"]))
    else:
        raise InvalidLawError(f"unknown offspring kind {okind!r}")
    return ReproductionLaw(lifetime=lifetime, offspring=offspring,
                           placement=(pkind,))


def encode_law(law: ReproductionLaw) -> np.ndarray:
    """Pack a law into the flat float vector the kernels consume."""
    out = np.zeros(7, dtype=np.float64)
    lt = law.lifetime
    out[0] = _LIFE_KINDS[lt[0]]
    if lt[0] == "gamma":
        out[1] = lt[1]
        out[2] = lt[2]
    else:
        out[1] = lt[1]
    if law.placement[0] == "poisson_process_rate":
        out[3] = OFFSPRING_NONE
        out[5] = PLACE_RATE
        out[6] = law.placement[1]
    else:
        out[3] = _OFFSPRING_KINDS[law.offspring[0]]
        out[4] = law.offspring[1]
        out[5] = _PLACE_KINDS[law.placement[0]]
    return out


@jit
def _poisson_inverse(mean, u):
    # sequential inversion; exactly one uniform per draw
    k = 0
    p = math.exp(-mean)
    c = p
    while u > c:
        k += 1
        p *= mean / k
        c += p
        if p == 0.0:
            # pmf underflowed: c cannot grow further, stop at the tail
            break
    return k


@jit
def _draw_count(mean, key, counter):
    # splits large means so exp(-mean) never underflows; Poisson additivity
    # keeps the distribution exact
    total = 0
    remaining = mean
    ctr = counter
    while remaining > 500.0:
        total += _poisson_inverse(500.0, stream_double(key, ctr))
        ctr += _CTR_ONE
        remaining -= 500.0
    total += _poisson_inverse(remaining, stream_double(key, ctr))
    ctr += _CTR_ONE
    return total, ctr


_CTR_ONE = np.uint64(1)
_CTR_ZERO = np.uint64(0)


@jit
def _draw_lifetime(life_kind, p1, p2, u):
    if life_kind == LIFE_GAMMA:
        # shape p1, mean p2 -> scale p2/p1
        return gamma_quantile(p1, u) * (p2 / p1)
    if life_kind == LIFE_EXPONENTIAL:
        return -p1 * math.log(u)
    return p1  # fixed


@jit
def _sample_life(law, key, ages):
    """Draw one life history from the stream under ``key``.

    Returns (lifetime, count, ok).  Contact ages are written sorted into
    ``ages``; when ``count`` exceeds the buffer, ok is False and the
    caller retries with a larger buffer (the keyed stream makes the
    retry reproduce identical values).
    """
    life_kind = int(law[0])
    ctr = _CTR_ZERO
    if life_kind == LIFE_FIXED:
        lifetime = law[1]
    else:
        lifetime = _draw_lifetime(life_kind, law[1], law[2], stream_double(key, ctr))
        ctr += _CTR_ONE

    off_kind = int(law[3])
    place_kind = int(law[5])
    if place_kind == PLACE_RATE:
        count, ctr = _draw_count(law[6] * lifetime, key, ctr)
    elif off_kind == OFFSPRING_POISSON:
        count, ctr = _draw_count(law[4], key, ctr)
    elif off_kind == OFFSPRING_FIXED:
        count = int(law[4])
    else:  # bernoulli
        count = 1 if stream_double(key, ctr) < law[4] else 0
        ctr += _CTR_ONE

    if count > ages.shape[0]:
        return lifetime, count, False

    if place_kind == PLACE_AT_DEATH:
        for i in range(count):
            ages[i] = lifetime
    else:
        # uniform order statistics on [0, lifetime]; a rate-lambda Poisson
        # process conditioned on its count has the same law
        for i in range(count):
            ages[i] = lifetime * stream_double(key, ctr)
            ctr += _CTR_ONE
        for i in range(1, count):
            v = ages[i]
            j = i - 1
            while j >= 0 and ages[j] > v:
                ages[j + 1] = ages[j]
                j -= 1
            ages[j + 1] = v
    return lifetime, count, True


def sample_life_history(law: ReproductionLaw, rng: RandomStream) -> LifeHistory:
    """Draw an independent life history; consumes one spawn word of ``rng``."""
    key = rng.next_key()
    encoded = encode_law(law)
    cap = 8
    while True:
        ages = np.empty(cap, dtype=np.float64)
        lifetime, count, ok = _sample_life(encoded, key, ages)
        if ok:
            return LifeHistory(lifetime=float(lifetime),
                               contact_ages=tuple(float(a) for a in ages[:count]))
        cap = max(cap * 2, count)
