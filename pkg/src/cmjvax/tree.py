"""Realizations of the unvaccinated branching process.

A tree is the full genealogy of one outbreak with birth/death times,
parent links, and one coupling uniform attached to every non-initial
birth.  The uniforms come from a stream separate from the life
histories, so one materialized tree can be re-pruned under any
vaccination function without resampling.

Births are totally ordered by (birth time, parent id, contact index);
individual ids follow that order, ensuring the i-th birth is always
the individual with id ``initials + i - 1``.  Each individual draws
its life history from a private stream keyed by its genealogical
position, which keeps tree topology identical across lifetime-law
parameter changes under a shared seed.
"""

import json
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from ._backend import jit
from .errors import ExplosionWarning, InvalidLawError
from .reproduction import ReproductionLaw, _sample_life, encode_law
from .rng import as_key, derive_key, stream_double

_TAG_LIFE = np.uint64(0x1F)
_TAG_COUPLING = np.uint64(0x2C)


@dataclass(frozen=True)
class SimCaps:
    """Guards against explosion: no births after ``horizon`` days, and a
    hard cap on total births per tree."""

    horizon: float
    max_births: int

    def __post_init__(self):
        if not self.horizon > 0:
            raise InvalidLawError("horizon must be positive")
        if self.max_births < 1:
            raise InvalidLawError("max_births must be at least 1")


@dataclass(frozen=True)
class Individual:
    id: int
    parent: Optional[int]
    birth_time: float
    death_time: float
    coupling_uniform: Optional[float]


@dataclass
class BranchingTree:
    initials: int
    individuals: List[Individual]
    censored: bool
    caps: SimCaps
    horizon_truncated: bool = False

    def __len__(self) -> int:
        return len(self.individuals)

    @property
    def births(self) -> int:
        return len(self.individuals) - self.initials


@jit
def _heap_less(ht, hp, hk, i, j):
    if ht[i] != ht[j]:
        return ht[i] < ht[j]
    if hp[i] != hp[j]:
        return hp[i] < hp[j]
    return hk[i] < hk[j]


@jit
def _heap_push(ht, hp, hk, size, t, p, k):
    i = size
    ht[i] = t
    hp[i] = p
    hk[i] = k
    while i > 0:
        up = (i - 1) // 2
        if _heap_less(ht, hp, hk, i, up):
            ht[i], ht[up] = ht[up], ht[i]
            hp[i], hp[up] = hp[up], hp[i]
            hk[i], hk[up] = hk[up], hk[i]
            i = up
        else:
            break
    return size + 1


@jit
def _heap_pop(ht, hp, hk, size):
    t = ht[0]
    p = hp[0]
    k = hk[0]
    size -= 1
    if size > 0:
        ht[0] = ht[size]
        hp[0] = hp[size]
        hk[0] = hk[size]
        i = 0
        while True:
            left = 2 * i + 1
            right = left + 1
            best = i
            if left < size and _heap_less(ht, hp, hk, left, best):
                best = left
            if right < size and _heap_less(ht, hp, hk, right, best):
                best = right
            if best == i:
                break
            ht[i], ht[best] = ht[best], ht[i]
            hp[i], hp[best] = hp[best], hp[i]
            hk[i], hk[best] = hk[best], hk[i]
            i = best
    return t, p, k, size


@jit
def _simulate_chunk(law, a, horizon, max_births, master, rep_lo, rep_hi):
    """Simulate replicates [rep_lo, rep_hi) into flat CSR arrays."""
    nrep = rep_hi - rep_lo
    offsets = np.zeros(nrep + 1, dtype=np.int64)
    censored = np.zeros(nrep, dtype=np.bool_)
    truncated = np.zeros(nrep, dtype=np.bool_)

    gcap = nrep * (a + 4)
    gb = np.empty(gcap, dtype=np.float64)
    gd = np.empty(gcap, dtype=np.float64)
    gp = np.empty(gcap, dtype=np.int64)
    gu = np.empty(gcap, dtype=np.float64)
    total = 0

    # per-tree scratch, reused across replicates
    cap = a + 64
    bt = np.empty(cap, dtype=np.float64)
    dt = np.empty(cap, dtype=np.float64)
    par = np.empty(cap, dtype=np.int64)
    keys = np.empty(cap, dtype=np.uint64)
    hcap = 64
    ht = np.empty(hcap, dtype=np.float64)
    hp = np.empty(hcap, dtype=np.int64)
    hk = np.empty(hcap, dtype=np.int64)
    ages = np.empty(16, dtype=np.float64)

    for r in range(nrep):
        rep_key = derive_key(master, np.uint64(rep_lo + r))
        life_root = derive_key(rep_key, _TAG_LIFE)
        coup_key = derive_key(rep_key, _TAG_COUPLING)

        n = 0
        births = 0
        hsize = 0
        is_censored = False
        is_truncated = False

        # seed the event queue with one synthetic event per initial;
        # parent -1 sorts initials ahead of any same-time real birth
        for j in range(a):
            if hsize >= hcap:
                hcap *= 2
                ht2 = np.empty(hcap, dtype=np.float64)
                hp2 = np.empty(hcap, dtype=np.int64)
                hk2 = np.empty(hcap, dtype=np.int64)
                ht2[:hsize] = ht[:hsize]
                hp2[:hsize] = hp[:hsize]
                hk2[:hsize] = hk[:hsize]
                ht, hp, hk = ht2, hp2, hk2
            hsize = _heap_push(ht, hp, hk, hsize, 0.0, -1, j)

        while hsize > 0:
            t, p, kidx, hsize = _heap_pop(ht, hp, hk, hsize)
            if p >= 0:
                if births >= max_births:
                    is_censored = True
                    break
                key = derive_key(keys[p], np.uint64(kidx))
            else:
                key = derive_key(life_root, np.uint64(kidx))

            lifetime, count, ok = _sample_life(law, key, ages)
            while not ok:
                ages = np.empty(max(2 * ages.shape[0], count), dtype=np.float64)
                lifetime, count, ok = _sample_life(law, key, ages)

            if n >= cap:
                cap *= 2
                bt2 = np.empty(cap, dtype=np.float64)
                dt2 = np.empty(cap, dtype=np.float64)
                par2 = np.empty(cap, dtype=np.int64)
                keys2 = np.empty(cap, dtype=np.uint64)
                bt2[:n] = bt[:n]
                dt2[:n] = dt[:n]
                par2[:n] = par[:n]
                keys2[:n] = keys[:n]
                bt, dt, par, keys = bt2, dt2, par2, keys2
            me = n
            bt[me] = t
            dt[me] = t + lifetime
            par[me] = p
            keys[me] = key
            n += 1
            if p >= 0:
                births += 1

            for c in range(count):
                ct = t + ages[c]
                if ct > horizon:
                    is_truncated = True
                    continue
                if hsize >= hcap:
                    hcap *= 2
                    ht2 = np.empty(hcap, dtype=np.float64)
                    hp2 = np.empty(hcap, dtype=np.int64)
                    hk2 = np.empty(hcap, dtype=np.int64)
                    ht2[:hsize] = ht[:hsize]
                    hp2[:hsize] = hp[:hsize]
                    hk2[:hsize] = hk[:hsize]
                    ht, hp, hk = ht2, hp2, hk2
                hsize = _heap_push(ht, hp, hk, hsize, ct, me, c)

        while total + n > gcap:
            gcap *= 2
            gb2 = np.empty(gcap, dtype=np.float64)
            gd2 = np.empty(gcap, dtype=np.float64)
            gp2 = np.empty(gcap, dtype=np.int64)
            gu2 = np.empty(gcap, dtype=np.float64)
            gb2[:total] = gb[:total]
            gd2[:total] = gd[:total]
            gp2[:total] = gp[:total]
            gu2[:total] = gu[:total]
            gb, gd, gp, gu = gb2, gd2, gp2, gu2

        for i in range(n):
            gb[total + i] = bt[i]
            gd[total + i] = dt[i]
            gp[total + i] = par[i]
            if i < a:
                gu[total + i] = np.nan
            else:
                gu[total + i] = stream_double(coup_key, np.uint64(i - a))
        total += n
        offsets[r + 1] = total
        censored[r] = is_censored
        truncated[r] = is_truncated

    return (offsets, gb[:total].copy(), gd[:total].copy(), gp[:total].copy(),
            gu[:total].copy(), censored, truncated)


@dataclass
class TreeBatch:
    """Flat CSR storage of many coupled replicates of one law."""

    law: ReproductionLaw
    a: int
    caps: SimCaps
    master_seed: int
    offsets: np.ndarray
    birth_time: np.ndarray
    death_time: np.ndarray
    parent: np.ndarray
    coupling_u: np.ndarray
    censored: np.ndarray
    horizon_truncated: np.ndarray

    @property
    def n(self) -> int:
        return len(self.offsets) - 1

    def size(self, i: int) -> int:
        return int(self.offsets[i + 1] - self.offsets[i])

    def tree(self, i: int) -> BranchingTree:
        lo = int(self.offsets[i])
        hi = int(self.offsets[i + 1])
        individuals = []
        for j in range(lo, hi):
            local = j - lo
            p = int(self.parent[j])
            individuals.append(Individual(
                id=local,
                parent=None if p < 0 else p,
                birth_time=float(self.birth_time[j]),
                death_time=float(self.death_time[j]),
                coupling_uniform=None if local < self.a else float(self.coupling_u[j]),
            ))
        return BranchingTree(
            initials=self.a,
            individuals=individuals,
            censored=bool(self.censored[i]),
            caps=self.caps,
            horizon_truncated=bool(self.horizon_truncated[i]),
        )


def simulate_batch(law: ReproductionLaw, a: int, caps: SimCaps, n: int,
                   master_seed: int, threads: int = 1,
                   chunk_size: int = 4096) -> TreeBatch:
    """Simulate ``n`` independent replicates.

    Deterministic in ``master_seed`` alone: replicate ``i`` is generated
    from its own derived key, so neither chunking nor thread count
    changes any output bit.
    """
    if a < 1:
        raise InvalidLawError("need at least one initial individual")
    if n < 1:
        raise InvalidLawError("need at least one replicate")
    encoded = encode_law(law)
    master = as_key(master_seed)
    bounds = [(lo, min(lo + chunk_size, n)) for lo in range(0, n, chunk_size)]

    def run(bound):
        lo, hi = bound
        return _simulate_chunk(encoded, a, float(caps.horizon),
                               int(caps.max_births), master, lo, hi)

    if threads > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(run, bounds))
    else:
        parts = [run(b) for b in bounds]

    offsets = np.zeros(n + 1, dtype=np.int64)
    pieces_b, pieces_d, pieces_p, pieces_u = [], [], [], []
    censored = np.zeros(n, dtype=np.bool_)
    truncated = np.zeros(n, dtype=np.bool_)
    base = 0
    for (lo, hi), part in zip(bounds, parts):
        off, b, d, p, u, cen, trunc = part
        offsets[lo + 1:hi + 1] = off[1:] + base
        base += off[-1]
        pieces_b.append(b)
        pieces_d.append(d)
        pieces_p.append(p)
        pieces_u.append(u)
        censored[lo:hi] = cen
        truncated[lo:hi] = trunc

    return TreeBatch(
        law=law, a=a, caps=caps, master_seed=int(master_seed),
        offsets=offsets,
        birth_time=np.concatenate(pieces_b),
        death_time=np.concatenate(pieces_d),
        parent=np.concatenate(pieces_p),
        coupling_u=np.concatenate(pieces_u),
        censored=censored,
        horizon_truncated=truncated,
    )


def simulate_tree(law: ReproductionLaw, a: int, caps: SimCaps,
                  seed: int) -> BranchingTree:
    """One realization; equals replicate 0 of a batch run with this seed."""
    batch = simulate_batch(law, a, caps, 1, seed)
    tree = batch.tree(0)
    if tree.censored:
        warnings.warn(
            f"tree hit max_births={caps.max_births} before horizon; "
            "returned censored", ExplosionWarning, stacklevel=2)
    return tree


def total_birth_order(tree: BranchingTree) -> List[Tuple[int, float]]:
    """Birth indices 1..N with their times, in the canonical order."""
    return [(ind.id - tree.initials + 1, ind.birth_time)
            for ind in tree.individuals[tree.initials:]]


def tree_to_json(tree: BranchingTree) -> str:
    """Serialize to the documented debugging/golden-file shape."""
    payload = {
        "initials": tree.initials,
        "censored": tree.censored,
        "horizon_truncated": tree.horizon_truncated,
        "caps": {"horizon": tree.caps.horizon, "max_births": tree.caps.max_births},
        "individuals": [
            {
                "id": ind.id,
                "parent": ind.parent,
                "birth": ind.birth_time,
                "death": ind.death_time,
                "u": ind.coupling_uniform,
            }
            for ind in tree.individuals
        ],
    }
    return json.dumps(payload, indent=None, separators=(",", ":"))


def tree_from_json(text: str) -> BranchingTree:
    payload = json.loads(text)
    individuals = [
        Individual(
            id=item["id"],
            parent=item["parent"],
            birth_time=item["birth"],
            death_time=item["death"],
            coupling_uniform=item["u"],
        )
        for item in payload["individuals"]
    ]
    return BranchingTree(
        initials=payload["initials"],
        individuals=individuals,
        censored=payload["censored"],
        caps=SimCaps(**payload["caps"]),
        horizon_truncated=payload.get("horizon_truncated", False),
    )
