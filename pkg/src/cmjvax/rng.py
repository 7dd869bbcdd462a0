"""Counter-based splittable random streams.

Every random quantity in the package is a pure function of a 64-bit
key and a draw counter, so replicate batches can be generated in any
order (or regenerated on demand) with identical results.  The core is
the splitmix64 output function: stream draw ``n`` for key ``k`` is
``mix64(k + (n + 1) * GOLDEN)``, i.e. the canonical splitmix64 sequence
seeded with ``k``.  Keys for sub-streams are derived by hashing
(parent key, word) pairs through the same mixer.

The u64 arithmetic exists twice: a numba version relying on native
uint64 wraparound and a pure-Python version masking explicitly.  They
are interchangeable and tested for bit equality.
"""

import numpy as np

from ._backend import NUMBA_ENABLED, jit

U64_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MULT_A = 0xBF58476D1CE4E5B9
_MULT_B = 0x94D049BB133111EB
_DERIVE_SALT = 0x632BE59BD9B4E019

# (x >> 11) spans 53 bits; the half-ulp offset keeps uniforms in (0, 1)
_DOUBLE_SCALE = 2.0 ** -53
_DOUBLE_OFFSET = 2.0 ** -54


def _mix64_py(z: int) -> int:
    z &= U64_MASK
    z = ((z ^ (z >> 30)) * _MULT_A) & U64_MASK
    z = ((z ^ (z >> 27)) * _MULT_B) & U64_MASK
    return z ^ (z >> 31)


def _derive_key_py(key, word):
    a = _mix64_py((int(key) + _GOLDEN) & U64_MASK)
    b = _mix64_py((int(word) + _DERIVE_SALT) & U64_MASK)
    return _mix64_py(a ^ b)


def _stream_u64_py(key, counter):
    return _mix64_py((int(key) + (int(counter) + 1) * _GOLDEN) & U64_MASK)


def _stream_double_py(key, counter):
    return (_stream_u64_py(key, counter) >> 11) * _DOUBLE_SCALE + _DOUBLE_OFFSET


if NUMBA_ENABLED:
    _NB_GOLDEN = np.uint64(_GOLDEN)
    _NB_MULT_A = np.uint64(_MULT_A)
    _NB_MULT_B = np.uint64(_MULT_B)
    _NB_SALT = np.uint64(_DERIVE_SALT)
    _NB_ONE = np.uint64(1)
    _S30 = np.uint64(30)
    _S27 = np.uint64(27)
    _S31 = np.uint64(31)
    _S11 = np.uint64(11)

    @jit
    def _mix64_nb(z):
        z = (z ^ (z >> _S30)) * _NB_MULT_A
        z = (z ^ (z >> _S27)) * _NB_MULT_B
        return z ^ (z >> _S31)

    @jit
    def _derive_key_nb(key, word):
        a = _mix64_nb(key + _NB_GOLDEN)
        b = _mix64_nb(word + _NB_SALT)
        return _mix64_nb(a ^ b)

    @jit
    def _stream_u64_nb(key, counter):
        return _mix64_nb(key + (counter + _NB_ONE) * _NB_GOLDEN)

    @jit
    def _stream_double_nb(key, counter):
        x = _stream_u64_nb(key, counter)
        return np.float64(x >> _S11) * _DOUBLE_SCALE + _DOUBLE_OFFSET

    mix64 = _mix64_nb
    derive_key = _derive_key_nb
    stream_u64 = _stream_u64_nb
    stream_double = _stream_double_nb
else:
    mix64 = _mix64_py
    derive_key = _derive_key_py
    stream_u64 = _stream_u64_py
    stream_double = _stream_double_py


def as_key(seed) -> np.uint64:
    """Coerce an arbitrary integer seed to a 64-bit stream key."""
    return np.uint64(int(seed) & U64_MASK)


class RandomStream:
    """Sequential uniform stream with deterministic child-stream spawning.

    Thin Python-level convenience for operations that take a
    "random stream" argument (bootstrap resampling, property tests).
    The heavy kernels use the keyed functions directly.
    """

    __slots__ = ("key", "_n")

    def __init__(self, seed):
        self.key = as_key(seed)
        self._n = 0

    def uniform(self) -> float:
        u = stream_double(self.key, np.uint64(self._n))
        self._n += 1
        return float(u)

    def uniforms(self, count: int) -> np.ndarray:
        out = np.empty(count, dtype=np.float64)
        for i in range(count):
            out[i] = self.uniform()
        return out

    def integers(self, upper: int) -> int:
        """Draw an index uniformly from 0..upper-1."""
        return min(int(self.uniform() * upper), upper - 1)

    def spawn(self, word: int) -> "RandomStream":
        return RandomStream(derive_key(self.key, np.uint64(int(word) & U64_MASK)))

    def next_key(self) -> np.uint64:
        """Derive a fresh sub-stream key, advancing this stream by one word."""
        key = derive_key(self.key, np.uint64(self._n))
        self._n += 1
        return np.uint64(key)
