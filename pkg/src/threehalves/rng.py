"""Counter-based random numbers: one independent substream per path.

Every draw is a pure function of ``(seed, path index, draw counter)`` computed
with the Philox4x32-10 block cipher, so paths can be simulated in any order or
partition and still reproduce bit for bit.  Each counter value yields exactly
one uniform; normals are obtained from it by inverse-CDF, so a step always
consumes a fixed number of counter ticks.
"""
from __future__ import annotations

import ctypes
from dataclasses import dataclass

import numba
import numpy as np
from numba.extending import get_cython_function_address

__all__ = [
    "RngStream",
    "derive_seed",
    "split_seed",
    "philox4x32",
    "uniform_at",
    "normal_at",
    "uniforms",
    "normals",
]

_M0 = np.uint64(0xD2511F53)
_M1 = np.uint64(0xCD9E8D57)
_W0 = np.uint64(0x9E3779B9)
_W1 = np.uint64(0xBB67AE85)
_MASK32 = np.uint64(0xFFFFFFFF)
_SH32 = np.uint64(32)
_SH20 = np.uint64(20)
_TWO_M52 = 2.0**-52

_ndtri = ctypes.CFUNCTYPE(ctypes.c_double, ctypes.c_double)(
    get_cython_function_address("scipy.special.cython_special", "ndtri")
)


@numba.njit(cache=True, inline="always")
def philox4x32(c0, c1, c2, c3, k0, k1):
    """Philox4x32 with 10 rounds on uint64-held 32-bit words."""
    for rnd in range(10):
        if rnd > 0:
            k0 = (k0 + _W0) & _MASK32
            k1 = (k1 + _W1) & _MASK32
        p0 = _M0 * c0
        p1 = _M1 * c2
        hi0 = p0 >> _SH32
        lo0 = p0 & _MASK32
        hi1 = p1 >> _SH32
        lo1 = p1 & _MASK32
        c0 = hi1 ^ c1 ^ k0
        c1 = lo1
        c2 = hi0 ^ c3 ^ k1
        c3 = lo0
    return c0, c1, c2, c3


@numba.njit(cache=True, inline="always")
def uniform_at(k0, k1, path, counter):
    """Open-interval uniform for one (path, counter) pair; 52 random bits."""
    x0, x1, _, _ = philox4x32(
        np.uint64(counter) & _MASK32,
        np.uint64(counter) >> _SH32,
        np.uint64(path) & _MASK32,
        np.uint64(path) >> _SH32,
        k0,
        k1,
    )
    bits = (x0 << _SH20) ^ (x1 >> np.uint64(12))
    return (float(bits) + 0.5) * _TWO_M52


@numba.njit(inline="always")
def normal_at(k0, k1, path, counter):
    return _ndtri(uniform_at(k0, k1, path, counter))


@numba.njit(nogil=True)
def _fill(k0, k1, path, start, out, gaussian):
    for i in range(out.shape[0]):
        if gaussian:
            out[i] = normal_at(k0, k1, path, start + i)
        else:
            out[i] = uniform_at(k0, k1, path, start + i)
    return out


def split_seed(seed: int) -> tuple[np.uint64, np.uint64]:
    """Philox key words (low, high) of a 64-bit seed."""
    seed = int(seed) & 0xFFFFFFFFFFFFFFFF
    return np.uint64(seed & 0xFFFFFFFF), np.uint64(seed >> 32)


def derive_seed(seed: int, *words: int) -> int:
    """Child 64-bit seed for e.g. a repetition index, via ``SeedSequence``."""
    entropy = [int(seed) & 0xFFFFFFFFFFFFFFFF, *(int(w) for w in words)]
    return int(np.random.SeedSequence(entropy).generate_state(1, np.uint64)[0])


def uniforms(seed: int, path: int, count: int, start: int = 0) -> np.ndarray:
    k0, k1 = split_seed(seed)
    return _fill(k0, k1, np.uint64(path), np.uint64(start), np.empty(count), False)


def normals(seed: int, path: int, count: int, start: int = 0) -> np.ndarray:
    k0, k1 = split_seed(seed)
    return _fill(k0, k1, np.uint64(path), np.uint64(start), np.empty(count), True)


@dataclass
class RngStream:
    """Sequential view of one path's substream.

    Attributes:
        seed: 64-bit master seed.
        path: 64-bit path index.
        counter: index of the next draw; advanced by one per draw.
    """

    seed: int
    path: int
    counter: int = 0

    def standard_uniform(self) -> float:
        value = float(uniforms(self.seed, self.path, 1, self.counter)[0])
        self.counter += 1
        return value

    def standard_normal(self) -> float:
        value = float(normals(self.seed, self.path, 1, self.counter)[0])
        self.counter += 1
        return value

    def uniforms(self, count: int) -> np.ndarray:
        out = uniforms(self.seed, self.path, count, self.counter)
        self.counter += count
        return out

    def normals(self, count: int) -> np.ndarray:
        out = normals(self.seed, self.path, count, self.counter)
        self.counter += count
        return out
