"""Counter-based random numbers for reproducible parallel simulation.

A Philox-4x32-10 block cipher maps a (seed, path index, step) triple to one
128-bit block, so every normal increment is a pure function of its
coordinates: paths can be generated on any number of threads in any order and
still be bit-identical.  The functions are compiled with numba and usable
from other compiled kernels; the underlying ``.py_func`` mirrors serve as an
interpreter-mode cross-check in the tests.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

__all__ = ["philox4x32", "uniform_at", "normal_at"]

_M0 = np.uint64(0xD2511F53)
_M1 = np.uint64(0xCD9E8D57)
_W0 = np.uint64(0x9E3779B9)
_W1 = np.uint64(0xBB67AE85)
_MASK32 = np.uint64(0xFFFFFFFF)
_SHIFT32 = np.uint64(32)
_TWO_PI = 2.0 * math.pi
_INV52 = 1.0 / 4503599627370496.0  # 2**-52


@njit(cache=True)
def philox4x32(c0, c1, c2, c3, k0, k1):
    """One Philox-4x32-10 block.

    Arguments and results are 32-bit words carried in uint64; the products
    below never exceed 64 bits, so the multiply-high/low split is exact.
    """
    c0 = np.uint64(c0) & _MASK32
    c1 = np.uint64(c1) & _MASK32
    c2 = np.uint64(c2) & _MASK32
    c3 = np.uint64(c3) & _MASK32
    k0 = np.uint64(k0) & _MASK32
    k1 = np.uint64(k1) & _MASK32
    for _ in range(10):
        p0 = _M0 * c0
        p1 = _M1 * c2
        n0 = (p1 >> _SHIFT32) ^ c1 ^ k0
        n1 = p1 & _MASK32
        n2 = (p0 >> _SHIFT32) ^ c3 ^ k1
        n3 = p0 & _MASK32
        c0, c1, c2, c3 = n0, n1, n2, n3
        k0 = (k0 + _W0) & _MASK32
        k1 = (k1 + _W1) & _MASK32
    return c0, c1, c2, c3


@njit(cache=True)
def uniform_at(step, path_index, seed):
    """Two uniforms in (0, 1) for a (seed, path, step) triple."""
    s = np.uint64(step)
    p = np.uint64(path_index)
    k = np.uint64(seed)
    w0, w1, w2, w3 = philox4x32(
        s & _MASK32,
        p & _MASK32,
        (p >> _SHIFT32) & _MASK32,
        (s >> _SHIFT32) & _MASK32,
        k & _MASK32,
        (k >> _SHIFT32) & _MASK32,
    )
    u1 = (np.float64((w0 << np.uint64(20)) ^ (w1 >> np.uint64(12))) + 0.5) * _INV52
    u2 = (np.float64((w2 << np.uint64(20)) ^ (w3 >> np.uint64(12))) + 0.5) * _INV52
    return u1, u2


@njit(cache=True)
def normal_at(step, path_index, seed):
    """Standard normal increment for a (seed, path, step) triple."""
    u1, u2 = uniform_at(step, path_index, seed)
    return math.sqrt(-2.0 * math.log(u1)) * math.cos(_TWO_PI * u2)
