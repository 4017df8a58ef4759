"""Counter-based random numbers for reproducible parallel ensembles.

The generator is Philox4x32-10.  Every simulation stream is identified by
(key, stream id):

* key   = the 64-bit master seed, split into two 32-bit words;
* stream id = ``master ^ splitmix64(replica_index)`` (the splitting rule),
  placed in counter words 2 and 3;
* counter words 0 and 1 enumerate the 128-bit blocks within the stream.

``splitmix64`` is a bijection, so distinct replica indices give distinct
stream ids and therefore disjoint counter ranges under the same key:
streams never overlap by construction.  Each block yields two doubles.

The jitted kernels in :mod:`partnersim._kernels` inline the same round
function; this module is the reference implementation and the home of the
known-answer tests' subject.
"""

from __future__ import annotations

import numpy as np
from numba import njit, uint32, uint64

MASK64 = np.uint64(0xFFFFFFFFFFFFFFFF)

_PHILOX_M0 = np.uint64(0xD2511F53)
_PHILOX_M1 = np.uint64(0xCD9E8D57)
_PHILOX_W0 = np.uint32(0x9E3779B9)
_PHILOX_W1 = np.uint32(0xBB67AE85)


@njit(uint64(uint64), cache=True)
def splitmix64(x):
    """Finalizer of the splitmix64 generator (a 64-bit bijection)."""
    z = (x + uint64(0x9E3779B97F4A7C15)) & uint64(0xFFFFFFFFFFFFFFFF)
    z = ((z ^ (z >> uint64(30))) * uint64(0xBF58476D1CE4E5B9)) & uint64(0xFFFFFFFFFFFFFFFF)
    z = ((z ^ (z >> uint64(27))) * uint64(0x94D049BB133111EB)) & uint64(0xFFFFFFFFFFFFFFFF)
    return z ^ (z >> uint64(31))


@njit(cache=True)
def philox4x32(c0, c1, c2, c3, k0, k1):
    """One Philox4x32-10 block: 4 x uint32 counter, 2 x uint32 key -> 4 x uint32."""
    x0 = uint64(c0)
    x1 = uint64(c1)
    x2 = uint64(c2)
    x3 = uint64(c3)
    key0 = uint64(k0)
    key1 = uint64(k1)
    m32 = uint64(0xFFFFFFFF)
    for _ in range(10):
        p0 = (_PHILOX_M0 * x0) & uint64(0xFFFFFFFFFFFFFFFF)
        p1 = (_PHILOX_M1 * x2) & uint64(0xFFFFFFFFFFFFFFFF)
        hi0 = p0 >> uint64(32)
        lo0 = p0 & m32
        hi1 = p1 >> uint64(32)
        lo1 = p1 & m32
        y0 = hi1 ^ x1 ^ key0
        y1 = lo1
        y2 = hi0 ^ x3 ^ key1
        y3 = lo0
        x0, x1, x2, x3 = y0, y1, y2, y3
        key0 = (key0 + uint64(0x9E3779B9)) & m32
        key1 = (key1 + uint64(0xBB67AE85)) & m32
    return uint32(x0), uint32(x1), uint32(x2), uint32(x3)


@njit(cache=True)
def philox_block_u64(n, s_lo, s_hi, k0, k1):
    """Block ``n`` of stream (s_lo, s_hi) under key (k0, k1), as two uint64."""
    c0 = uint32(n & uint64(0xFFFFFFFF))
    c1 = uint32(n >> uint64(32))
    r0, r1, r2, r3 = philox4x32(c0, c1, s_lo, s_hi, k0, k1)
    a = (uint64(r1) << uint64(32)) | uint64(r0)
    b = (uint64(r3) << uint64(32)) | uint64(r2)
    return a, b


def stream_id(master_seed: int, replica: int) -> int:
    """Documented splitting rule: stream id = master ^ splitmix64(replica)."""
    return int(np.uint64(master_seed) ^ splitmix64(np.uint64(replica)))


def stream_words(master_seed: int, replica: int):
    """(s_lo, s_hi, k0, k1) uint32 words for kernel seeding."""
    sid = np.uint64(stream_id(master_seed, replica))
    m = np.uint64(master_seed)
    return (
        np.uint32(sid & np.uint64(0xFFFFFFFF)),
        np.uint32(sid >> np.uint64(32)),
        np.uint32(m & np.uint64(0xFFFFFFFF)),
        np.uint32(m >> np.uint64(32)),
    )


@njit(cache=True)
def u64_to_unit_open(a):
    """uint64 -> double in (0, 1]; safe as an argument of log."""
    return (float(a >> uint64(11)) + 1.0) * (1.0 / 9007199254740992.0)


@njit(cache=True)
def u64_to_unit(a):
    """uint64 -> double in [0, 1)."""
    return float(a >> uint64(11)) * (1.0 / 9007199254740992.0)


class PhiloxStream:
    """Convenience wrapper yielding doubles from one stream (test/reference use)."""

    def __init__(self, master_seed: int, replica: int = 0):
        self.s_lo, self.s_hi, self.k0, self.k1 = stream_words(master_seed, replica)
        self.n = np.uint64(0)
        self._buf: list[np.uint64] = []

    def next_u64(self) -> np.uint64:
        if not self._buf:
            a, b = philox_block_u64(self.n, self.s_lo, self.s_hi, self.k0, self.k1)
            self.n += np.uint64(1)
            self._buf = [np.uint64(a), np.uint64(b)]
        return self._buf.pop(0)

    def uniform(self) -> float:
        return float(u64_to_unit(self.next_u64()))
