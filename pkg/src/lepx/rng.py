"""Counter-based random bits: Philox4x64-10 keyed by (master seed, sample index).

The block function is bit-compatible with ``numpy.random.Philox`` so the
compiled stream can be checked against numpy: the ``j``-th 256-bit block of
stream ``(seed, index)`` equals numpy's output for
``Philox(key=[seed, index], counter=0)`` after ``j`` blocks.
"""

from __future__ import annotations

import numba as nb
import numpy as np

_M0 = np.uint64(0xD2E7470EE14C6C93)
_M1 = np.uint64(0xCA5A826395121157)
_W0 = np.uint64(0x9E3779B97F4A7C15)
_W1 = np.uint64(0xBB67AE8584CAA73B)
_LO32 = np.uint64(0xFFFFFFFF)
_S32 = np.uint64(32)


@nb.njit(cache=True, inline="always")
def _mulhilo(a, b):
    a_lo = a & _LO32
    a_hi = a >> _S32
    b_lo = b & _LO32
    b_hi = b >> _S32
    ll = a_lo * b_lo
    hl = a_hi * b_lo
    lh = a_lo * b_hi
    hh = a_hi * b_hi
    cross = (ll >> _S32) + (hl & _LO32) + lh
    hi = hh + (hl >> _S32) + (cross >> _S32)
    return hi, a * b


@nb.njit(cache=True)
def philox_block(k0, k1, c0, c1, c2, c3, out):
    """Write the four 64-bit words of Philox4x64-10 at counter (c0..c3)."""
    for _ in range(10):
        hi0, lo0 = _mulhilo(_M0, c0)
        hi1, lo1 = _mulhilo(_M1, c2)
        c0, c1, c2, c3 = hi1 ^ c1 ^ k0, lo1, hi0 ^ c3 ^ k1, lo0
        k0 = k0 + _W0
        k1 = k1 + _W1
    out[0] = c0
    out[1] = c1
    out[2] = c2
    out[3] = c3


def stream_words(seed: int, index: int, n_words: int) -> np.ndarray:
    """First ``n_words`` 64-bit words of stream (seed, index)."""
    # pass unsigned scalars: numba types Python ints >= 2^63 as overflow
    return _stream_words(np.uint64(seed), np.uint64(index), n_words)


@nb.njit(cache=True)
def _stream_words(seed, index, n_words):
    out = np.empty(n_words, dtype=np.uint64)
    buf = np.empty(4, dtype=np.uint64)
    k0 = np.uint64(seed)
    k1 = np.uint64(index)
    j = 0
    block = np.uint64(0)
    while j < n_words:
        block += np.uint64(1)
        philox_block(k0, k1, block, np.uint64(0), np.uint64(0), np.uint64(0), buf)
        for i in range(4):
            if j < n_words:
                out[j] = buf[i]
                j += 1
    return out


class RngStream:
    """Fair bits for one sample, a pure function of (master_seed, sample_index).

    Python-side twin of the compiled stream, used by the reference
    implementations and tests.  Bits are consumed least significant first
    from successive 64-bit words.
    """

    def __init__(self, master_seed: int, sample_index: int):
        self.master_seed = int(master_seed) & 0xFFFFFFFFFFFFFFFF
        self.sample_index = int(sample_index) & 0xFFFFFFFFFFFFFFFF
        self.counter = 0
        self._words = np.empty(0, dtype=np.uint64)

    def bit(self) -> int:
        w, b = divmod(self.counter, 64)
        if w >= len(self._words):
            self._words = stream_words(self.master_seed, self.sample_index, 2 * w + 4)
        self.counter += 1
        return int((int(self._words[w]) >> b) & 1)
