"""Affine block hashing with batched window evaluation and seed audits.

Each protocol level hashes p-bit blocks to q-bit buckets through one shared
GF(2) matrix M plus a per-block offset: h_j(v) = M v xor P_j. Every bit of
M and P comes from the small-bias generator at a level-tagged index, so one
seed integer determines every level's family. Window buckets M w for all
sliding windows of a string come from exact FFT cross-correlation, one
transform per matrix row, which is what makes sender audits and receiver
matching affordable at every grid scale.

The audit accepts a seed only when the hash has zero spurious agreements on
the sender's own string: no block bucket may equal the bucket of any window
whose content differs. Downstream this pins the count of content-bad matched
pairs during recovery to at most the number of edit-touched windows.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .bits import BitString
from .errors import ParameterError, SearchExhaustedError
from .kwise import KWiseGen, KWiseParams


def _next_pow2(v: int) -> int:
    n = 1
    while n < v:
        n <<= 1
    return n


def batch_correlate(seq: np.ndarray, rows: np.ndarray) -> np.ndarray:
    """Exact integer sliding correlation of each row against seq.

    out[r, t] = sum_c rows[r, c] * seq[t + c] for every window start t.
    Entries must be small integers; float64 keeps counts exact far beyond
    the magnitudes used here (|values| <= 1, window <= 2^11, fft <= 2^16).
    """
    seq = np.asarray(seq, dtype=np.float64)
    rows = np.atleast_2d(np.asarray(rows, dtype=np.float64))
    n = seq.shape[0]
    p = rows.shape[1]
    if p == 0 or n < p:
        return np.zeros((rows.shape[0], max(0, n - p + 1)), dtype=np.int64)
    size = _next_pow2(n + p)
    fs = np.fft.rfft(seq, size)
    fr = np.fft.rfft(rows[:, ::-1], size, axis=1)
    full = np.fft.irfft(fr * fs[None, :], size, axis=1)
    out = np.rint(full[:, p - 1 : n]).astype(np.int64)
    return out


@dataclass(frozen=True)
class LevelParams:
    """Geometry of one hashing level inside a shared generator index space."""

    level: int      # 1-based
    p: int          # block length in bits
    l: int          # number of blocks
    q: int          # bucket bits
    eps_num: int
    eps_den: int
    m: int          # independence budget record
    base: int       # first generator index of this level's bit region

    @property
    def bits_needed(self) -> int:
        return self.q * self.p + self.l * self.q


_EXPANSION_CACHE: dict = {}


class HashFamily:
    """One level's hash family, expanded lazily from (generator, seed)."""

    def __init__(self, gen: KWiseGen, seed: int, lp: LevelParams):
        self.gen = gen
        self.seed = seed
        self.lp = lp
        key = (gen.params, seed, lp.base, lp.p, lp.q, lp.l)
        cached = _EXPANSION_CACHE.get(key)
        if cached is None:
            raw = gen.bits_range(seed, lp.base, lp.bits_needed)
            matrix = raw[: lp.q * lp.p].reshape(lp.q, lp.p)
            offs = raw[lp.q * lp.p :].reshape(lp.l, lp.q)
            weights = (np.int64(1) << np.arange(lp.q, dtype=np.int64))
            offsets = (offs.astype(np.int64) * weights).sum(axis=1)
            cached = (matrix, offsets)
            if len(_EXPANSION_CACHE) > 4096:
                _EXPANSION_CACHE.clear()
            _EXPANSION_CACHE[key] = cached
        self._matrix, self._offsets = cached

    @property
    def matrix(self) -> np.ndarray:
        """M as a (q, p) 0/1 array."""
        return self._matrix

    @property
    def offsets(self) -> np.ndarray:
        """P_j packed to ints, LSB-first in row order, shape (l,)."""
        return self._offsets

    def window_buckets(self, bits: np.ndarray) -> np.ndarray:
        """M w packed to an int per window start of bits."""
        counts = batch_correlate(bits, self._matrix) & 1
        weights = (np.int64(1) << np.arange(self.lp.q, dtype=np.int64))
        return (counts.astype(np.int64) * weights[:, None]).sum(axis=0)

    def block_buckets(self, padded: np.ndarray) -> np.ndarray:
        """M x_j for the l aligned blocks of the padded string."""
        lp = self.lp
        if padded.shape[0] != lp.l * lp.p:
            raise ParameterError("padded length does not match level geometry")
        blocks = padded.reshape(lp.l, lp.p)
        counts = (self._matrix[None, :, :] @ blocks[:, :, None].astype(np.int64))[:, :, 0] & 1
        weights = (np.int64(1) << np.arange(lp.q, dtype=np.int64))
        return (counts * weights[None, :]).sum(axis=1)

    def block_values(self, padded: np.ndarray) -> np.ndarray:
        """h_j(x_j) = bucket xor offset, the symbols the sketch protects."""
        return self.block_buckets(padded) ^ self._offsets

    def hash_contents(self, contents: np.ndarray, index: np.ndarray) -> np.ndarray:
        """h_index[r](contents[r]) for candidate rows; contents is (r, p) bits."""
        counts = (self._matrix[None, :, :] @ contents[:, :, None].astype(np.int64))[:, :, 0] & 1
        weights = (np.int64(1) << np.arange(self.lp.q, dtype=np.int64))
        buckets = (counts * weights[None, :]).sum(axis=1)
        return buckets ^ self._offsets[np.asarray(index, dtype=np.int64)]


def good_matrix(padded: np.ndarray, other: np.ndarray, p: int) -> np.ndarray:
    """good[j, t]: does the window of other at t equal block j of padded."""
    l = padded.shape[0] // p
    blocks = padded[: l * p].reshape(l, p)
    pm_rows = blocks.astype(np.int64) * 2 - 1
    pm_seq = np.asarray(other, dtype=np.int64) * 2 - 1
    counts = batch_correlate(pm_seq, pm_rows)
    return counts == p


def audit_level(
    padded: np.ndarray,
    fam: HashFamily,
    good: Optional[np.ndarray] = None,
) -> bool:
    """True iff the family has zero spurious self-agreements on padded."""
    wb = fam.window_buckets(padded)
    bb = fam.block_buckets(padded)
    agree = bb[:, None] == wb[None, :]
    if good is None:
        good = good_matrix(padded, padded, fam.lp.p)
    return not bool(np.any(agree & ~good))


def find_seed(
    padded: np.ndarray,
    gen: KWiseGen,
    levels: Sequence[LevelParams],
    search_cap: int,
) -> Optional[int]:
    """Smallest seed whose every level passes the audit; None if capped out."""
    goods: dict = {}  # seed-independent, so shared across the whole search
    for u in range(search_cap):
        ok = True
        for lp in levels:
            if lp.p not in goods:
                goods[lp.p] = good_matrix(padded, padded, lp.p)
            if not audit_level(padded, HashFamily(gen, u, lp), goods[lp.p]):
                ok = False
                break
        if ok:
            return u
    return None
