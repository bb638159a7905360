"""Monotone matchings between sender blocks and receiver windows.

A matching pairs block indices with window start positions so that block
order is strictly increasing and consecutive windows are disjoint: the next
start must be at least p past the previous one. agree[i, j] says block i is
allowed to pair with the window starting at j. The maximum matching size and
one canonical maximum matching both come from linear DP sweeps, so runtime
is O(blocks * windows) with vectorized rows.
"""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

from .errors import ParameterError


def _check(agree: np.ndarray, p: int) -> None:
    if agree.ndim != 2:
        raise ParameterError("agreement matrix must be 2-d")
    if p < 1:
        raise ParameterError("window length must be positive")


def max_matching_size(agree: np.ndarray, p: int) -> int:
    """Size of a maximum monotone matching."""
    _check(agree, p)
    l, win = agree.shape
    if l == 0 or win == 0:
        return 0
    mask = agree.astype(bool)
    prev = np.zeros(win, dtype=np.int32)
    shifted = np.empty(win, dtype=np.int32)
    for i in range(l):
        if p < win:
            shifted[:p] = 0
            shifted[p:] = prev[:-p]
        else:
            shifted[:] = 0
        cand = np.where(mask[i], shifted + 1, 0)
        np.maximum.accumulate(cand, out=cand)
        np.maximum(prev, cand, out=prev)
    return int(prev[-1])


def _suffix_table(mask: np.ndarray, p: int) -> np.ndarray:
    """suf[i, j] = max matching using blocks >= i and window starts >= j."""
    l, win = mask.shape
    suf = np.zeros((l + 1, win + 1), dtype=np.int32)
    for i in range(l - 1, -1, -1):
        nxt = suf[i + 1]
        # value when block i takes window j: 1 + best using starts >= j+p
        take = np.where(mask[i], nxt[np.minimum(np.arange(win) + p, win)] + 1, 0)
        np.maximum.accumulate(take[::-1], out=take[::-1])
        np.maximum(nxt[:win], take, out=suf[i][:win])
    return suf


def max_matching(agree: np.ndarray, p: int) -> list:
    """One maximum matching as (block, window start) pairs.

    Canonical choice: lexicographically smallest flattened sequence
    (i1, j1, i2, j2, ...) among all maximum matchings, i.e. earliest blocks
    first and the smallest workable window for each.
    """
    _check(agree, p)
    l, win = agree.shape
    if l == 0 or win == 0:
        return []
    mask = agree.astype(bool)
    suf = _suffix_table(mask, p)
    out = []
    j = 0
    need = int(suf[0, 0])
    for i in range(l):
        if need == 0:
            break
        nxt = suf[i + 1]
        limit = np.minimum(np.arange(j, win) + p, win)
        ok = mask[i, j:] & (nxt[limit] + 1 == need)
        hit = np.nonzero(ok)[0]
        if hit.size and int(suf[i, j]) == need:
            jj = j + int(hit[0])
            out.append((i, jj))
            j = jj + p
            need -= 1
            if j >= win:
                break
    return out


def classify_pairs(pairs: Iterable, good: np.ndarray) -> tuple:
    """Split matching pairs into content-verified and spurious ones."""
    good_pairs = []
    bad_pairs = []
    for i, j in pairs:
        if good[i, j]:
            good_pairs.append((i, j))
        else:
            bad_pairs.append((i, j))
    return good_pairs, bad_pairs


def max_bad_only_size(agree: np.ndarray, good: np.ndarray, p: int) -> int:
    """Largest monotone matching that uses only spurious agreements."""
    if agree.shape != good.shape:
        raise ParameterError("matrix shapes differ")
    return max_matching_size(np.asarray(agree, dtype=bool) & ~np.asarray(good, dtype=bool), p)
