"""Pattern partitions, string regularity checks, and window-hash levels.

The randomized protocol needs three regularities of the sender's string:
pattern occurrences ("split points") in every long interval, a well-spaced
("chosen") split point soon after every split point, and all width-B windows
pairwise distinct. This module checks the properties, derives the partition
and its entry set, expands the per-level window hashes with their
self-audit, and searches mask seeds that force the properties on hostile
inputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import Constants, DEFAULTS
from .errors import ParameterError, PropertyError, SearchExhaustedError
from .kwise import KWiseGen, KWiseParams, seed_length

MIN_LENGTH = 64


def ceil_log2(v: int) -> int:
    if v < 1:
        raise ParameterError("value must be positive")
    return (v - 1).bit_length()


def isqrt_ceil(v: int) -> int:
    import math

    r = math.isqrt(v)
    return r if r * r == v else r + 1


@dataclass(frozen=True)
class StageParams:
    """Geometry shared by both sides of the randomized protocol."""

    n: int
    s: int  # pattern length
    b_pre: int  # prefix width B
    b1: int  # property-1 interval length
    b2: int  # property-2 interval length
    max_block: int  # cap on any block length while properties hold
    len_bits: int
    m_set: int  # reconciliation field exponent

    @property
    def gap(self) -> int:
        return (1 << self.s) // 2


def stage_params(n: int) -> StageParams:
    if n < MIN_LENGTH:
        raise ParameterError(f"length {n} below minimum {MIN_LENGTH}")
    lg = ceil_log2(n)
    s = ceil_log2(lg) + 3
    b_pre = 3 * lg
    if (1 << s) // 2 <= b_pre:
        raise ParameterError("prefix width exceeds the split-point spacing")
    b1 = s * (1 << s) * lg
    b2 = (1 << s) * lg
    # first boundary can sit two property intervals in, so lengths can reach
    # twice the adjacent-boundary bound before a property has to fail
    max_block = min(n, 2 * (b1 + b2))
    len_bits = ceil_log2(max_block + 1)
    return StageParams(n, s, b_pre, b1, b2, max_block, len_bits, len_bits + 2 * b_pre)


def pack_windows(bits: np.ndarray, width: int) -> np.ndarray:
    """Every width-window of bits packed LSB-first into an int64."""
    if width > 62:
        raise ParameterError("window width exceeds 62")
    n = bits.shape[0]
    if n < width:
        return np.zeros(0, dtype=np.int64)
    view = np.lib.stride_tricks.sliding_window_view(bits, width)
    lo_w = min(width, 31)
    weights_lo = (1.0 * 2 ** np.arange(lo_w)).astype(np.float64)
    out = (view[:, :lo_w].astype(np.float64) @ weights_lo).astype(np.int64)
    if width > lo_w:
        weights_hi = (1.0 * 2 ** np.arange(width - lo_w)).astype(np.float64)
        hi = (view[:, lo_w:].astype(np.float64) @ weights_hi).astype(np.int64)
        out |= hi << lo_w
    return out


def split_points(bits: np.ndarray, s: int) -> np.ndarray:
    """0-indexed positions where the marker pattern 1 0^(s-1) occurs."""
    n = bits.shape[0]
    if n < s:
        return np.zeros(0, dtype=np.int64)
    view = np.lib.stride_tricks.sliding_window_view(bits, s)
    hits = view[:, 0] == 1
    if s > 1:
        hits &= ~view[:, 1:].any(axis=1)
    return np.nonzero(hits)[0].astype(np.int64)


def chosen_points(bits: np.ndarray, sp: StageParams) -> np.ndarray:
    """Split points whose next split point is more than 2^s/2 away.

    Points too close to the end are dropped so every block keeps at least
    one full prefix ahead of it.
    """
    pts = split_points(bits, sp.s)
    if pts.size == 0:
        return pts
    nxt = np.empty_like(pts)
    nxt[:-1] = pts[1:]
    nxt[-1] = np.int64(1) << 62
    keep = (nxt - pts) > sp.gap
    keep &= (bits.shape[0] - pts) >= sp.gap
    return pts[keep]


@dataclass(frozen=True)
class PropertyReport:
    interval_coverage: bool  # every b1-interval holds a split point
    chosen_near_split: bool  # every b2-interval from a split point holds a chosen one
    windows_distinct: bool  # all B-windows pairwise distinct
    n_split: int
    n_chosen: int

    @property
    def ok(self) -> bool:
        return self.interval_coverage and self.chosen_near_split and self.windows_distinct


def check_properties(bits: np.ndarray, sp: StageParams) -> PropertyReport:
    n = bits.shape[0]
    pts = split_points(bits, sp.s)
    chosen = chosen_points(bits, sp)

    if sp.b1 >= n:
        p1 = True
    elif pts.size == 0:
        p1 = False
    else:
        bounds = np.concatenate(([np.int64(-1)], pts, [np.int64(n)]))
        p1 = bool((np.diff(bounds) - 1).max() < sp.b1)

    if pts.size == 0:
        p2 = True
    elif chosen.size == 0:
        p2 = not bool((pts + sp.b2 <= n).any())
    else:
        idx = np.searchsorted(chosen, pts)
        nxt_chosen = np.where(idx < chosen.size, chosen[np.minimum(idx, chosen.size - 1)], np.int64(1) << 62)
        in_range = pts + sp.b2 <= n
        p2 = bool(np.all(~in_range | (nxt_chosen < pts + sp.b2)))

    keys = pack_windows(bits, sp.b_pre)
    distinct = bool(np.unique(keys).size == keys.size)
    return PropertyReport(p1, p2, distinct, int(pts.size), int(chosen.size))


@dataclass(frozen=True)
class Partition:
    starts: np.ndarray  # 0-indexed block starts; starts[0] == 0
    lens: np.ndarray


def build_partition(bits: np.ndarray, sp: StageParams) -> Partition:
    """Blocks bounded by the chosen points, skipping the first one.

    The first block always starts at the string head; the first chosen point
    falls inside it. With no or one chosen point the whole string is one
    block.
    """
    n = bits.shape[0]
    chosen = chosen_points(bits, sp)
    if chosen.size <= 1:
        starts = np.zeros(1, dtype=np.int64)
    else:
        starts = np.concatenate(([np.int64(0)], chosen[1:]))
    lens = np.diff(np.concatenate((starts, [np.int64(n)])))
    return Partition(starts, lens)


def entry_set(bits: np.ndarray, part: Partition, sp: StageParams) -> set:
    """Packed (length, prefix, next prefix) records for adjacent blocks."""
    n_blocks = part.starts.size
    if n_blocks < 2:
        return set()
    keys = pack_windows(bits, sp.b_pre)
    pre = keys[part.starts]
    lens = part.lens
    if int(lens[:-1].max(initial=0)) > sp.max_block:
        raise PropertyError("block length exceeds the property bound")
    out = set()
    shift1 = sp.len_bits
    shift2 = sp.len_bits + sp.b_pre
    for b in range(n_blocks - 1):
        out.add(int(lens[b]) | int(pre[b]) << shift1 | int(pre[b + 1]) << shift2)
    return out


def unpack_entry(v: int, sp: StageParams) -> tuple:
    mask_len = (1 << sp.len_bits) - 1
    mask_pre = (1 << sp.b_pre) - 1
    return v & mask_len, (v >> sp.len_bits) & mask_pre, (v >> (sp.len_bits + sp.b_pre)) & mask_pre


# -- stage II window-hash levels -------------------------------------------


@dataclass(frozen=True)
class SyncLevel:
    level: int
    t_len: int  # block length
    group: int  # hash values per parity symbol
    r_bits: int  # hash width
    n_blocks: int
    base: int  # offset into the shared generator stream


def sync_levels(n: int, sp: StageParams, consts: Constants = DEFAULTS, r_extra: int = 0):
    """Level geometry (pad length, levels) for the matching stage."""
    t1 = 7 * sp.b_pre
    t2 = sp.b_pre
    n_pad = ((n + t1 - 1) // t1) * t1
    root = isqrt_ceil(ceil_log2(n))
    levels = []
    base = 0
    g1 = (min(n, sp.b1 + sp.b2) + t1 - 1) // t1
    for lvl, (t_len, group) in enumerate(((t1, g1), (t2, 7)), start=1):
        # width follows the audited table size: expected spurious
        # agreements ~ blocks * windows / 2^r, kept well under the cell cap
        table = ceil_log2((n_pad // t_len) * n_pad)
        r = max(root, table - 4) + 4 * r_extra
        if r > 62:
            raise ParameterError("hash width exceeds 62")
        levels.append(SyncLevel(lvl, t_len, group, r, n_pad // t_len, base))
        base += r * sp.b_pre
    return n_pad, levels


def sync_gen_params(levels, sp: StageParams, n_pad: int, consts: Constants = DEFAULTS) -> KWiseParams:
    total = sum(lv.r_bits * sp.b_pre for lv in levels)
    r_max = max(lv.r_bits for lv in levels)
    eps_exp = 2 * r_max + ceil_log2(n_pad) + consts.eps_margin
    return seed_length(ceil_log2(total), 2 * sp.b_pre, eps_exp)


def expand_matrices(gen: KWiseGen, seed: int, levels, sp: StageParams) -> list:
    """Per-level R x B hash matrices drawn from the generator stream."""
    out = []
    for lv in levels:
        raw = gen.bits_range(seed, lv.base, lv.r_bits * sp.b_pre)
        out.append(raw.reshape(lv.r_bits, sp.b_pre))
    return out


def hash_packed(win: np.ndarray, matrix: np.ndarray) -> np.ndarray:
    """M w packed to an int for every packed input in win.

    Inputs and matrix widths fit an int64, so each output bit is one
    AND-popcount.
    """
    b = matrix.shape[1]
    masks = (matrix.astype(np.int64) * (np.int64(1) << np.arange(b, dtype=np.int64))).sum(axis=1)
    par = np.bitwise_count((win[None, :] & masks[:, None]).astype(np.uint64)).astype(np.int64) & 1
    weights = np.int64(1) << np.arange(matrix.shape[0], dtype=np.int64)
    return (par * weights[:, None]).sum(axis=0)


def window_hash_ints(bits: np.ndarray, matrix: np.ndarray, win: np.ndarray = None) -> np.ndarray:
    """Hash of every window start; packed windows may be shared across seeds."""
    if win is None:
        win = pack_windows(bits, matrix.shape[1])
    return hash_packed(win, matrix)


def _zero_extended(bits: np.ndarray, start: int, length: int) -> np.ndarray:
    """length bits from start, reading past the end as zeros."""
    piece = bits[start : start + length]
    if piece.shape[0] == length:
        return piece
    return np.concatenate(
        [piece, np.zeros(length - piece.shape[0], dtype=bits.dtype)]
    )


def audit_sync(
    x_pad: np.ndarray,
    lv: SyncLevel,
    matrix: np.ndarray,
    consts: Constants = DEFAULTS,
    win: np.ndarray = None,
) -> bool:
    """No spurious self-agreement survives near any block or in a tight pair.

    Agreements where the window content equals the block content are fine
    pairs and exempt (the padding tail repeats, so these exist off the
    diagonal); both strings are treated as followed by zeros, the same
    convention the receiver fills with. Among the rest, a single agreement
    close to its own block, or a monotone pair with combined span below the
    threshold, would admit a small dense matching, so the seed is rejected.
    """
    t = lv.t_len
    b = matrix.shape[1]
    if win is None:
        win = pack_windows(x_pad, b)
    w = window_hash_ints(x_pad, matrix, win)
    blocks_h = w[:: t][: lv.n_blocks]
    agree = blocks_h[:, None] == w[None, :]
    rows, us = np.nonzero(agree)
    if rows.size > 4 * lv.n_blocks + 4096:
        return False  # degenerate matrix, no point inspecting cells
    keep = np.ones(rows.size, dtype=bool)
    for i in range(rows.size):
        t0 = int(rows[i]) * t
        u0 = int(us[i])
        keep[i] = not np.array_equal(
            _zero_extended(x_pad, u0, t), _zero_extended(x_pad, t0, t)
        )
    rows = rows[keep]
    us = us[keep]
    if rows.size == 0:
        return True
    # size-1 matchings: agreement within the near band of its own block
    if bool((np.abs(us - rows * t) <= consts.sync_band * t).any()):
        return False
    # size >= 2 matchings, by pigeonhole on consecutive matched cells
    if rows.size > consts.sync_cell_cap:
        return False
    order = np.lexsort((us, rows))
    rr = rows[order]
    uu = us[order]
    for i in range(rr.size):
        for j in range(i + 1, rr.size):
            if rr[j] > rr[i] and uu[j] > uu[i]:
                span = (rr[j] - rr[i]) + (uu[j] - uu[i]) / t
                if span <= consts.sync_span:
                    return False
    return True


def find_sync_seed(x_pad: np.ndarray, n: int, sp: StageParams, consts: Constants = DEFAULTS):
    """Smallest (r_extra, seed) whose matrices pass every level audit.

    The audited window set includes the zero extension the receiver matches
    against, so agreements with the appended-zero region are inspected too.
    """
    _, levels0 = sync_levels(n, sp, consts)
    x_ext = np.concatenate(
        [x_pad, np.zeros(levels0[0].t_len, dtype=x_pad.dtype)]
    )
    win = pack_windows(x_ext, sp.b_pre)
    for r_extra in (0, 1, 2):
        n_pad, levels = sync_levels(n, sp, consts, r_extra)
        params = sync_gen_params(levels, sp, n_pad, consts)
        gen = KWiseGen(params)
        cap = min(consts.search_cap, 1 << params.seed_len)
        for seed in range(cap):
            mats = expand_matrices(gen, seed, levels, sp)
            if all(audit_sync(x_ext, lv, m, consts, win) for lv, m in zip(levels, mats)):
                return r_extra, seed, levels, mats, params
    raise SearchExhaustedError("no window-hash seed passed the audit")


# -- mask search -------------------------------------------------------------


def mask_params(n: int, sp: StageParams, consts: Constants = DEFAULTS) -> KWiseParams:
    return seed_length(
        ceil_log2(n),
        consts.mask_kappa_coeff * sp.b_pre,
        consts.mask_kappa_coeff * sp.b_pre + consts.eps_margin,
    )


def expand_mask(n: int, params: KWiseParams, seed: int) -> np.ndarray:
    gen = KWiseGen(params)
    return gen.bits_range(seed, 0, n)


@dataclass(frozen=True)
class MaskSearch:
    seed: int
    tried: int
    fail_coverage: int
    fail_chosen: int
    fail_distinct: int


def find_mask(bits: np.ndarray, sp: StageParams, consts: Constants = DEFAULTS) -> MaskSearch:
    """First seed whose mask gives the string all three properties."""
    params = mask_params(bits.shape[0], sp, consts)
    cap = min(consts.mask_search_cap, 1 << params.seed_len)
    f1 = f2 = f3 = 0
    for seed in range(cap):
        masked = bits ^ expand_mask(bits.shape[0], params, seed)
        rep = check_properties(masked, sp)
        if rep.ok:
            return MaskSearch(seed, seed + 1, f1, f2, f3)
        f1 += not rep.interval_coverage
        f2 += not rep.chosen_near_split
        f3 += not rep.windows_distinct
    raise SearchExhaustedError(f"no mask seed passed within {cap} tries")


__all__ = [
    "MaskSearch",
    "Partition",
    "PropertyReport",
    "StageParams",
    "SyncLevel",
    "audit_sync",
    "build_partition",
    "check_properties",
    "chosen_points",
    "entry_set",
    "expand_mask",
    "expand_matrices",
    "find_mask",
    "find_sync_seed",
    "hash_packed",
    "mask_params",
    "pack_windows",
    "split_points",
    "stage_params",
    "sync_gen_params",
    "sync_levels",
    "unpack_entry",
    "window_hash_ints",
]
