"""Buffered unit code for short messages over an insertion/deletion channel.

The message is striped into 16-bit symbols and extended with systematic
Reed-Solomon parity. Every symbol ships inside a slot of four 32-bit units
drawn from a fixed 64-word codebook with pairwise edit distance at least 8;
units are separated by zero buffers of half a unit length. A decoder
re-segments the received stream at long zero runs, maps each surviving unit
back to a stream position by counting buffer strides, groups units into
slots, and checks every slot against an embedded position tag. Slots that
fail to reassemble turn into erasures for the outer code, so the construction
tolerates a constant fraction of edits; the exact fraction is published as
alpha and pinned by measurement, not assumed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .bits import BitString, _ed_kernel
from .config import DEFAULTS, Constants
from .errors import CapacityError, ParameterError, SearchExhaustedError
from .rs import ReedSolomon

SYM_BITS = 16
TAG_BITS = 8
SLOT_BITS = TAG_BITS + SYM_BITS
MAX_RUN = 3       # longest zero run tolerated inside a codebook word
REPAIR_SLACK = 3  # accepted edit distance beyond the observed length drift
LEN_DRIFT = 6     # segments further than this from a unit length are dropped

_U64 = 0xFFFFFFFFFFFFFFFF

# Greedy codebook for the default 32-bit unit: splitmix64 stream from seed 0,
# words filtered to start and end in 1 with internal zero runs <= 3, accepted
# when at least 8 edits away from every earlier word. 731 candidates suffice;
# build_codebook reproduces this tuple and the tests hold it to that.
_CODEBOOK = (
    0xDB4C4F7B, 0xCBE531DF, 0xA71A5EB1, 0xB8BB18FB,
    0x8A8BB259, 0xEE954551, 0xC6589373, 0xBB2DC749,
    0xF4ECF37F, 0xCDC895A9, 0x91D6A7D1, 0xA7CBF6BD,
    0xD4FC75ED, 0xE77DE273, 0xD55DF899, 0xE3ACC5A3,
    0xBD9CDEE5, 0xC57169FB, 0xB7C7534D, 0xEDF98A29,
    0xDAB9CD77, 0xE5CFB767, 0xF8FE99E7, 0xC76CA8CF,
    0xCBDA8DCD, 0x9193499B, 0xDC5EA567, 0x92326B23,
    0x9778DB71, 0x8EB8ABB3, 0xA4B965DF, 0xD5BE9EBB,
    0xF3488FB5, 0x9DF52A49, 0x9D4467B3, 0xBDB392A5,
    0xD5AEAA2D, 0xE7359BA9, 0xDEDAFD6B, 0x95DFD347,
    0x91B34D79, 0xAE45B8D5, 0xBED4FC71, 0x9319727B,
    0x8DF4CC9F, 0x8FC9F445, 0xE391EAE9, 0xFF9A97F3,
    0xF5C88D2B, 0xC466FBFD, 0x9F2EFCF5, 0x9C4DB5F7,
    0xE4579AE7, 0xD59D39DF, 0xF34B7DB1, 0xDC9DAEB3,
    0x8F6B9577, 0xF7372BBF, 0xC4F311BD, 0x8BC7F5B5,
    0x911F3537, 0xC675BE53, 0xF3B362DB, 0xA92D62BF,
)


def _splitmix_stream(seed: int):
    state = seed & _U64
    while True:
        state = (state + 0x9E3779B97F4A7C15) & _U64
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _U64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _U64
        yield z ^ (z >> 31)


def _word_bits(word: int, width: int) -> np.ndarray:
    return np.array(
        [(word >> (width - 1 - i)) & 1 for i in range(width)], dtype=np.uint8)


def _ok_word(word: int, width: int) -> bool:
    if not (word & 1) or not (word >> (width - 1)) & 1:
        return False
    run = 0
    for i in range(width):
        if (word >> i) & 1:
            run = 0
        else:
            run += 1
            if run > MAX_RUN:
                return False
    return True


def build_codebook(width: int, size: int, min_ed: int, seed: int = 0,
                   cap: int = 2_000_000) -> tuple:
    """Greedy codebook: accept candidates min_ed away from all earlier picks."""
    if width < 8 or width > 64:
        raise ParameterError("unit width must be in [8, 64]")
    words = []
    rows = []
    seen = set()
    stream = _splitmix_stream(seed)
    tried = 0
    while len(words) < size and tried < cap:
        w = next(stream) & ((1 << width) - 1)
        tried += 1
        if w in seen:
            continue
        seen.add(w)
        if not _ok_word(w, width):
            continue
        row = _word_bits(w, width)
        if all(int(_ed_kernel(row, r)) >= min_ed for r in rows):
            words.append(w)
            rows.append(row)
    if len(words) < size:
        raise SearchExhaustedError(
            f"codebook search found {len(words)}/{size} words in {cap} tries")
    return tuple(words)


_BOOK_CACHE: dict = {}


def _book_for(consts: Constants) -> tuple:
    """(rows, index) for the configured codebook; rows is a (size, width) array."""
    key = (consts.inner_unit_bits, consts.inner_book_size)
    got = _BOOK_CACHE.get(key)
    if got is not None:
        return got
    if key == (32, 64):
        words = _CODEBOOK
    else:
        words = build_codebook(
            consts.inner_unit_bits, consts.inner_book_size,
            max(2, consts.inner_unit_bits // 4))
    rows = np.stack([_word_bits(w, consts.inner_unit_bits) for w in words])
    index = {w: i for i, w in enumerate(words)}
    got = (rows, index)
    _BOOK_CACHE[key] = got
    return got


@dataclass(frozen=True)
class InnerParams:
    """Geometry of one inner codeword.

    alpha is the guaranteed correctable edit fraction: every edit costs at
    most four errata units against the outer distance of 4*edits + 17, so
    edits + 4 adversarial edits always decode.
    """

    msg_bits: int
    edits: int
    msg_syms: int
    parity_syms: int
    blocks: int
    unit_bits: int
    units_per_slot: int
    buffer_zeros: int
    n0: int

    @property
    def stride(self) -> int:
        return self.unit_bits + self.buffer_zeros

    @property
    def n_units(self) -> int:
        return self.blocks * self.units_per_slot

    @property
    def alpha(self) -> float:
        return (self.parity_syms // 4) / self.n0

    @property
    def distance(self) -> int:
        return self.parity_syms + 1


def inner_params(msg_bits: int, edits: int,
                 consts: Constants = DEFAULTS) -> InnerParams:
    if msg_bits < 1:
        raise ParameterError("message must be non-empty")
    if edits < 1:
        raise ParameterError("edit budget must be positive")
    book_bits = consts.inner_book_size.bit_length() - 1
    if (1 << book_bits) != consts.inner_book_size:
        raise ParameterError("codebook size must be a power of two")
    if SLOT_BITS % book_bits:
        raise ParameterError("codebook size must divide a slot evenly")
    msg_syms = (msg_bits + SYM_BITS - 1) // SYM_BITS
    parity_syms = 4 * edits + 16
    blocks = msg_syms + parity_syms
    if blocks > (1 << SYM_BITS) - 1:
        raise CapacityError("message exceeds the outer field capacity")
    units_per_slot = SLOT_BITS // book_bits
    stride = consts.inner_unit_bits + consts.buffer_zeros
    n0 = consts.buffer_zeros + blocks * units_per_slot * stride
    return InnerParams(
        msg_bits=msg_bits, edits=edits, msg_syms=msg_syms,
        parity_syms=parity_syms, blocks=blocks,
        unit_bits=consts.inner_unit_bits, units_per_slot=units_per_slot,
        buffer_zeros=consts.buffer_zeros, n0=n0)


def _pack_syms(bits: np.ndarray, count: int) -> list:
    padded = np.zeros(count * SYM_BITS, dtype=np.int64)
    padded[: bits.shape[0]] = bits
    rows = padded.reshape(count, SYM_BITS)
    weights = 1 << np.arange(SYM_BITS - 1, -1, -1, dtype=np.int64)
    return [int(v) for v in rows @ weights]


def _unpack_syms(syms: np.ndarray, msg_bits: int) -> np.ndarray:
    shifts = np.arange(SYM_BITS - 1, -1, -1, dtype=np.int64)
    rows = (syms.reshape(-1, 1) >> shifts) & 1
    return rows.astype(np.uint8).ravel()[:msg_bits]


def inner_encode(msg: BitString, edits: int,
                 consts: Constants = DEFAULTS) -> BitString:
    """Inner codeword carrying msg with a tolerance of edits + 4 edits."""
    p = inner_params(msg.len, edits, consts)
    rows, _ = _book_for(consts)
    syms = _pack_syms(msg.bits().astype(np.int64), p.msg_syms)
    rs = ReedSolomon(SYM_BITS, p.distance)
    slot_syms = rs.parity(syms) + syms
    mask = consts.inner_book_size - 1
    book_bits = SLOT_BITS // p.units_per_slot

    out = np.zeros(p.n0, dtype=np.uint8)
    pos = p.buffer_zeros
    for s, sym in enumerate(slot_syms):
        payload = ((s & 0xFF) << SYM_BITS) | int(sym)
        for u in range(p.units_per_slot):
            shift = SLOT_BITS - book_bits * (u + 1)
            out[pos: pos + p.unit_bits] = rows[(payload >> shift) & mask]
            pos += p.stride
    return BitString(out)


def _unit_hits(bits: np.ndarray, p: InnerParams, rows: np.ndarray,
               index: dict, consts: Constants) -> list:
    """(core offset, codebook value) for every segment that reads as a unit.

    Segments are maximal spans between zero runs of run_threshold or more;
    taking them from the positions of one bits strips buffer spill at both
    ends. A segment is accepted on an exact codebook match, or when exactly
    one word sits within length drift + 3 edits; ambiguity is dropped, which
    keeps a handful of edits from ever forging a wrong unit silently.
    """
    ones = np.flatnonzero(bits)
    if ones.shape[0] == 0:
        return []
    breaks = np.flatnonzero(np.diff(ones) > consts.run_threshold)
    starts = np.concatenate(([0], breaks + 1))
    ends = np.concatenate((breaks, [ones.shape[0] - 1]))
    weights = 1 << np.arange(p.unit_bits - 1, -1, -1, dtype=np.int64)

    hits = []
    for si, ei in zip(starts, ends):
        lo = int(ones[si])
        hi = int(ones[ei]) + 1
        length = hi - lo
        if abs(length - p.unit_bits) > LEN_DRIFT:
            continue
        core = bits[lo:hi]
        if length == p.unit_bits:
            val = index.get(int(core.astype(np.int64) @ weights))
            if val is not None:
                hits.append((lo, val))
                continue
        thr = abs(length - p.unit_bits) + REPAIR_SLACK
        best = None
        for v in range(rows.shape[0]):
            if int(_ed_kernel(core, rows[v])) <= thr:
                if best is not None:
                    best = None  # two words in range: ambiguous
                    break
                best = v
        if best is not None:
            hits.append((lo, best))
    return hits


def _assemble(hits: list, p: InnerParams) -> tuple:
    """Best tag-verified slot assignment over anchor and junk-drop choices.

    Unit indices are assigned by counting buffer strides between consecutive
    hits, so a burst of edits only shifts positions locally. The absolute
    anchor of the first hit and the number of leading alien hits (window
    slop from the caller) are recovered by scoring a small candidate grid by
    the number of slots whose embedded tag matches their position.
    """
    book_bits = SLOT_BITS // p.units_per_slot
    best: dict = {}
    best_key = (-1, 0, 0)
    for drop in range(min(4, len(hits))):
        sub = hits[drop:]
        base = int((sub[0][0] - p.buffer_zeros) / p.stride + 0.5)
        for anchor in (0, -1, 1, -2, 2):
            if base + anchor < 0:
                continue
            by_slot: dict = {}
            prev = None
            for off, val in sub:
                if prev is None:
                    cur = base + anchor
                else:
                    cur = prev[1] + max(
                        1, int((off - prev[0]) / p.stride + 0.5))
                if cur >= p.n_units:
                    break
                by_slot.setdefault(cur // p.units_per_slot, {})[
                    cur % p.units_per_slot] = val
                prev = (off, cur)
            verified = {}
            for s, got in by_slot.items():
                if len(got) < p.units_per_slot:
                    continue
                payload = 0
                for u in range(p.units_per_slot):
                    payload = (payload << book_bits) | got[u]
                if payload >> SYM_BITS == s & 0xFF:
                    verified[s] = payload & ((1 << SYM_BITS) - 1)
            key = (len(verified), -drop, -abs(anchor))
            if key > best_key:
                best_key = key
                best = verified
    return best, best_key[0]


def inner_decode(window: BitString, msg_bits: int, edits: int,
                 consts: Constants = DEFAULTS,
                 stats: Optional[dict] = None) -> Optional[BitString]:
    """Recover the message from a window holding the damaged codeword.

    Returns None when the outer code reports more damage than it can fix;
    that cannot happen while the window is within edits + 4 edits of the
    codeword. Extra alien bits at the window edges count toward that budget.
    """
    p = inner_params(msg_bits, edits, consts)
    rows, index = _book_for(consts)
    hits = _unit_hits(window.bits(), p, rows, index, consts)
    verified, score = _assemble(hits, p)

    msg = [0] * p.msg_syms
    erasures = []
    for i in range(p.msg_syms):
        got = verified.get(p.parity_syms + i)
        if got is None:
            erasures.append(i)
        else:
            msg[i] = got
    parity = [verified.get(s, 0) for s in range(p.parity_syms)]
    parity_missing = sum(1 for s in range(p.parity_syms) if s not in verified)
    if stats is not None:
        stats["unit_hits"] = len(hits)
        stats["verified_slots"] = score
        stats["msg_erasures"] = len(erasures)
        stats["parity_missing"] = parity_missing

    # Missing parity is zero-filled, which the outer code cannot tell from a
    # received zero, so price each hole as a potential error up front. This
    # keeps a wiped-out stream from sliding through as the all-zero codeword.
    if 2 * parity_missing + len(erasures) >= p.distance:
        return None
    got = ReedSolomon(SYM_BITS, p.distance).correct(msg, parity, erasures)
    if got is None:
        return None
    return BitString(_unpack_syms(got, msg_bits))


__all__ = [
    "InnerParams",
    "build_codebook",
    "inner_decode",
    "inner_encode",
    "inner_params",
]
