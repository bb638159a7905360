"""Document-exchange sketches for strings with the split-point regularities.

The sender partitions its string at well-spaced pattern occurrences, ships a
set-reconciliation sketch of the adjacent-block records, then audits shared
window-hash matrices over two block scales and ships each scale's block
values (verbatim or as parity, whichever is smaller) plus content parity
over the finest blocks. The receiver reconciles the record set against its
own partition, chains the records back into the sender's block layout, fills
blocks that match a unique local block, and then per scale corrects its
predicted hash values, matches windows monotonically, and refills; the
content parity repairs what is left. Inputs must pass the three regularity
checks; masking arbitrary inputs into shape is the caller's job.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .bits import BitReader, BitString, BitWriter
from .config import Constants, DEFAULTS
from .errors import ParameterError, PropertyError
from .kwise import KWiseGen, KWiseParams
from .matching import max_matching
from .pinsketch import PinSketch
from .rs import HEADER_BITS, StripedCodec, read_parity_block
from .syncfam import (
    StageParams,
    build_partition,
    ceil_log2,
    check_properties,
    entry_set,
    expand_matrices,
    find_sync_seed,
    hash_packed,
    pack_windows,
    stage_params,
    sync_levels,
    unpack_entry,
)

MAGIC = b"DXR1"
# magic + n:u64 + k:u64 + s:u8 + B:u16 + len_bits:u8 + m_set:u16
FILE_HEADER_BITS = 32 + 64 + 64 + 8 + 16 + 8 + 16
VARIANT_VERBATIM = 0
VARIANT_PARITY = 1


def _pack_prefix_rows(rows: np.ndarray) -> np.ndarray:
    """Each row of bits packed LSB-first into an int64; width <= 62."""
    b = rows.shape[1]
    if b > 62:
        raise ParameterError("row width exceeds 62")
    lo_w = min(b, 31)
    weights_lo = (1.0 * 2 ** np.arange(lo_w)).astype(np.float64)
    out = (rows[:, :lo_w].astype(np.float64) @ weights_lo).astype(np.int64)
    if b > lo_w:
        weights_hi = (1.0 * 2 ** np.arange(b - lo_w)).astype(np.float64)
        out |= (rows[:, lo_w:].astype(np.float64) @ weights_hi).astype(np.int64) << lo_w
    return out


def _group_symbols(values: np.ndarray, group: int, r_bits: int) -> list:
    """Pack each run of group values into one wide symbol, zero padded."""
    n_sym = -(-values.shape[0] // group)
    padded = np.zeros(n_sym * group, dtype=np.int64)
    padded[: values.shape[0]] = values
    out = []
    for j in range(n_sym):
        v = 0
        for i in range(group):
            v |= int(padded[j * group + i]) << (i * r_bits)
        out.append(v)
    return out


def _ungroup_symbols(syms, group: int, r_bits: int, count: int) -> np.ndarray:
    mask = (1 << r_bits) - 1
    out = np.zeros(count, dtype=np.int64)
    for j, s in enumerate(syms):
        for i in range(group):
            idx = j * group + i
            if idx < count:
                out[idx] = (int(s) >> (i * r_bits)) & mask
    return out


def _value_codec(lv, k: int, consts: Constants) -> StripedCodec:
    n_sym = -(-lv.n_blocks // lv.group)
    return StripedCodec(
        sym_bits=lv.group * lv.r_bits,
        length=n_sym,
        distance=consts.zi_coeff * k + 1,
    )


def _content_codec(lv, k: int, consts: Constants) -> StripedCodec:
    return StripedCodec(
        sym_bits=lv.t_len,
        length=lv.n_blocks,
        distance=consts.zx_coeff * k + 1,
    )


def _variant_bits(verbatim_bits: int, codec: StripedCodec) -> tuple:
    parity_bits = HEADER_BITS + codec.parity_bits
    if verbatim_bits <= parity_bits:
        return VARIANT_VERBATIM, 8 + verbatim_bits
    return VARIANT_PARITY, 8 + parity_bits


def _floor_bits(n: int, k: int, consts: Constants) -> int:
    target = consts.rand_pad_coeff * k * ceil_log2(n)
    return int(-(-target // 1)) if target > 0 else 0


def _write_pad(bw: BitWriter, bits: int) -> None:
    while bits >= 32:
        bw.write(0, 32)
        bits -= 32
    if bits:
        bw.write(0, bits)


def sketch(x: BitString, k: int, consts: Constants = DEFAULTS) -> bytes:
    """Sketch of x against an edit budget of k; x must pass the checks."""
    n = x.len
    if k < 1:
        raise ParameterError("edit budget must be positive")
    sp = stage_params(n)
    bits = x.bits().astype(np.int8)
    if not check_properties(bits, sp).ok:
        raise PropertyError("input fails a regularity check; mask it first")

    part = build_partition(bits, sp)
    entries = entry_set(bits, part, sp)
    ps = PinSketch(sp.m_set, 4 * k)
    z_v = ps.sketch(entries)

    n_pad, _ = sync_levels(n, sp, consts)
    x_pad = np.concatenate([bits, np.zeros(n_pad - n, dtype=np.int8)])
    r_extra, seed, levels, mats, gen_params = find_sync_seed(x_pad, n, sp, consts)

    bw = BitWriter()
    for byte in MAGIC:
        bw.write(byte, 8)
    bw.write(n, 64)
    bw.write(k, 64)
    bw.write(sp.s, 8)
    bw.write(sp.b_pre, 16)
    bw.write(sp.len_bits, 8)
    bw.write(sp.m_set, 16)

    bw.write(4 * k, 16)
    for v in z_v:
        bw.write(int(v), sp.m_set)

    bw.write(r_extra, 8)
    bw.write(gen_params.seed_len, 16)
    bw.write(seed, gen_params.seed_len)
    bw.write(len(levels), 8)

    win = pack_windows(x_pad, sp.b_pre)
    for lv, mat in zip(levels, mats):
        values = hash_packed(win, mat)[:: lv.t_len][: lv.n_blocks]
        bw.write(lv.t_len, 32)
        bw.write(lv.group, 16)
        bw.write(lv.r_bits, 16)
        bw.write(lv.n_blocks, 32)
        codec = _value_codec(lv, k, consts)
        tag, _ = _variant_bits(lv.n_blocks * lv.r_bits, codec)
        bw.write(tag, 8)
        if tag == VARIANT_VERBATIM:
            for v in values:
                bw.write(int(v), lv.r_bits)
        else:
            codec.write_parity(bw, _group_symbols(values, lv.group, lv.r_bits))

    last = levels[-1]
    content = _pack_prefix_rows(x_pad.reshape(last.n_blocks, last.t_len))
    codec = _content_codec(last, k, consts)
    tag, _ = _variant_bits(n_pad, codec)
    bw.write(tag, 8)
    if tag == VARIANT_VERBATIM:
        for v in content:
            bw.write(int(v), last.t_len)
    else:
        codec.write_parity(bw, [int(v) for v in content])

    _write_pad(bw, max(0, _floor_bits(n, k, consts) - bw.bit_length))
    return bw.getvalue()


@dataclass
class ParsedRandSketch:
    """Receiver-side view; rebuilt from bytes alone, no shared constants."""

    n: int
    k: int
    sp: StageParams
    zv_t: int
    z_v: list
    r_extra: int
    seed: int
    gen_params: KWiseParams
    levels: tuple
    zs: tuple       # per level: ("verbatim", values) | ("parity", codec, parity)
    z_final: tuple

    @property
    def n_pad(self) -> int:
        return self.levels[0].n_blocks * self.levels[0].t_len


def parse_sketch(data: bytes) -> ParsedRandSketch:
    br = BitReader(data)
    for byte in MAGIC:
        if br.read(8) != byte:
            raise ParameterError("bad sketch magic")
    n = br.read(64)
    k = br.read(64)
    sp = stage_params(n)
    if (br.read(8), br.read(16)) != (sp.s, sp.b_pre):
        raise ParameterError("geometry fields disagree with the length")
    if (br.read(8), br.read(16)) != (sp.len_bits, sp.m_set):
        raise ParameterError("record width fields disagree with the length")
    if k < 1:
        raise ParameterError("corrupt sketch header")

    zv_t = br.read(16)
    z_v = [br.read(sp.m_set) for _ in range(zv_t)]

    r_extra = br.read(8)
    seed_len = br.read(16)
    seed = br.read(seed_len)
    count = br.read(8)
    n_pad, levels = sync_levels(n, sp, r_extra=r_extra)
    if count != len(levels):
        raise ParameterError("level count disagrees with the geometry")

    zs = []
    for lv in levels:
        got = (br.read(32), br.read(16), br.read(16), br.read(32))
        if got != (lv.t_len, lv.group, lv.r_bits, lv.n_blocks):
            raise ParameterError("level descriptor disagrees with the geometry")
        tag = br.read(8)
        if tag == VARIANT_VERBATIM:
            vals = np.array(
                [br.read(lv.r_bits) for _ in range(lv.n_blocks)], dtype=np.int64
            )
            zs.append(("verbatim", vals))
        elif tag == VARIANT_PARITY:
            codec, parity = read_parity_block(br, lv.group * lv.r_bits)
            if codec.length != -(-lv.n_blocks // lv.group):
                raise ParameterError("value parity length mismatch")
            zs.append(("parity", codec, parity))
        else:
            raise ParameterError("unknown redundancy variant")

    last = levels[-1]
    tag = br.read(8)
    if tag == VARIANT_VERBATIM:
        content = [br.read(last.t_len) for _ in range(last.n_blocks)]
        z_final = ("verbatim", content)
    elif tag == VARIANT_PARITY:
        codec, parity = read_parity_block(br, last.t_len)
        if codec.length != last.n_blocks:
            raise ParameterError("content parity length mismatch")
        z_final = ("parity", codec, parity)
    else:
        raise ParameterError("unknown redundancy variant")

    if seed_len < 2 or seed_len % 2:
        raise ParameterError("corrupt seed descriptor")
    m_field = seed_len // 2
    total = sum(lv.r_bits * sp.b_pre for lv in levels)
    domain_bits = ceil_log2(total)
    eps_exp = m_field - domain_bits - 1
    if eps_exp < 1:
        raise ParameterError("seed too short for the level geometry")
    gen_params = KWiseParams(
        domain_bits=domain_bits,
        kappa=2 * sp.b_pre,
        eps_exp=eps_exp,
        m_field=m_field,
        seed_len=seed_len,
    )
    return ParsedRandSketch(
        n=n, k=k, sp=sp, zv_t=zv_t, z_v=z_v, r_extra=r_extra, seed=seed,
        gen_params=gen_params, levels=levels, zs=tuple(zs), z_final=z_final,
    )


def _receiver_entries(y_bits: np.ndarray, sp: StageParams) -> set:
    """Adjacent-block records of the receiver's own partition.

    Records whose length field would not fit are dropped; such blocks span
    an edit, so they already count against the reconciliation budget.
    """
    part = build_partition(y_bits, sp)
    n_blocks = part.starts.size
    if n_blocks < 2:
        return set()
    keys = pack_windows(y_bits, sp.b_pre)
    pre = keys[part.starts]
    out = set()
    shift1 = sp.len_bits
    shift2 = sp.len_bits + sp.b_pre
    for b in range(n_blocks - 1):
        if int(part.lens[b]) > sp.max_block:
            continue
        out.add(int(part.lens[b]) | int(pre[b]) << shift1 | int(pre[b + 1]) << shift2)
    return out


def _chain_layout(v: set, n: int, sp: StageParams) -> Optional[tuple]:
    """Block (start, length, prefix) triple lists recovered from the records.

    The head block is the unique record whose prefix is nobody's successor;
    following successor prefixes orders the rest. The final block has no
    record of its own: its length is the remainder and its prefix is the
    last record's successor field. None whenever the chain is ambiguous.
    """
    if not v:
        return None
    triples = [unpack_entry(e, sp) for e in v]
    by_pre = {}
    for t in triples:
        if t[1] in by_pre:
            return None
        by_pre[t[1]] = t
    nxt_set = {t[2] for t in triples}
    heads = [t for t in triples if t[1] not in nxt_set]
    if len(heads) != 1:
        return None
    lens = []
    prefixes = []
    cur = heads[0]
    seen = 0
    while True:
        lens.append(cur[0])
        prefixes.append(cur[1])
        seen += 1
        nxt = by_pre.get(cur[2])
        if nxt is None:
            break
        cur = nxt
    if seen != len(triples):
        return None
    tail = n - sum(lens)
    if tail < 1:
        return None
    lens.append(tail)
    prefixes.append(cur[2])
    starts = np.concatenate(([0], np.cumsum(lens[:-1]))).astype(np.int64)
    return starts, np.array(lens, dtype=np.int64), prefixes


def _fill_stage1(
    x_tilde: np.ndarray,
    known: np.ndarray,
    layout: tuple,
    y_bits: np.ndarray,
    sp: StageParams,
) -> int:
    """Copy uniquely keyed receiver blocks into the layout; count fills."""
    starts, lens, prefixes = layout
    y_part = build_partition(y_bits, sp)
    y_keys = pack_windows(y_bits, sp.b_pre)
    catalog = {}
    for b in range(y_part.starts.size):
        key = (int(y_keys[y_part.starts[b]]), int(y_part.lens[b]))
        catalog[key] = None if key in catalog else int(y_part.starts[b])
    filled = 0
    for b in range(starts.size):
        s0 = int(starts[b])
        length = int(lens[b])
        src = catalog.get((prefixes[b], length))
        if src is not None:
            x_tilde[s0 : s0 + length] = y_bits[src : src + length]
            known[s0 : s0 + length] = True
            filled += 1
        else:
            # the prefix itself is authoritative either way
            width = min(sp.b_pre, length)
            for j in range(width):
                x_tilde[s0 + j] = (prefixes[b] >> j) & 1
            known[s0 : s0 + width] = True
    return filled


def recover(
    y: BitString,
    data: bytes,
    true_x: Optional[BitString] = None,
    stats: Optional[dict] = None,
) -> Optional[BitString]:
    """Reconstruct the sender's string from the receiver's copy and a sketch.

    Returns None when reconciliation or any parity reports more damage than
    it can fix, which cannot happen while the true edit distance stays
    within the sketch's budget. true_x and stats only feed instrumentation.
    """
    psk = parse_sketch(data)
    sp = psk.sp
    n = psk.n
    n_pad = psk.n_pad
    y_bits = y.bits().astype(np.int8)

    ps = PinSketch(sp.m_set, psk.zv_t)
    own_entries = _receiver_entries(y_bits, sp)
    diff = ps.decode(ps.combine(ps.sketch(own_entries), psk.z_v))
    if diff is None:
        return None
    v = own_entries ^ diff
    for e in v:
        length = e & ((1 << sp.len_bits) - 1)
        if not (1 <= length <= sp.max_block):
            return None
    if stats is not None:
        stats["set_diff"] = len(diff)

    x_tilde = np.zeros(n_pad, dtype=np.int8)
    known = np.zeros(n_pad, dtype=bool)
    known[n:] = True  # the pad is zeros by construction
    layout = _chain_layout(v, n, sp)
    if v and layout is None:
        return None
    if layout is not None:
        filled = _fill_stage1(x_tilde, known, layout, y_bits, sp)
        if stats is not None:
            stats["stage1_blocks"] = layout[0].size
            stats["stage1_filled"] = filled

    gen = KWiseGen(psk.gen_params)
    mats = expand_matrices(gen, psk.seed, psk.levels, sp)
    y_ext = np.concatenate([y_bits, np.zeros(psk.levels[0].t_len, dtype=np.int8)])
    win_y = pack_windows(y_ext, sp.b_pre)

    true_pad = None
    if true_x is not None:
        true_pad = np.concatenate(
            [true_x.bits().astype(np.int8), np.zeros(n_pad - true_x.len, dtype=np.int8)]
        )

    for lv, mat, z in zip(psk.levels, mats, psk.zs):
        t = lv.t_len
        if z[0] == "verbatim":
            values = z[1]
        else:
            _, codec, parity = z
            starts = np.arange(lv.n_blocks, dtype=np.int64) * t
            pref_known = np.array(
                [bool(known[s : s + sp.b_pre].all()) for s in starts]
            )
            rows = np.stack([x_tilde[s : s + sp.b_pre] for s in starts])
            cand = hash_packed(_pack_prefix_rows(rows), mat)
            cand[~pref_known] = 0
            syms = _group_symbols(cand, lv.group, lv.r_bits)
            # zero padded value slots count as known zeros on both sides
            group_known = np.ones(codec.length * lv.group, dtype=bool)
            group_known[: lv.n_blocks] = pref_known
            erased = np.nonzero(
                ~group_known.reshape(codec.length, lv.group).all(axis=1)
            )[0]
            got = codec.correct(syms, parity, [int(e) for e in erased])
            if got is None:
                return None
            if stats is not None:
                hole = set(int(e) for e in erased)
                errs = sum(
                    int(got[i]) != int(syms[i])
                    for i in range(len(syms))
                    if i not in hole
                )
                stats.setdefault("value_errors", []).append(errs)
                stats.setdefault("value_erasures", []).append(len(hole))
            values = _ungroup_symbols(got, lv.group, lv.r_bits, lv.n_blocks)
        w_y = hash_packed(win_y, mat)
        agree = values[:, None] == w_y[None, :]
        pairs = max_matching(agree, t)
        bad = 0
        for tt, u in pairs:
            x_tilde[tt * t : (tt + 1) * t] = y_ext[u : u + t]
            known[tt * t : (tt + 1) * t] = True
            if true_pad is not None and not np.array_equal(
                y_ext[u : u + t], true_pad[tt * t : (tt + 1) * t]
            ):
                bad += 1
        x_tilde[n:] = 0
        known[n:] = True
        if stats is not None:
            stats.setdefault("levels", []).append(
                {"level": lv.level, "matched": len(pairs), "bad": bad,
                 "blocks": lv.n_blocks}
            )

    last = psk.levels[-1]
    if psk.z_final[0] == "verbatim":
        content = psk.z_final[1]
    else:
        _, codec, parity = psk.z_final
        syms = _pack_prefix_rows(x_tilde.reshape(last.n_blocks, last.t_len))
        erased = np.nonzero(
            ~known.reshape(last.n_blocks, last.t_len).all(axis=1)
        )[0]
        if stats is not None:
            stats["final_erasures"] = int(erased.size)
        content = codec.correct(
            [int(v) for v in syms], parity, [int(e) for e in erased]
        )
        if content is None:
            return None
        if stats is not None:
            hole = set(int(e) for e in erased)
            stats["final_errors"] = sum(
                int(content[i]) != int(syms[i])
                for i in range(len(content))
                if i not in hole
            )

    out = np.zeros(n_pad, dtype=np.uint8)
    for j, v in enumerate(content):
        v = int(v)
        for i in range(last.t_len):
            out[j * last.t_len + i] = (v >> i) & 1
    return BitString(out[:n])


__all__ = [
    "MAGIC",
    "ParsedRandSketch",
    "parse_sketch",
    "recover",
    "sketch",
]
