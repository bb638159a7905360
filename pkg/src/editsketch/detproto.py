"""Deterministic sketches that survive up to k insertions and deletions.

The sender splits its padded string into aligned blocks over a halving
schedule of levels, audits one shared generator seed until every level's
hash family is collision-free on the string itself, and ships the level-1
hash values verbatim plus redundancy for the deeper values and the final
content blocks. The receiver slides each level's hash over its own string,
matches windows to blocks monotonically, predicts child values from parent
candidates, and lets the redundancy repair the few positions an edit can
disturb. Sketch size depends only on (n, k, constants), never on content.
"""

from dataclasses import dataclass
from math import isqrt
from typing import Optional

import numpy as np

from .bits import BitReader, BitString, BitWriter
from .blockhash import HashFamily, LevelParams, find_seed
from .config import DEFAULTS, Constants
from .errors import ParameterError, SearchExhaustedError
from .kwise import KWiseGen, KWiseParams
from .matching import max_matching
from .rs import HEADER_BITS, StripedCodec, read_parity_block

MAGIC = b"DXS1"
# magic + n:u64 + k:u64 + pad_len:u32 + level count:u8
FILE_HEADER_BITS = 32 + 64 + 64 + 32 + 8
# seed bit count:u16 + p:u32 + q:u16 + m:u32 + eps num/den:u32 each
DESC_BITS = 16 + 32 + 16 + 32 + 32 + 32
VARIANT_VERBATIM = 0
VARIANT_PARITY = 1


def ceil_log2(v: int) -> int:
    """Smallest e >= 0 with 2^e >= v."""
    if v < 1:
        raise ParameterError("ceil_log2 needs a positive argument")
    return (v - 1).bit_length()


def ceil_log2_ratio(n: int, k: int) -> int:
    """Smallest e >= 0 with 2^e * k >= n."""
    e = 0
    while (k << e) < n:
        e += 1
    return e


def is_verbatim_size(n: int, k: int, consts: Constants) -> bool:
    """Strings this short ship whole; hashing would cost more than it saves."""
    return k * consts.degenerate_den > n * consts.degenerate_num


@dataclass(frozen=True)
class Schedule:
    """Everything the sender derives from (n, k, constants)."""

    n: int
    k: int
    n_pad: int
    pad_len: int
    levels: tuple
    gen_params: KWiseParams
    m: int

    @property
    def value_distance(self) -> int:
        return 14 * self.k + 1

    @property
    def content_distance(self) -> int:
        return 8 * self.k + 1


def _level_q(l: int, n_pad: int, c_q: int) -> int:
    return ceil_log2(l * n_pad) + c_q


def _eps_pair(q: int) -> tuple:
    # pinned inverse: q == ceil(2*log2(den)) + 4
    return 1, isqrt(1 << (q - 4))


def build_schedule(n: int, k: int, consts: Constants = DEFAULTS,
                   q_extra: int = 0) -> Schedule:
    """Block sizes, hash widths, and generator sizing for one sketch."""
    if n < 1:
        raise ParameterError("string length must be positive")
    if k < 1:
        raise ParameterError("edit budget must be positive")
    if is_verbatim_size(n, k, consts):
        raise ParameterError("verbatim-size inputs have no schedule")

    b1 = 1 << max(0, (max(n // (6 * k), 1)).bit_length() - 1)
    b1 = min(max(b1, consts.b1_floor), consts.b1_cap)
    l1 = -(-n // b1)
    n_pad = l1 * b1

    stop = consts.c_L * ceil_log2_ratio(n, k)
    blocks = [b1]
    while blocks[-1] > stop and blocks[-1] > 1:
        blocks.append(blocks[-1] // 2)

    levels = []
    base = 0
    for i, p in enumerate(blocks):
        l = n_pad // p
        q = _level_q(l, n_pad, consts.c_q) + q_extra
        num, den = _eps_pair(q)
        lp = LevelParams(level=i + 1, p=p, l=l, q=q,
                         eps_num=num, eps_den=den, m=0, base=base)
        levels.append(lp)
        base += lp.bits_needed

    q1 = levels[0].q
    m = max(1, -(-(consts.c_m * ceil_log2(n_pad)) // q1))
    l_max = levels[-1].l
    eps_exp = q1 * m + m * ceil_log2(l_max * n_pad) + consts.eps_margin
    domain_bits = ceil_log2(base)
    m_field = domain_bits + eps_exp + 1
    gen_params = KWiseParams(domain_bits=domain_bits, kappa=2 * q1 * m,
                             eps_exp=eps_exp, m_field=m_field,
                             seed_len=2 * m_field)
    levels = tuple(
        LevelParams(level=lp.level, p=lp.p, l=lp.l, q=lp.q,
                    eps_num=lp.eps_num, eps_den=lp.eps_den,
                    m=m, base=lp.base)
        for lp in levels
    )
    return Schedule(n=n, k=k, n_pad=n_pad, pad_len=n_pad - n,
                    levels=levels, gen_params=gen_params, m=m)


def _value_codec(lp: LevelParams, distance: int) -> StripedCodec:
    return StripedCodec(sym_bits=lp.q, length=lp.l, distance=distance)


def _content_codec(lp: LevelParams, distance: int) -> StripedCodec:
    return StripedCodec(sym_bits=lp.p, length=lp.l, distance=distance)


def _variant_bits(verbatim_bits: int, codec: StripedCodec) -> tuple:
    """(tag, section bits) for the cheaper of verbatim and parity."""
    parity_bits = HEADER_BITS + codec.parity_bits
    if verbatim_bits <= parity_bits:
        return VARIANT_VERBATIM, 8 + verbatim_bits
    return VARIANT_PARITY, 8 + parity_bits


def _floor_bits(n: int, k: int, consts: Constants) -> int:
    target = consts.pad_coeff * k * ceil_log2_ratio(n, k) * ceil_log2(n)
    return int(-(-target // 1)) if target > 0 else 0


def sketch_size_bits(n: int, k: int, consts: Constants = DEFAULTS) -> int:
    """Exact serialized size in bits, byte-aligned; content-independent."""
    if is_verbatim_size(n, k, consts):
        bits = FILE_HEADER_BITS + n
        return -(-bits // 8) * 8
    sched = build_schedule(n, k, consts)
    bits = FILE_HEADER_BITS
    for i, lp in enumerate(sched.levels):
        bits += DESC_BITS
        if i == 0:
            bits += sched.gen_params.seed_len
        else:
            _, section = _variant_bits(
                lp.l * lp.q, _value_codec(lp, sched.value_distance))
            bits += section
    bits += sched.levels[0].l * sched.levels[0].q
    last = sched.levels[-1]
    _, section = _variant_bits(
        sched.n_pad, _content_codec(last, sched.content_distance))
    bits += section
    bits = max(bits, _floor_bits(n, k, consts))
    return -(-bits // 8) * 8


def _pack_rows(rows: np.ndarray) -> list:
    """Each row of bits becomes one int, LSB-first."""
    out = []
    for row in rows:
        packed = np.packbits(row, bitorder="little").tobytes()
        out.append(int.from_bytes(packed, "little"))
    return out


def _unpack_syms(syms, width: int) -> np.ndarray:
    rows = np.empty((len(syms), width), dtype=np.uint8)
    for i, v in enumerate(syms):
        raw = int(v).to_bytes((width + 7) // 8, "little")
        rows[i] = np.unpackbits(np.frombuffer(raw, dtype=np.uint8),
                                bitorder="little")[:width]
    return rows


def _write_pad(bw: BitWriter, bits: int) -> None:
    while bits >= 32:
        bw.write(0, 32)
        bits -= 32
    if bits:
        bw.write(0, bits)


def _seed_for(padded: np.ndarray, gen: KWiseGen, levels,
              consts: Constants) -> Optional[int]:
    cap = min(consts.search_cap, 1 << gen.params.seed_len)
    return find_seed(padded, gen, levels, cap)


def sketch(x: BitString, k: int, consts: Constants = DEFAULTS) -> bytes:
    """Build the sketch of x against an edit budget of k."""
    n = x.len
    if n < 1:
        raise ParameterError("string must be non-empty")
    if k < 1:
        raise ParameterError("edit budget must be positive")

    bw = BitWriter()
    for byte in MAGIC:
        bw.write(byte, 8)
    bw.write(n, 64)
    bw.write(k, 64)

    if is_verbatim_size(n, k, consts):
        bw.write(0, 32)
        bw.write(0, 8)
        bw.write_bits(x.bits())
        return bw.getvalue()

    sched = None
    seed = None
    for q_extra in (0, 1):
        sched = build_schedule(n, k, consts, q_extra=q_extra)
        padded = np.concatenate(
            [x.bits(), np.zeros(sched.pad_len, dtype=np.uint8)])
        gen = KWiseGen(sched.gen_params)
        seed = _seed_for(padded, gen, sched.levels, consts)
        if seed is not None:
            break
    if seed is None:
        raise SearchExhaustedError(
            "no generator seed passed the hash audit within the search cap")

    bw.write(sched.pad_len, 32)
    bw.write(len(sched.levels), 8)

    fams = [HashFamily(gen, seed, lp) for lp in sched.levels]
    for i, (lp, fam) in enumerate(zip(sched.levels, fams)):
        d = sched.gen_params.seed_len if i == 0 else 0
        bw.write(d, 16)
        if d:
            bw.write(seed, d)
        bw.write(lp.p, 32)
        bw.write(lp.q, 16)
        bw.write(lp.m, 32)
        bw.write(lp.eps_num, 32)
        bw.write(lp.eps_den, 32)
        if i == 0:
            continue
        values = fam.block_values(padded)
        codec = _value_codec(lp, sched.value_distance)
        tag, _ = _variant_bits(lp.l * lp.q, codec)
        bw.write(tag, 8)
        if tag == VARIANT_VERBATIM:
            for v in values:
                bw.write(int(v), lp.q)
        else:
            codec.write_parity(bw, [int(v) for v in values])

    v1 = fams[0].block_values(padded)
    for v in v1:
        bw.write(int(v), sched.levels[0].q)

    last = sched.levels[-1]
    content = _pack_rows(padded.reshape(last.l, last.p))
    codec = _content_codec(last, sched.content_distance)
    tag, _ = _variant_bits(sched.n_pad, codec)
    bw.write(tag, 8)
    if tag == VARIANT_VERBATIM:
        for v in content:
            bw.write(v, last.p)
    else:
        codec.write_parity(bw, content)

    _write_pad(bw, max(0, _floor_bits(n, k, consts) - bw.bit_length))
    return bw.getvalue()


@dataclass
class ParsedSketch:
    """Receiver-side view; rebuilt from bytes alone, no shared constants."""

    n: int
    k: int
    pad_len: int
    levels: tuple
    seed: int
    gen_params: Optional[KWiseParams]
    v1: Optional[np.ndarray]
    zs: tuple       # per level >= 2: ("verbatim", values) | ("parity", codec, parity)
    z_final: Optional[tuple]
    verbatim_x: Optional[BitString]

    @property
    def n_pad(self) -> int:
        return self.n + self.pad_len


def parse_sketch(data: bytes) -> ParsedSketch:
    br = BitReader(data)
    for byte in MAGIC:
        if br.read(8) != byte:
            raise ParameterError("bad sketch magic")
    n = br.read(64)
    k = br.read(64)
    pad_len = br.read(32)
    count = br.read(8)
    if n < 1 or k < 1:
        raise ParameterError("corrupt sketch header")

    if count == 0:
        if pad_len != 0:
            raise ParameterError("verbatim sketch cannot carry padding")
        x = BitString(br.read_bits(n))
        return ParsedSketch(n=n, k=k, pad_len=0, levels=(), seed=0,
                            gen_params=None, v1=None, zs=(), z_final=None,
                            verbatim_x=x)

    n_pad = n + pad_len
    levels = []
    zs = []
    seed = None
    seed_len = None
    base = 0
    for i in range(count):
        d = br.read(16)
        if i == 0:
            if d < 2 or d % 2:
                raise ParameterError("corrupt seed descriptor")
            seed_len = d
            seed = br.read(d)
        elif d != 0:
            raise ParameterError("only the first level carries the seed")
        p = br.read(32)
        q = br.read(16)
        m = br.read(32)
        num = br.read(32)
        den = br.read(32)
        if p < 1 or q < 1 or den < 1 or n_pad % p:
            raise ParameterError("corrupt level descriptor")
        if levels and levels[-1].p != 2 * p:
            raise ParameterError("level block sizes must halve")
        lp = LevelParams(level=i + 1, p=p, l=n_pad // p, q=q,
                         eps_num=num, eps_den=den, m=m, base=base)
        base += lp.bits_needed
        levels.append(lp)
        if i == 0:
            continue
        tag = br.read(8)
        if tag == VARIANT_VERBATIM:
            vals = np.array([br.read(lp.q) for _ in range(lp.l)],
                            dtype=np.int64)
            zs.append(("verbatim", vals))
        elif tag == VARIANT_PARITY:
            codec, parity = read_parity_block(br, lp.q)
            if codec.length != lp.l:
                raise ParameterError("value parity length mismatch")
            zs.append(("parity", codec, parity))
        else:
            raise ParameterError("unknown redundancy variant")

    q1 = levels[0].q
    v1 = np.array([br.read(q1) for _ in range(levels[0].l)], dtype=np.int64)

    last = levels[-1]
    tag = br.read(8)
    if tag == VARIANT_VERBATIM:
        content = [br.read(last.p) for _ in range(last.l)]
        z_final = ("verbatim", content)
    elif tag == VARIANT_PARITY:
        codec, parity = read_parity_block(br, last.p)
        if codec.length != last.l:
            raise ParameterError("content parity length mismatch")
        z_final = ("parity", codec, parity)
    else:
        raise ParameterError("unknown redundancy variant")

    m_field = seed_len // 2
    domain_bits = ceil_log2(base)
    eps_exp = m_field - domain_bits - 1
    if eps_exp < 1:
        raise ParameterError("seed too short for the level geometry")
    gen_params = KWiseParams(domain_bits=domain_bits,
                             kappa=2 * q1 * levels[0].m,
                             eps_exp=eps_exp, m_field=m_field,
                             seed_len=seed_len)
    return ParsedSketch(n=n, k=k, pad_len=pad_len, levels=tuple(levels),
                        seed=seed, gen_params=gen_params, v1=v1,
                        zs=tuple(zs), z_final=z_final, verbatim_x=None)


def _stats_level(stats, lp, pairs, cand, known, true_padded):
    if stats is None:
        return
    entry = {"level": lp.level, "l": lp.l, "p": lp.p, "matched": len(pairs)}
    if true_padded is not None:
        blocks = true_padded.reshape(lp.l, lp.p)
        bad = 0
        for j, _ in pairs:
            if not np.array_equal(cand[j], blocks[j]):
                bad += 1
        entry["bad"] = bad
    stats.setdefault("levels", []).append(entry)


def recover(y: BitString, data: bytes, true_x: Optional[BitString] = None,
            stats: Optional[dict] = None) -> Optional[BitString]:
    """Reconstruct the sender's string from the receiver's copy and a sketch.

    Returns None when the redundancy reports more damage than it can fix,
    which cannot happen while the true edit distance stays within the
    sketch's budget. true_x and stats only feed instrumentation.
    """
    ps = parse_sketch(data)
    if ps.verbatim_x is not None:
        return ps.verbatim_x
    if stats is not None:
        stats["seed"] = ps.seed

    true_padded = None
    if true_x is not None:
        true_padded = np.concatenate(
            [true_x.bits(), np.zeros(ps.pad_len, dtype=np.uint8)])

    y_bits = y.bits()
    gen = KWiseGen(ps.gen_params)
    cand = None
    known = None
    for i, lp in enumerate(ps.levels):
        fam = HashFamily(gen, ps.seed, lp)
        if i == 0:
            v = ps.v1
        else:
            child_cand = cand.reshape(lp.l, lp.p)
            child_known = np.repeat(known, 2)
            z = ps.zs[i - 1]
            if z[0] == "verbatim":
                v = z[1]
            else:
                _, codec, parity = z
                pred = fam.hash_contents(child_cand, np.arange(lp.l))
                erasures = np.nonzero(~child_known)[0]
                if stats is not None and true_padded is not None:
                    true_v = fam.block_values(true_padded)
                    wrong = int(np.sum((pred != true_v) & child_known))
                    stats.setdefault("value_errors", []).append(wrong)
                got = codec.correct([int(t) for t in pred], parity,
                                    [int(e) for e in erasures])
                if got is None:
                    return None
                v = np.array(got, dtype=np.int64)
        targets = v ^ fam.offsets
        wb = fam.window_buckets(y_bits)
        agree = targets[:, None] == wb[None, :]
        pairs = max_matching(agree, lp.p)
        cand = np.zeros((lp.l, lp.p), dtype=np.uint8)
        known = np.zeros(lp.l, dtype=bool)
        for j, t in pairs:
            cand[j] = y_bits[t:t + lp.p]
            known[j] = True
        _stats_level(stats, lp, pairs, cand, known, true_padded)

    last = ps.levels[-1]
    syms = _pack_rows(cand)
    if ps.z_final[0] == "verbatim":
        content = ps.z_final[1]
    else:
        _, codec, parity = ps.z_final
        erasures = np.nonzero(~known)[0]
        if stats is not None:
            stats["final_erasures"] = len(erasures)
        content = codec.correct(syms, parity, [int(e) for e in erasures])
        if content is None:
            return None
    bits = _unpack_syms(content, last.p).reshape(-1)
    return BitString(bits[:ps.n])
