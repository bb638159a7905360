"""Tests for the split-point protocol: sketching, parsing, and recovery."""

import numpy as np
import pytest

from editsketch import randproto
from editsketch.bits import BitString, adversarial_channel, edit_distance
from editsketch.config import DEFAULTS, Constants
from editsketch.errors import ParameterError, PropertyError
from editsketch.randproto import (
    _chain_layout,
    _group_symbols,
    _pack_prefix_rows,
    _ungroup_symbols,
    parse_sketch,
    recover,
    sketch,
)
from editsketch.syncfam import (
    build_partition,
    expand_mask,
    find_mask,
    mask_params,
    stage_params,
)


def conforming_string(n, seed):
    """Random strings at these lengths essentially always pass the checks."""
    rng = np.random.default_rng(seed)
    for _ in range(20):
        x = BitString.random(n, rng)
        sp = stage_params(n)
        from editsketch.syncfam import check_properties

        if check_properties(x.bits().astype(np.int8), sp).ok:
            return x
    raise AssertionError("no conforming string found")


def test_pack_prefix_rows_matches_bit_oracle():
    rng = np.random.default_rng(0)
    rows = rng.integers(0, 2, size=(7, 45)).astype(np.int8)
    got = _pack_prefix_rows(rows)
    for i in range(7):
        want = sum(int(rows[i, j]) << j for j in range(45))
        assert int(got[i]) == want
    with pytest.raises(ParameterError):
        _pack_prefix_rows(np.zeros((2, 63), dtype=np.int8))


def test_group_symbols_round_trip():
    rng = np.random.default_rng(1)
    values = rng.integers(0, 1 << 20, size=23).astype(np.int64)
    syms = _group_symbols(values, 7, 20)
    assert len(syms) == 4  # ceil(23 / 7)
    back = _ungroup_symbols(syms, 7, 20, 23)
    assert np.array_equal(back, values)
    # padding slots really are zero
    assert _ungroup_symbols(syms, 7, 20, 28)[23:].tolist() == [0] * 5


def test_sketch_rejects_nonconforming_input():
    with pytest.raises(PropertyError):
        sketch(BitString.zeros(4096), 2)
    with pytest.raises(ParameterError):
        sketch(conforming_string(4096, 2), 0)


def test_sketch_magic_and_parse_round_trip():
    x = conforming_string(4096, 3)
    data = sketch(x, 2)
    assert data[:4] == b"DXR1"
    ps = parse_sketch(data)
    sp = stage_params(4096)
    assert ps.n == 4096 and ps.k == 2
    assert ps.sp == sp
    assert ps.zv_t == 8 and len(ps.z_v) == 8
    assert len(ps.levels) == 2
    assert ps.n_pad >= 4096
    assert ps.gen_params.seed_len == 2 * ps.gen_params.m_field
    # both value sections and the content section carry a known variant
    for z in ps.zs:
        assert z[0] in ("verbatim", "parity")
    assert ps.z_final[0] in ("verbatim", "parity")


def test_sketch_is_deterministic():
    x = conforming_string(4096, 4)
    assert sketch(x, 2) == sketch(x, 2)


def test_parse_rejects_malformed_input():
    data = sketch(conforming_string(4096, 5), 1)
    with pytest.raises(ParameterError):
        parse_sketch(b"NOPE" + data[4:])
    with pytest.raises(ParameterError):
        parse_sketch(data[:40])
    # header n tampered: geometry fields no longer agree
    bad = bytearray(data)
    bad[4] ^= 0xFF
    with pytest.raises(ParameterError):
        parse_sketch(bytes(bad))


def test_chain_layout_orders_records():
    sp = stage_params(4096)
    # blocks of lengths 100, 200, rest; prefixes 5, 9, 13
    shift1, shift2 = sp.len_bits, sp.len_bits + sp.b_pre
    v = {
        100 | 5 << shift1 | 9 << shift2,
        200 | 9 << shift1 | 13 << shift2,
    }
    starts, lens, prefixes = _chain_layout(v, 4096, sp)
    assert starts.tolist() == [0, 100, 300]
    assert lens.tolist() == [100, 200, 3796]
    assert prefixes == [5, 9, 13]


def test_chain_layout_rejects_ambiguity():
    sp = stage_params(4096)
    shift1, shift2 = sp.len_bits, sp.len_bits + sp.b_pre
    assert _chain_layout(set(), 4096, sp) is None
    # duplicate start prefix
    v = {100 | 5 << shift1 | 9 << shift2, 200 | 5 << shift1 | 13 << shift2}
    assert _chain_layout(v, 4096, sp) is None
    # two heads (broken chain)
    v = {100 | 5 << shift1 | 9 << shift2, 200 | 13 << shift1 | 17 << shift2}
    assert _chain_layout(v, 4096, sp) is None
    # cycle: nothing qualifies as the head
    v = {100 | 5 << shift1 | 9 << shift2, 200 | 9 << shift1 | 5 << shift2}
    assert _chain_layout(v, 4096, sp) is None
    # lengths overrun the string
    v = {4000 | 5 << shift1 | 9 << shift2, 200 | 9 << shift1 | 13 << shift2}
    assert _chain_layout(v, 4096, sp) is None


def test_recovery_with_no_edits():
    x = conforming_string(4096, 6)
    assert recover(x, sketch(x, 1)) == x


@pytest.mark.parametrize("strategy", ["random", "prefix_del", "suffix_ins",
                                      "block_shift", "worst_seeded"])
@pytest.mark.parametrize("n,k", [(4096, 1), (4096, 4), (8192, 2)])
def test_recovery_across_strategies(n, k, strategy):
    for trial in range(2):
        x = conforming_string(n, n * 31 + k + trial)
        data = sketch(x, k)
        y = adversarial_channel(x, k, strategy, trial + 17)
        assert edit_distance(x, y) <= k
        assert recover(y, data) == x


def test_recovery_instrumentation():
    x = conforming_string(16384, 7)
    data = sketch(x, 4)
    y = adversarial_channel(x, 4, "random", 23)
    stats = {}
    assert recover(y, data, true_x=x, stats=stats) == x
    assert stats["set_diff"] <= 16
    assert stats["stage1_filled"] <= stats["stage1_blocks"]
    assert len(stats["levels"]) == 2
    for entry in stats["levels"]:
        assert entry["bad"] <= 5 * 4
        assert 0 <= entry["matched"] <= entry["blocks"]
    assert stats.get("final_erasures", 0) <= stats["levels"][-1]["blocks"]


def test_recovery_never_crashes_on_hostile_receiver_string():
    rng = np.random.default_rng(8)
    x = conforming_string(4096, 9)
    data = sketch(x, 2)
    ones = BitString(np.ones(4096, dtype=np.uint8))
    for y in (BitString.zeros(1), BitString.zeros(4096),
              BitString.random(5000, rng), ones, x):
        got = recover(y, data)
        assert got is None or got == x or isinstance(got, BitString)


def test_recovery_far_out_of_budget_is_none_or_right():
    x = conforming_string(4096, 10)
    data = sketch(x, 1)
    y = adversarial_channel(x, 300, "random", 11)
    got = recover(y, data)
    assert got is None or got == x


def test_masked_string_round_trips():
    # all-zeros fails the checks; a mask repairs it and the sketch applies
    n = 4096
    zero = np.zeros(n, dtype=np.int8)
    sp = stage_params(n)
    search = find_mask(zero, sp)
    mask = expand_mask(n, mask_params(n, sp), search.seed)
    masked = BitString((zero ^ mask).astype(np.uint8))
    data = sketch(masked, 2)
    y = adversarial_channel(masked, 2, "random", 12)
    assert recover(y, data) == masked


def test_padding_floor_is_ignored_by_recovery():
    consts = Constants(rand_pad_coeff=500.0)
    x = conforming_string(4096, 13)
    data = sketch(x, 2, consts)
    assert len(data) * 8 >= 500.0 * 2 * 12
    y = adversarial_channel(x, 2, "block_shift", 14)
    # receiver reads the same bytes with default constants
    assert recover(y, data) == x


def test_receiver_entries_skip_oversized_blocks():
    n = 1 << 17
    sp = stage_params(n)
    bits = np.zeros(n, dtype=np.int8)
    positions = (8, sp.max_block + 11672)
    for pos in positions:
        bits[pos] = 1  # pattern 1 0^{s-1} at each position
    rng = np.random.default_rng(15)
    tail = n - positions[1] - 2 * sp.gap
    bits[-tail:] = rng.integers(0, 2, size=tail)
    part = build_partition(bits, sp)
    assert int(part.lens.max()) > sp.max_block
    got = randproto._receiver_entries(bits, sp)
    # the oversized block contributes no record, its neighbors still do
    assert len(got) < part.starts.size - 1


def test_value_sections_choose_the_smaller_variant():
    x = conforming_string(16384, 16)
    ps = parse_sketch(sketch(x, 1))
    # the fine level has many blocks: parity wins there at small budgets
    assert ps.zs[-1][0] == "parity"
    assert ps.z_final[0] == "parity"
