from __future__ import annotations

import time

import numpy as np
import pytest

from editsketch.errors import CapacityError, ParameterError, RangeError
from editsketch.kwise import (
    KWiseGen,
    join_seed,
    seed_length,
    split_seed,
)
from helpers import toy_generator_bias


def test_seed_length_formula():
    p = seed_length(10, 4, 10)
    assert p.seed_len == 2 * (10 + 10 + 1)
    assert p.seed_len <= 64
    p = seed_length(200, 256, 64)
    assert p.seed_len == 2 * (200 + 64 + 1)
    assert p.seed_len <= 1024


def test_seed_length_monotone():
    base = seed_length(12, 4, 8)
    assert seed_length(12, 8, 8).seed_len >= base.seed_len
    assert seed_length(13, 4, 8).seed_len > base.seed_len
    assert seed_length(12, 4, 9).seed_len > base.seed_len


def test_seed_length_capacity_error():
    with pytest.raises(CapacityError):
        seed_length(4000, 2, 4000)
    with pytest.raises(ParameterError):
        seed_length(10, 0, 4)
    with pytest.raises(ParameterError):
        seed_length(0, 1, 4)


def test_split_seed_interleaves():
    p = seed_length(6, 3, 3)
    assert split_seed(p, 0b01) == (1, 0)
    assert split_seed(p, 0b10) == (0, 1)
    assert split_seed(p, 0b1110) == (0b10, 0b11) == split_seed(p, 14)
    for seed in range(64):
        x, y = split_seed(p, seed)
        assert join_seed(p, x, y) == seed


def test_small_seeds_touch_both_halves():
    # the reason for interleaving: seeds 1, 2, 3 must not collapse to y = 0
    p = seed_length(6, 3, 3)
    ys = {split_seed(p, s)[1] for s in range(1, 16)}
    assert ys != {0}


def test_bit_at_deterministic_and_bounded():
    p = seed_length(16, 4, 8)
    gen = KWiseGen(p)
    rng = np.random.Generator(np.random.PCG64(2))
    for _ in range(20):
        seed = int(rng.integers(0, 1 << 32))
        idx = int(rng.integers(0, 1 << 16))
        b = gen.bit_at(seed, idx)
        assert b in (0, 1)
        assert gen.bit_at(seed, idx) == b


def test_all_zero_seed_defined():
    p = seed_length(8, 3, 4)
    gen = KWiseGen(p)
    assert [gen.bit_at(0, i) for i in range(16)] == [0] * 16


def test_bit_at_range_checked():
    p = seed_length(8, 3, 4)
    gen = KWiseGen(p)
    with pytest.raises(RangeError):
        gen.bit_at(1, 1 << 8)
    with pytest.raises(RangeError):
        gen.bit_at(1, -1)
    with pytest.raises(RangeError):
        split_seed(p, 1 << p.seed_len)


def test_bits_range_matches_bit_at():
    p = seed_length(20, 6, 12)
    gen = KWiseGen(p)
    rng = np.random.Generator(np.random.PCG64(3))
    for _ in range(10):
        seed = int(rng.integers(0, 1 << 60))
        start = int(rng.integers(0, 1 << 18))
        count = int(rng.integers(1, 200))
        got = gen.bits_range(seed, start, count)
        want = [gen.bit_at(seed, start + i) for i in range(count)]
        assert got.tolist() == want
    assert gen.bits_range(7, 5, 0).size == 0


def test_bit_at_huge_index_fast():
    p = seed_length(200, 256, 64)
    gen = KWiseGen(p)
    seed = (1 << 500) | 0b100111
    t0 = time.perf_counter()
    bits = [gen.bit_at(seed, (1 << 199) + i) for i in range(8)]
    elapsed = time.perf_counter() - t0
    assert all(b in (0, 1) for b in bits)
    assert elapsed < 2.0


def test_toy_bias_exhaustive():
    # every pattern on every index tuple of size <= 3, all 2^20 seeds
    max_dev, eps_g = toy_generator_bias(domain_bits=6, eps_exp=3, kappa=3)
    assert max_dev <= eps_g
    # the powering construction's own bound, N / 2^(m+1), is 4x tighter
    assert max_dev <= 1 / 32
