"""Shared test machinery: independent oracles and exhaustive certifiers."""

from __future__ import annotations

import itertools

import numpy as np

from editsketch.gf import bigint_field, pmod
from editsketch.kwise import seed_length


def reference_irreducible(f: int) -> bool:
    """Trial division by every lower-degree polynomial."""
    m = f.bit_length() - 1
    if m <= 0:
        return False
    for g in range(2, 1 << (m // 2 + 1)):
        if g.bit_length() - 1 < 1:
            continue
        if pmod(f, g) == 0:
            return False
    return True


def toy_generator_bias(domain_bits: int = 6, eps_exp: int = 3, kappa: int = 3):
    """Exhaustive max-norm bias of the generator at toy parameters.

    Enumerates every seed, tabulates every pattern on every index tuple of
    size up to kappa (kappa <= 3 supported), and returns the max deviation
    from uniform together with the certified bound eps_g = 2^-eps_exp.
    """
    assert kappa <= 3
    params = seed_length(domain_bits, kappa, eps_exp)
    m = params.m_field
    field = bigint_field(m)
    n_idx = 1 << domain_bits
    size = 1 << m
    total = size * size

    # output bit t for seed (x, y) is parity(bits(x^(t+1)) & y)
    powers = np.empty((size, n_idx), dtype=np.uint32)
    for x in range(size):
        p = x
        for t in range(n_idx):
            powers[x, t] = p
            p = field.mul(p, x)

    ys = np.arange(size, dtype=np.uint32)
    words = total // 64
    cols = np.zeros((n_idx, words), dtype=np.uint64)
    block_words = size // 64
    for x in range(size):
        bits = (np.bitwise_count(powers[x][:, None] & ys[None, :]) & 1).astype(np.uint8)
        packed = np.packbits(bits, axis=1, bitorder="little")
        cols[:, x * block_words : (x + 1) * block_words] = packed.view(np.uint64)

    def popcnt(a: np.ndarray) -> np.ndarray:
        return np.bitwise_count(a).sum(axis=-1, dtype=np.int64)

    n1 = popcnt(cols)
    max_dev_num = 0  # numerator of deviation over denominator total*8

    # singles
    max_dev_num = max(max_dev_num, int(np.abs(8 * n1 - 4 * total).max()))

    # pairs and triples share the pairwise AND pass
    for i in range(n_idx):
        d = cols[i][None, :] & cols[i + 1 :]
        n2 = popcnt(d)  # n2[jj] = count(i, i+1+jj)
        max_dev_num = max(max_dev_num, int(np.abs(8 * n2 - 2 * total).max(initial=0)))
        for jj in range(d.shape[0] - 1):
            j = i + 1 + jj
            n3 = popcnt(d[jj][None, :] & cols[j + 1 :])
            n2_ij = n2[jj]
            n2_ik = popcnt(cols[i][None, :] & cols[j + 1 :])
            n2_jk = popcnt(cols[j][None, :] & cols[j + 1 :])
            counts = np.stack(
                [
                    n3,
                    n2_ij - n3,
                    n2_ik - n3,
                    n2_jk - n3,
                    n1[i] - n2_ij - n2_ik + n3,
                    n1[j] - n2_ij - n2_jk + n3,
                    n1[j + 1 :] - n2_ik - n2_jk + n3,
                    total - n1[i] - n1[j] - n1[j + 1 :] + n2_ij + n2_ik + n2_jk - n3,
                ]
            )
            max_dev_num = max(max_dev_num, int(np.abs(8 * counts - total).max()))

    max_dev = max_dev_num / (8 * total)
    return max_dev, params.eps_g


def enumerate_monotone_matchings(agree: np.ndarray, p: int):
    """All monotone matchings for an agreement matrix; exponential, tiny only.

    agree[i, j] is True when block i may pair with the window ending at j
    (0-based end). Yields tuples of (i, j) pairs with strictly increasing i
    and window gaps of at least p.
    """
    nblocks, nwin = agree.shape
    pairs = [(i, j) for i in range(nblocks) for j in range(nwin) if agree[i, j]]

    def extend(prefix, rest):
        yield tuple(prefix)
        for idx, (i, j) in enumerate(rest):
            if prefix and (i <= prefix[-1][0] or j - prefix[-1][1] < p):
                continue
            prefix.append((i, j))
            yield from extend(prefix, rest[idx + 1 :])
            prefix.pop()

    yield from extend([], pairs)


def brute_max_matching_size(agree: np.ndarray, p: int) -> int:
    best = 0
    for m in enumerate_monotone_matchings(agree, p):
        best = max(best, len(m))
    return best


def all_bitstrings(max_len: int):
    for n in range(max_len + 1):
        for bits in itertools.product("01", repeat=n):
            yield "".join(bits)
