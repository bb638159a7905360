"""Bit-addressable almost-k-wise independent generator.

Construction: output bit t of seed (x, y) in GF(2^m)^2 is the GF(2) inner
product of the coefficient vectors of x^(t+1) and y. For any nonempty index
set S with indices below N, the XOR of the output bits over S equals
<p_S(x), y> for the nonzero polynomial p_S of degree <= N, so the bias is at
most N / 2^(m+1). Choosing m = domain_bits + eps_exp + 1 keeps every such
bias below 2^-eps_exp, and by the Fourier expansion the same bound holds for
the max-norm distance of any marginal from uniform, independent of kappa.

Seed integers map to (x, y) by bit interleaving (even bits form x, odd bits
form y): a split by halves would give every small integer y = 0 and make the
output identically zero, which would break smallest-accepting-seed searches.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CapacityError, ParameterError, RangeError
from .gf import bigint_field

try:
    from numba import njit

    from .pinsketch import _gf_mul

    _HAVE_FAST = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    _HAVE_FAST = False

MAX_SEED_LEN = 4096

if _HAVE_FAST:

    @njit(cache=True)
    def _popcount64(v):
        v = v - ((v >> np.uint64(1)) & np.uint64(0x5555555555555555))
        v = (v & np.uint64(0x3333333333333333)) + ((v >> np.uint64(2)) & np.uint64(0x3333333333333333))
        v = (v + (v >> np.uint64(4))) & np.uint64(0x0F0F0F0F0F0F0F0F)
        return (v * np.uint64(0x0101010101010101)) >> np.uint64(56)

    @njit(cache=True)
    def _range_kernel(ph, pl, xh, xl, yh, yl, count, m, modh, modl):
        out = np.empty(count, dtype=np.uint8)
        for i in range(count):
            par = _popcount64(ph & yh) + _popcount64(pl & yl)
            out[i] = np.uint8(par & np.uint64(1))
            ph, pl = _gf_mul(ph, pl, xh, xl, m, modh, modl)
        return out


@dataclass(frozen=True)
class KWiseParams:
    domain_bits: int
    kappa: int
    eps_exp: int  # bias bound eps_g = 2^-eps_exp, powers of two only
    m_field: int
    seed_len: int

    @property
    def eps_g(self) -> float:
        return 2.0 ** -self.eps_exp


def seed_length(domain_bits: int, kappa: int, eps_exp: int) -> KWiseParams:
    """Concrete seed length for the powering construction.

    d = 2 * (domain_bits + eps_exp + 1); kappa does not enter, which makes d
    trivially monotone in it. eps_exp is the exponent of the dyadic bias.
    """
    if kappa < 1:
        raise ParameterError("kappa must be at least 1")
    if eps_exp < 1:
        raise ParameterError("eps_exp must be at least 1")
    if domain_bits < 1:
        raise ParameterError("domain_bits must be at least 1")
    m_field = domain_bits + eps_exp + 1
    d = 2 * m_field
    if d > MAX_SEED_LEN:
        raise CapacityError(f"seed length {d} exceeds maximum {MAX_SEED_LEN}")
    return KWiseParams(domain_bits, kappa, eps_exp, m_field, d)


def split_seed(params: KWiseParams, seed: int) -> tuple:
    """Interleaved split: even bits of the integer form x, odd bits form y."""
    if not 0 <= seed < (1 << params.seed_len):
        raise RangeError(f"seed outside [0, 2^{params.seed_len})")
    x = 0
    y = 0
    pos = 0
    while seed:
        block = seed & 0xFF
        for i in range(4):
            if block >> (2 * i) & 1:
                x |= 1 << (pos + i)
            if block >> (2 * i + 1) & 1:
                y |= 1 << (pos + i)
        seed >>= 8
        pos += 4
    return x, y


def join_seed(params: KWiseParams, x: int, y: int) -> int:
    seed = 0
    for i in range(params.m_field):
        if x >> i & 1:
            seed |= 1 << (2 * i)
        if y >> i & 1:
            seed |= 1 << (2 * i + 1)
    return seed


class KWiseGen:
    """Evaluator bound to fixed params; pure given (seed, index)."""

    def __init__(self, params: KWiseParams):
        self.params = params
        self.field = bigint_field(params.m_field)

    def _check_index(self, index: int) -> None:
        if not 0 <= index < (1 << self.params.domain_bits):
            raise RangeError(f"index {index} outside the 2^{self.params.domain_bits} domain")

    def bit_at(self, seed: int, index: int) -> int:
        """Single output bit; polynomial time in seed length and index bits."""
        self._check_index(index)
        x, y = split_seed(self.params, seed)
        p = self.field.pow(x, index + 1)
        return (p & y).bit_count() & 1

    def bits_range(self, seed: int, start: int, count: int) -> np.ndarray:
        """count output bits from index start, via incremental multiply by x."""
        if count < 0:
            raise ParameterError("count must be non-negative")
        if count == 0:
            return np.zeros(0, dtype=np.uint8)
        self._check_index(start)
        self._check_index(start + count - 1)
        x, y = split_seed(self.params, seed)
        field = self.field
        p = field.pow(x, start + 1)
        if _HAVE_FAST and self.params.m_field <= 126:
            mask = (1 << 64) - 1
            return _range_kernel(
                np.uint64(p >> 64),
                np.uint64(p & mask),
                np.uint64(x >> 64),
                np.uint64(x & mask),
                np.uint64(y >> 64),
                np.uint64(y & mask),
                count,
                self.params.m_field,
                np.uint64(field.modulus >> 64),
                np.uint64(field.modulus & mask),
            )
        out = np.empty(count, dtype=np.uint8)
        for i in range(count):
            out[i] = (p & y).bit_count() & 1
            p = field.mul(p, x)
        return out
