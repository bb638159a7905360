"""Systematic Reed-Solomon codecs with errors-and-erasures decoding.

Narrow-sense codes over GF(2^w) with codeword roots alpha^1 .. alpha^(d-1).
Positions 0 .. d-2 hold parity and the message starts at position d-1, so a
sender can ship the parity alone and a receiver patches its own copy of the
message against it. StripedCodec extends this to symbols wider than w bits
by slicing each symbol into w-bit stripes, one codeword per stripe, sharing
a single erasure pattern.
"""

from __future__ import annotations

from math import ceil
from typing import Optional, Sequence

import numpy as np

from .bits import BitReader, BitWriter
from .errors import CapacityError, ParameterError
from .gf import GF2m, _table_modulus, table_field

_WIDTHS = (2, 4, 8, 16, 32)

# header: w (u8), distance (u32), message symbols (u64); LSB-first fields
HEADER_BITS = 8 + 32 + 64


def width_for_length(n_total: int) -> int:
    """Smallest power-of-two symbol width whose field covers n_total positions."""
    if n_total < 1:
        raise ParameterError("code length must be positive")
    for w in _WIDTHS:
        if (1 << w) - 1 >= n_total:
            return w
    raise CapacityError(f"code length {n_total} exceeds every supported field")


class ReedSolomon:
    """One RS code of a fixed design distance over GF(2^w).

    w <= 16 runs on exp/log tables with vectorized syndrome and root scans;
    w = 32 falls back to big-integer arithmetic and is only meant for code
    lengths the table fields cannot address.
    """

    def __init__(self, w: int, distance: int, _force_big: bool = False):
        if w not in _WIDTHS:
            raise ParameterError(f"unsupported symbol width {w}")
        if distance < 1:
            raise ParameterError("distance must be at least 1")
        self.w = w
        self.distance = distance
        self.n_parity = distance - 1
        self.order = (1 << w) - 1
        if self.n_parity > self.order:
            raise CapacityError("distance exceeds field size")
        if w <= 16 and not _force_big:
            self._table = table_field(w)
            self._big = None
        else:
            self._table = None
            self._big = GF2m(w, _table_modulus(w))
        g = [1]
        for j in range(1, distance):
            g = self._poly_mul(g, [self._alpha_pow(j), 1])
        self._gen = g
        if self._table is not None:
            self._glow = np.array(g[:-1], dtype=np.int64)
        else:
            self._glow = g[:-1]

    # scalar field helpers

    def _alpha_pow(self, e: int) -> int:
        e %= self.order
        if self._table is not None:
            return int(self._table.exp[e])
        return self._big.pow(2, e)

    def _mul(self, a: int, b: int) -> int:
        if a == 0 or b == 0:
            return 0
        if self._table is not None:
            t = self._table
            return int(t.exp[int(t.log[a]) + int(t.log[b])])
        return self._big.mul(a, b)

    def _inv(self, a: int) -> int:
        if a == 0:
            raise ZeroDivisionError("inverse of zero")
        if self._table is not None:
            t = self._table
            return int(t.exp[(self.order - int(t.log[a])) % self.order])
        return self._big.inv(a)

    # polynomials as int lists, index = degree

    def _poly_mul(self, a: list, b: list) -> list:
        out = [0] * (len(a) + len(b) - 1)
        for i, ai in enumerate(a):
            if ai == 0:
                continue
            for j, bj in enumerate(b):
                if bj:
                    out[i + j] ^= self._mul(ai, bj)
        return out

    @staticmethod
    def _poly_trim(p: list) -> list:
        while len(p) > 1 and p[-1] == 0:
            p.pop()
        return p

    def _poly_eval(self, p: list, x: int) -> int:
        acc = 0
        for c in reversed(p):
            acc = self._mul(acc, x) ^ c
        return acc

    def parity(self, msg: Sequence[int]) -> list:
        """Parity symbols for msg; remainder of msg(x)*x^(d-1) modulo the generator."""
        npar = self.n_parity
        if len(msg) + npar > self.order:
            raise CapacityError("message too long for this field")
        if npar == 0:
            return []
        if self._table is not None:
            rem = np.zeros(npar, dtype=np.int64)
            for c in reversed([int(v) for v in msg]):
                t = int(rem[-1]) ^ c
                rem[1:] = rem[:-1]
                rem[0] = 0
                if t:
                    rem ^= self._table.mul_scalar(self._glow, t)
            return [int(v) for v in rem]
        rem = [0] * npar
        for c in reversed([int(v) for v in msg]):
            t = rem[-1] ^ c
            rem[1:] = rem[:-1]
            rem[0] = 0
            if t:
                for i, gi in enumerate(self._glow):
                    if gi:
                        rem[i] ^= self._mul(gi, t)
        return rem

    def _syndromes(self, r: list) -> list:
        npar = self.n_parity
        if self._table is not None:
            tab = self._table
            synd = np.zeros(npar, dtype=np.int64)
            js = np.arange(1, npar + 1, dtype=np.int64)
            for i, c in enumerate(r):
                if c:
                    synd ^= tab.exp[(int(tab.log[c]) + i * js) % self.order]
            return [int(v) for v in synd]
        synd = []
        for j in range(1, npar + 1):
            acc = 0
            x = self._alpha_pow(j)
            for c in reversed(r):
                acc = self._mul(acc, x) ^ c
            synd.append(acc)
        return synd

    def _find_roots(self, psi: list, n_total: int) -> Optional[list]:
        """Positions i with psi(alpha^-i) == 0, or None if the count is off."""
        want = len(psi) - 1
        if self._table is not None:
            tab = self._table
            ii = np.arange(n_total, dtype=np.int64)
            val = np.zeros(n_total, dtype=np.int64)
            for j, c in enumerate(psi):
                if c:
                    val ^= tab.exp[(int(tab.log[c]) - j * ii) % self.order]
            roots = np.nonzero(val == 0)[0].tolist()
        else:
            roots = []
            for i in range(n_total):
                if self._poly_eval(psi, self._alpha_pow(-i)) == 0:
                    roots.append(i)
        if len(roots) != want:
            return None
        return roots

    def _berlekamp_massey(self, xi: list, skip: int) -> Optional[list]:
        """Minimal LFSR for xi[skip:]; None when the budget cannot certify it."""
        seq = xi[skip:]
        span = len(seq)
        lam = [1]
        prev = [1]
        length = 0
        gap = 1
        b = 1
        for n in range(span):
            delta = seq[n]
            for i in range(1, min(length, len(lam) - 1) + 1):
                if lam[i] and seq[n - i]:
                    delta ^= self._mul(lam[i], seq[n - i])
            if delta == 0:
                gap += 1
                continue
            coef = self._mul(delta, self._inv(b))
            update = [0] * gap + [self._mul(coef, v) for v in prev]
            if 2 * length <= n:
                keep = list(lam)
                lam = self._poly_add(lam, update)
                length = n + 1 - length
                prev = keep
                b = delta
                gap = 1
            else:
                lam = self._poly_add(lam, update)
                gap += 1
        if 2 * length > span:
            return None
        lam = self._poly_trim(lam)
        if len(lam) - 1 != length:
            return None
        return lam

    @staticmethod
    def _poly_add(a: list, b: list) -> list:
        if len(a) < len(b):
            a, b = b, a
        out = list(a)
        for i, v in enumerate(b):
            out[i] ^= v
        return out

    def correct(
        self,
        msg: Sequence[int],
        parity: Sequence[int],
        erasures: Sequence[int] = (),
    ) -> Optional[np.ndarray]:
        """Correct msg against received parity; None when decoding fails.

        erasures indexes into msg. Succeeds whenever 2*errors + erasures
        fits under the design distance; the corrected message is returned
        as an int64 array. Every returned message re-checks as a codeword.
        """
        npar = self.n_parity
        if len(parity) != npar:
            raise ParameterError("parity length does not match distance")
        m = len(msg)
        if m + npar > self.order:
            raise CapacityError("message too long for this field")
        r = [int(v) for v in parity] + [int(v) for v in msg]
        era = sorted(set(int(e) for e in erasures))
        if era and (era[0] < 0 or era[-1] >= m):
            raise ParameterError("erasure index out of range")
        positions = [npar + e for e in era]
        s = len(positions)
        if s >= self.distance:
            return None
        for p in positions:
            r[p] = 0
        synd = self._syndromes(r)
        if not any(synd):
            return np.array(r[npar:], dtype=np.int64)
        gamma = [1]
        for p in positions:
            gamma = self._poly_mul(gamma, [1, self._alpha_pow(p)])
        xi = self._poly_mul(synd, gamma)[: npar] if s else list(synd)
        lam = self._berlekamp_massey(xi, s)
        if lam is None:
            return None
        psi = self._poly_trim(self._poly_mul(lam, gamma))
        if len(psi) - 1 == 0:
            return None  # nonzero syndromes but no errata located
        roots = self._find_roots(psi, npar + m)
        if roots is None:
            return None
        omega = self._poly_trim(self._poly_mul(synd, psi)[: npar])
        deriv = [0] * (len(psi) - 1)
        for i in range(1, len(psi), 2):
            deriv[i - 1] = psi[i]
        for p in roots:
            xinv = self._alpha_pow(-p)
            den = self._poly_eval(deriv, xinv)
            if den == 0:
                return None
            r[p] ^= self._mul(self._poly_eval(omega, xinv), self._inv(den))
        if any(self._syndromes(r)):
            return None
        return np.array(r[npar:], dtype=np.int64)


class StripedCodec:
    """RS protection for symbols wider than the field, stripe by stripe.

    Symbol bit s*w+j goes to stripe s, so every stripe sees the same error
    and erasure positions and the per-stripe parities travel together.
    """

    def __init__(self, sym_bits: int, length: int, distance: int, w: Optional[int] = None):
        if sym_bits < 1:
            raise ParameterError("symbol width must be positive")
        if length < 0:
            raise ParameterError("length must be non-negative")
        if w is None:
            w = width_for_length(max(1, length + distance - 1))
        self.w = w
        self.sym_bits = sym_bits
        self.length = length
        self.distance = distance
        self.stripes = ceil(sym_bits / w)
        self.rs = ReedSolomon(w, distance)
        if length + distance - 1 > self.rs.order:
            raise CapacityError("codeword length exceeds field size")

    @property
    def parity_bits(self) -> int:
        return (self.distance - 1) * self.stripes * self.w

    def _split(self, syms: Sequence[int]) -> list:
        if len(syms) != self.length:
            raise ParameterError(f"expected {self.length} symbols, got {len(syms)}")
        mask = (1 << self.w) - 1
        return [
            [(int(v) >> (s * self.w)) & mask for v in syms]
            for s in range(self.stripes)
        ]

    def parity(self, syms: Sequence[int]) -> list:
        """Per-stripe parity symbol lists."""
        return [self.rs.parity(stripe) for stripe in self._split(syms)]

    def correct(
        self,
        syms: Sequence[int],
        parity: Sequence[list],
        erasures: Sequence[int] = (),
    ) -> Optional[list]:
        """Corrected wide symbols, or None when any stripe fails."""
        if len(parity) != self.stripes:
            raise ParameterError("stripe count mismatch")
        fixed = []
        for stripe, par in zip(self._split(syms), parity):
            got = self.rs.correct(stripe, par, erasures)
            if got is None:
                return None
            fixed.append(got)
        out = []
        for i in range(self.length):
            v = 0
            for s in range(self.stripes):
                v |= int(fixed[s][i]) << (s * self.w)
            out.append(v)
        return out

    def write_parity(self, bw: BitWriter, syms: Sequence[int]) -> None:
        """Header (w, distance, length) then stripe-major parity symbols."""
        bw.write(self.w, 8)
        bw.write(self.distance, 32)
        bw.write(self.length, 64)
        for stripe_par in self.parity(syms):
            for v in stripe_par:
                bw.write(int(v), self.w)


def read_parity_block(br: BitReader, sym_bits: int) -> tuple:
    """Parse one parity block; returns the matching codec and parity lists."""
    w = br.read(8)
    distance = br.read(32)
    length = br.read(64)
    codec = StripedCodec(sym_bits, length, distance, w=w)
    parity = [
        [br.read(w) for _ in range(distance - 1)]
        for _ in range(codec.stripes)
    ]
    return codec, parity
