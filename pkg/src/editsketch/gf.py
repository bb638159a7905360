"""Binary extension fields.

Two representations: GF2m works on Python ints in polynomial basis for any
degree (hash-seed fields, set-reconciliation symbols), and GFTable keeps
exp/log numpy tables for w <= 16 (the Reed-Solomon workhorse). Moduli are the
lexicographically smallest irreducible (table fields: primitive) polynomials
of each degree, so field choice is reproducible from the degree alone.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .errors import ParameterError

# 8-bit -> 16-bit bit spreading (abcdefgh -> 0a0b0c0d0e0f0g0h), used to square
_SPREAD = [0] * 256
for _v in range(256):
    _s = 0
    for _i in range(8):
        if _v >> _i & 1:
            _s |= 1 << (2 * _i)
    _SPREAD[_v] = _s
del _v, _s, _i


def pmul(a: int, b: int) -> int:
    """Carryless polynomial multiplication."""
    r = 0
    while b:
        if b & 1:
            r ^= a
        a <<= 1
        b >>= 1
    return r


def psqr(a: int) -> int:
    """Carryless square: spread every bit to an even position."""
    r = 0
    shift = 0
    while a:
        r |= _SPREAD[a & 0xFF] << shift
        a >>= 8
        shift += 16
    return r


def pmod(a: int, f: int) -> int:
    df = f.bit_length() - 1
    da = a.bit_length() - 1
    while da >= df:
        a ^= f << (da - df)
        da = a.bit_length() - 1
    return a


def pgcd(a: int, b: int) -> int:
    while b:
        a, b = b, pmod(a, b)
    return a


def _prime_factors(n: int) -> list:
    out = []
    p = 2
    while p * p <= n:
        if n % p == 0:
            out.append(p)
            while n % p == 0:
                n //= p
        p += 1
    if n > 1:
        out.append(n)
    return out


def is_irreducible(f: int) -> bool:
    """Rabin's test over GF(2)."""
    m = f.bit_length() - 1
    if m <= 0:
        return False
    if m == 1:
        return True
    if not f & 1:
        return False  # divisible by x
    checkpoints = {m // p for p in _prime_factors(m)}
    hs = {}
    h = 2  # the polynomial x
    for j in range(1, m + 1):
        h = pmod(psqr(h), f)
        if j in checkpoints:
            hs[j] = h
    if h != 2:
        return False
    for hj in hs.values():
        if pgcd(hj ^ 2, f) != 1:
            return False
    return True


@lru_cache(maxsize=None)
def smallest_irreducible(m: int) -> int:
    if m < 1:
        raise ParameterError("degree must be positive")
    if m == 1:
        return 0b10  # x
    base = 1 << m
    for tail in range(1, base, 2):
        if is_irreducible(base | tail):
            return base | tail
    raise AssertionError("no irreducible polynomial found")  # unreachable


class GF2m:
    """GF(2^m) on Python ints; elements are bit-polynomials below 2^m."""

    def __init__(self, m: int, modulus: int | None = None):
        if modulus is None:
            modulus = smallest_irreducible(m)
        if modulus.bit_length() - 1 != m:
            raise ParameterError("modulus degree mismatch")
        self.m = m
        self.modulus = modulus
        self.order = (1 << m) - 1

    def mul(self, a: int, b: int) -> int:
        return pmod(pmul(a, b), self.modulus)

    def sqr(self, a: int) -> int:
        return pmod(psqr(a), self.modulus)

    def mul_x(self, a: int) -> int:
        a <<= 1
        if a >> self.m & 1:
            a ^= self.modulus
        return a

    def pow(self, a: int, e: int) -> int:
        if e < 0:
            return self.pow(self.inv(a), -e)
        r = 1
        a = pmod(a, self.modulus)
        while e:
            if e & 1:
                r = self.mul(r, a)
            a = self.sqr(a)
            e >>= 1
        return r

    def inv(self, a: int) -> int:
        """Extended Euclid on polynomials."""
        if pmod(a, self.modulus) == 0:
            raise ZeroDivisionError("zero has no inverse")
        r0, r1 = self.modulus, pmod(a, self.modulus)
        s0, s1 = 0, 1
        while r1:
            d = r0.bit_length() - r1.bit_length()
            if d < 0:
                r0, r1, s0, s1 = r1, r0, s1, s0
                continue
            r0 ^= r1 << d
            s0 ^= s1 << d
        if r0 != 1:
            raise AssertionError("modulus not irreducible")
        return pmod(s0, self.modulus)

    def trace(self, a: int) -> int:
        t = a
        acc = a
        for _ in range(self.m - 1):
            t = self.sqr(t)
            acc ^= t
        return acc & 1 if self.m > 0 else 0


@lru_cache(maxsize=None)
def _table_modulus(w: int) -> int:
    """Smallest irreducible of degree w whose residue class of x is primitive."""
    base = 1 << w
    order = base - 1
    for tail in range(1, base, 2):
        f = base | tail
        if not is_irreducible(f):
            continue
        # x primitive iff its order is exactly 2^w - 1
        ok = True
        for p in _prime_factors(order):
            gf = GF2m(w, f)
            if gf.pow(2, order // p) == 1:
                ok = False
                break
        if ok:
            return f
    raise AssertionError("no primitive polynomial found")  # unreachable


class GFTable:
    """GF(2^w), w <= 16, with exp/log tables for vectorized arithmetic."""

    def __init__(self, w: int):
        if not 2 <= w <= 16:
            raise ParameterError("table fields support 2 <= w <= 16")
        self.w = w
        self.order = (1 << w) - 1
        self.modulus = _table_modulus(w)
        gf = GF2m(w, self.modulus)
        exp = np.empty(2 * self.order, dtype=np.int64)
        log = np.zeros(1 << w, dtype=np.int64)
        v = 1
        for i in range(self.order):
            exp[i] = v
            log[v] = i
            v = gf.mul_x(v)
        assert v == 1, "x is not primitive"
        exp[self.order :] = exp[: self.order]
        self.exp = exp
        self.log = log

    def mul(self, a, b):
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        out = self.exp[(self.log[a] + self.log[b]) % self.order]
        return np.where((a == 0) | (b == 0), 0, out)

    def mul_scalar(self, a, s: int):
        if s == 0:
            return np.zeros_like(np.asarray(a, dtype=np.int64))
        a = np.asarray(a, dtype=np.int64)
        out = self.exp[(self.log[a] + self.log[s]) % self.order]
        return np.where(a == 0, 0, out)

    def inv(self, a):
        a = np.asarray(a, dtype=np.int64)
        if np.any(a == 0):
            raise ZeroDivisionError("zero has no inverse")
        return self.exp[(self.order - self.log[a]) % self.order]

    def pow_alpha(self, e: int) -> int:
        """alpha**e for the primitive element alpha = x."""
        return int(self.exp[e % self.order])


@lru_cache(maxsize=None)
def table_field(w: int) -> GFTable:
    return GFTable(w)


@lru_cache(maxsize=None)
def bigint_field(m: int) -> GF2m:
    return GF2m(m)
