"""Set reconciliation sketches from odd power sums over GF(2^m).

A sketch of a set is the vector of odd power sums (s_1, s_3, ..., s_{2t-1})
of its elements. Sketches combine by XOR, and the combined sketch of two sets
equals the sketch of their symmetric difference, which ``decode`` recovers
exactly whenever it has at most ``t`` elements. Elements are nonzero ints
below 2^m.

Two execution paths share the same algorithms: numba kernels over two-limb
uint64 pairs (fast path), and plain python over :class:`~editsketch.gf.GF2m`
(reference path, also the fallback when numba is unavailable).
"""

from __future__ import annotations

import numpy as np

from .errors import ParameterError
from .gf import GF2m

try:
    from numba import njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    _HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn

        if args and callable(args[0]):
            return args[0]
        return wrap


_U64 = np.uint64
_ONE = _U64(1)
_ZERO = _U64(0)


@njit(cache=True)
def _clmul64(a, b):
    # carry-less 64x64 -> 128 bit product, returned as (hi, lo)
    hi = _U64(0)
    lo = _U64(0)
    for i in range(64):
        if (b >> _U64(i)) & _U64(1):
            lo ^= a << _U64(i)
            if i > 0:
                hi ^= a >> _U64(64 - i)
    return hi, lo


@njit(cache=True)
def _gf_mul(ah, al, bh, bl, m, modh, modl):
    h0, l0 = _clmul64(al, bl)
    h1, l1 = _clmul64(al, bh)
    h2, l2 = _clmul64(ah, bl)
    h3, l3 = _clmul64(ah, bh)
    p0 = l0
    p1 = h0 ^ l1 ^ l2
    p2 = h1 ^ h2 ^ l3
    p3 = h3
    # fold bits 2m-2 .. m onto the modulus; (modh, modl) includes the x^m term
    for bit in range(2 * m - 2, m - 1, -1):
        limb = bit >> 6
        off = _U64(bit & 63)
        if limb == 0:
            cur = p0
        elif limb == 1:
            cur = p1
        elif limb == 2:
            cur = p2
        else:
            cur = p3
        if (cur >> off) & _U64(1):
            s = bit - m
            so = _U64(s & 63)
            if so == _U64(0):
                v0 = modl
                v1 = modh
                v2 = _U64(0)
            else:
                v0 = modl << so
                v1 = (modl >> (_U64(64) - so)) ^ (modh << so)
                v2 = modh >> (_U64(64) - so)
            if (s >> 6) == 0:
                p0 ^= v0
                p1 ^= v1
                p2 ^= v2
            else:
                p1 ^= v0
                p2 ^= v1
                p3 ^= v2
    return p1, p0


@njit(cache=True)
def _gf_inv(ah, al, m, modh, modl):
    # a^(2^m - 2) by square-and-multiply over the exponent 111...10
    rh = _U64(0)
    rl = _U64(1)
    sh = ah
    sl = al
    for _ in range(1, m):
        sh, sl = _gf_mul(sh, sl, sh, sl, m, modh, modl)
        rh, rl = _gf_mul(rh, rl, sh, sl, m, modh, modl)
    return rh, rl


@njit(cache=True)
def _syndromes_kernel(el, t, m, modh, modl):
    out = np.zeros((t, 2), dtype=np.uint64)
    for i in range(el.shape[0]):
        vh = el[i, 0]
        vl = el[i, 1]
        qh, ql = _gf_mul(vh, vl, vh, vl, m, modh, modl)
        ph = vh
        pl = vl
        out[0, 0] ^= ph
        out[0, 1] ^= pl
        for j in range(1, t):
            ph, pl = _gf_mul(ph, pl, qh, ql, m, modh, modl)
            out[j, 0] ^= ph
            out[j, 1] ^= pl
    return out


@njit(cache=True)
def _bm_kernel(synd, m, modh, modl):
    # Berlekamp-Massey; synd holds S_1..S_n. Returns (connection poly, L).
    n = synd.shape[0]
    cap = n + 2
    c = np.zeros((cap, 2), dtype=np.uint64)
    b = np.zeros((cap, 2), dtype=np.uint64)
    c[0, 1] = _U64(1)
    b[0, 1] = _U64(1)
    big_l = 0
    mm = 1
    dbh = _U64(0)
    dbl = _U64(1)
    for i in range(n):
        dh = synd[i, 0]
        dl = synd[i, 1]
        for j in range(1, big_l + 1):
            if c[j, 0] or c[j, 1]:
                th, tl = _gf_mul(c[j, 0], c[j, 1], synd[i - j, 0], synd[i - j, 1], m, modh, modl)
                dh ^= th
                dl ^= tl
        if dh == _U64(0) and dl == _U64(0):
            mm += 1
            continue
        ih, il = _gf_inv(dbh, dbl, m, modh, modl)
        fh, fl = _gf_mul(dh, dl, ih, il, m, modh, modl)
        if 2 * big_l <= i:
            prev = c.copy()
            for j in range(cap - mm):
                if b[j, 0] or b[j, 1]:
                    th, tl = _gf_mul(fh, fl, b[j, 0], b[j, 1], m, modh, modl)
                    c[j + mm, 0] ^= th
                    c[j + mm, 1] ^= tl
            b = prev
            big_l = i + 1 - big_l
            dbh = dh
            dbl = dl
            mm = 1
        else:
            for j in range(cap - mm):
                if b[j, 0] or b[j, 1]:
                    th, tl = _gf_mul(fh, fl, b[j, 0], b[j, 1], m, modh, modl)
                    c[j + mm, 0] ^= th
                    c[j + mm, 1] ^= tl
            mm += 1
    return c, big_l


@njit(cache=True)
def _poly_deg(p):
    for i in range(p.shape[0] - 1, -1, -1):
        if p[i, 0] or p[i, 1]:
            return i
    return -1


@njit(cache=True)
def _poly_rem(a, b, m, modh, modl):
    da = _poly_deg(a)
    db = _poly_deg(b)
    if da < 0:
        return a[:0].copy()
    r = a[: da + 1].copy()
    ih, il = _gf_inv(b[db, 0], b[db, 1], m, modh, modl)
    for d in range(da, db - 1, -1):
        ch = r[d, 0]
        cl = r[d, 1]
        if ch or cl:
            qh, ql = _gf_mul(ch, cl, ih, il, m, modh, modl)
            r[d, 0] = _U64(0)
            r[d, 1] = _U64(0)
            off = d - db
            for j in range(db):
                if b[j, 0] or b[j, 1]:
                    th, tl = _gf_mul(qh, ql, b[j, 0], b[j, 1], m, modh, modl)
                    r[off + j, 0] ^= th
                    r[off + j, 1] ^= tl
    dr = _poly_deg(r)
    if dr < 0:
        return r[:0].copy()
    return r[: dr + 1].copy()


@njit(cache=True)
def _poly_quot(a, b, m, modh, modl):
    # exact quotient of a by b (remainder known zero)
    da = a.shape[0] - 1
    db = b.shape[0] - 1
    q = np.zeros((da - db + 1, 2), dtype=np.uint64)
    r = a.copy()
    ih, il = _gf_inv(b[db, 0], b[db, 1], m, modh, modl)
    for d in range(da, db - 1, -1):
        ch = r[d, 0]
        cl = r[d, 1]
        if ch or cl:
            qh, ql = _gf_mul(ch, cl, ih, il, m, modh, modl)
            q[d - db, 0] = qh
            q[d - db, 1] = ql
            for j in range(db + 1):
                if b[j, 0] or b[j, 1]:
                    th, tl = _gf_mul(qh, ql, b[j, 0], b[j, 1], m, modh, modl)
                    r[d - db + j, 0] ^= th
                    r[d - db + j, 1] ^= tl
    return q


@njit(cache=True)
def _poly_gcd(a, b, m, modh, modl):
    x = a
    y = b
    while _poly_deg(y) >= 0:
        r = _poly_rem(x, y, m, modh, modl)
        x = y
        y = r
    d = _poly_deg(x)
    out = x[: d + 1].copy()
    lh = out[d, 0]
    ll = out[d, 1]
    if lh != _U64(0) or ll != _U64(1):
        ih, il = _gf_inv(lh, ll, m, modh, modl)
        for j in range(d + 1):
            h, l = _gf_mul(out[j, 0], out[j, 1], ih, il, m, modh, modl)
            out[j, 0] = h
            out[j, 1] = l
    return out


@njit(cache=True)
def _frob_table(f, m, modh, modl):
    # F[i] = z^(2^i) mod f for monic f; rows are coefficient vectors of deg < e
    e = f.shape[0] - 1
    out = np.zeros((m, e, 2), dtype=np.uint64)
    if e == 1:
        out[0, 0, 0] = f[0, 0]
        out[0, 0, 1] = f[0, 1]
    else:
        out[0, 1, 1] = _U64(1)
    work = np.zeros((2 * e - 1, 2), dtype=np.uint64)
    for i in range(1, m):
        for j in range(work.shape[0]):
            work[j, 0] = _U64(0)
            work[j, 1] = _U64(0)
        for j in range(e):
            if out[i - 1, j, 0] or out[i - 1, j, 1]:
                h, l = _gf_mul(
                    out[i - 1, j, 0], out[i - 1, j, 1], out[i - 1, j, 0], out[i - 1, j, 1], m, modh, modl
                )
                work[2 * j, 0] = h
                work[2 * j, 1] = l
        for d in range(2 * e - 2, e - 1, -1):
            ch = work[d, 0]
            cl = work[d, 1]
            if ch or cl:
                work[d, 0] = _U64(0)
                work[d, 1] = _U64(0)
                off = d - e
                for j in range(e):
                    if f[j, 0] or f[j, 1]:
                        th, tl = _gf_mul(ch, cl, f[j, 0], f[j, 1], m, modh, modl)
                        work[off + j, 0] ^= th
                        work[off + j, 1] ^= tl
        for j in range(e):
            out[i, j, 0] = work[j, 0]
            out[i, j, 1] = work[j, 1]
    return out


@njit(cache=True)
def _trace_comb(table, bh0, bl0, m, modh, modl):
    # sum over i of beta^(2^i) * F[i], the trace map Tr(beta z) reduced mod f
    e = table.shape[1]
    out = np.zeros((e, 2), dtype=np.uint64)
    bh = bh0
    bl = bl0
    for i in range(m):
        if i > 0:
            bh, bl = _gf_mul(bh, bl, bh, bl, m, modh, modl)
        for j in range(e):
            if table[i, j, 0] or table[i, j, 1]:
                th, tl = _gf_mul(bh, bl, table[i, j, 0], table[i, j, 1], m, modh, modl)
                out[j, 0] ^= th
                out[j, 1] ^= tl
    return out


def _to_limbs(v: int) -> tuple[int, int]:
    return (v >> 64) & 0xFFFFFFFFFFFFFFFF, v & 0xFFFFFFFFFFFFFFFF


def _from_limbs(h, l) -> int:
    return (int(h) << 64) | int(l)


class PinSketch:
    """Power-sum sketch over GF(2^m) decoding differences up to ``t``."""

    def __init__(self, m: int, t: int, force_python: bool = False):
        if not 2 <= m <= 126:
            raise ParameterError(f"field exponent {m} outside [2, 126]")
        if t < 1:
            raise ParameterError("capacity t must be positive")
        self.m = m
        self.t = t
        self.field = GF2m(m)
        self._python = force_python or not _HAVE_NUMBA
        mh, ml = _to_limbs(self.field.modulus)
        self._modh = _U64(mh)
        self._modl = _U64(ml)

    # -- sketching ---------------------------------------------------------

    def sketch(self, elements) -> list[int]:
        """Odd power sums s_1, s_3, ..., s_{2t-1} of a set of elements."""
        uniq = set()
        for v in elements:
            v = int(v)
            if not 1 <= v < (1 << self.m):
                raise ParameterError(f"element {v} outside [1, 2^{self.m})")
            uniq.add(v)
        if self._python:
            return self._py_syndromes(uniq)
        if not uniq:
            return [0] * self.t
        arr = np.zeros((len(uniq), 2), dtype=np.uint64)
        for i, v in enumerate(sorted(uniq)):
            h, l = _to_limbs(v)
            arr[i, 0] = h
            arr[i, 1] = l
        out = _syndromes_kernel(arr, self.t, self.m, self._modh, self._modl)
        return [_from_limbs(out[j, 0], out[j, 1]) for j in range(self.t)]

    @staticmethod
    def combine(a: list[int], b: list[int]) -> list[int]:
        if len(a) != len(b):
            raise ParameterError("sketch length mismatch")
        return [x ^ y for x, y in zip(a, b)]

    # -- decoding ----------------------------------------------------------

    def decode(self, synd: list[int]) -> set[int] | None:
        """Set whose sketch equals ``synd``, or None when none of size <= t fits."""
        if len(synd) != self.t:
            raise ParameterError("syndrome count mismatch")
        for v in synd:
            if not 0 <= int(v) < (1 << self.m):
                raise ParameterError("syndrome out of field range")
        if all(v == 0 for v in synd):
            return set()
        # full sequence S_1..S_2t: evens from squares of earlier entries
        full = [0] * (2 * self.t)
        for i in range(2 * self.t):
            idx = i + 1
            if idx % 2 == 1:
                full[i] = int(synd[idx // 2])
            else:
                half = full[idx // 2 - 1]
                full[i] = self.field.mul(half, half)
        if self._python:
            roots = self._py_locate(full)
        else:
            roots = self._nb_locate(full)
        if roots is None:
            return None
        if self.sketch(roots) != [int(v) for v in synd]:
            return None
        return set(roots)

    # -- numba path --------------------------------------------------------

    def _nb_locate(self, full: list[int]) -> list[int] | None:
        arr = np.zeros((len(full), 2), dtype=np.uint64)
        for i, v in enumerate(full):
            h, l = _to_limbs(v)
            arr[i, 0] = h
            arr[i, 1] = l
        c, big_l = _bm_kernel(arr, self.m, self._modh, self._modl)
        if big_l > self.t:
            return None
        deg = _poly_deg(c)
        if deg != big_l or big_l == 0:
            return None
        # reverse: roots of rev are the elements themselves, monic since c[0] = 1
        rev = np.ascontiguousarray(c[: big_l + 1][::-1])
        if rev[0, 0] == 0 and rev[0, 1] == 0:
            return None
        roots: list[int] = []
        stack = [rev]
        while stack:
            f = stack.pop()
            e = f.shape[0] - 1
            if e == 0:
                continue
            if e == 1:
                roots.append(_from_limbs(f[0, 0], f[0, 1]))
                continue
            table = _frob_table(f, self.m, self._modh, self._modl)
            split = None
            for i in range(self.m):
                bh, bl = _to_limbs(1 << i)
                tr = _trace_comb(table, _U64(bh), _U64(bl), self.m, self._modh, self._modl)
                dtr = _poly_deg(tr)
                if dtr < 0:
                    continue
                g = _poly_gcd(f, tr[: dtr + 1], self.m, self._modh, self._modl)
                dg = g.shape[0] - 1
                if 0 < dg < e:
                    split = g
                    break
            if split is None:
                return None
            q = _poly_quot(f, split, self.m, self._modh, self._modl)
            stack.append(split)
            stack.append(q)
        if len(roots) != big_l:
            return None
        return roots

    # -- python reference path ----------------------------------------------

    def _py_syndromes(self, elements) -> list[int]:
        gf = self.field
        out = [0] * self.t
        for v in elements:
            sq = gf.mul(v, v)
            p = v
            out[0] ^= p
            for j in range(1, self.t):
                p = gf.mul(p, sq)
                out[j] ^= p
        return out

    def _py_locate(self, full: list[int]) -> list[int] | None:
        gf = self.field
        c, big_l = _py_bm(full, gf)
        if big_l > self.t or len(c) - 1 != big_l or big_l == 0:
            return None
        rev = c[::-1]
        if rev[0] == 0:
            return None
        roots: list[int] = []
        stack = [rev]
        while stack:
            f = stack.pop()
            e = len(f) - 1
            if e == 0:
                continue
            if e == 1:
                roots.append(f[0])
                continue
            table = _py_frob(f, self.m, gf)
            split = None
            for i in range(self.m):
                tr = _py_trace(table, 1 << i, self.m, gf)
                if not tr:
                    continue
                g = _py_gcd(f, tr, gf)
                if 0 < len(g) - 1 < e:
                    split = g
                    break
            if split is None:
                return None
            q = _py_quot(f, split, gf)
            stack.append(split)
            stack.append(q)
        if len(roots) != big_l:
            return None
        return roots


def _py_trim(p: list[int]) -> list[int]:
    while p and p[-1] == 0:
        p.pop()
    return p


def _py_bm(synd: list[int], gf: GF2m) -> tuple[list[int], int]:
    c = [1]
    b = [1]
    big_l = 0
    mm = 1
    db = 1
    for i, s in enumerate(synd):
        d = s
        for j in range(1, big_l + 1):
            if j < len(c) and c[j]:
                d ^= gf.mul(c[j], synd[i - j])
        if d == 0:
            mm += 1
            continue
        coef = gf.mul(d, gf.inv(db))
        need = mm + len(b)
        if len(c) < need:
            c.extend([0] * (need - len(c)))
        if 2 * big_l <= i:
            prev = list(c)
            for j, bj in enumerate(b):
                if bj:
                    c[mm + j] ^= gf.mul(coef, bj)
            b = prev
            big_l = i + 1 - big_l
            db = d
            mm = 1
        else:
            for j, bj in enumerate(b):
                if bj:
                    c[mm + j] ^= gf.mul(coef, bj)
            mm += 1
    return _py_trim(c), big_l


def _py_rem(a: list[int], b: list[int], gf: GF2m) -> list[int]:
    r = list(a)
    db = len(b) - 1
    inv = gf.inv(b[-1])
    for d in range(len(r) - 1, db - 1, -1):
        if r[d]:
            q = gf.mul(r[d], inv)
            r[d] = 0
            for j in range(db):
                if b[j]:
                    r[d - db + j] ^= gf.mul(q, b[j])
    return _py_trim(r)


def _py_quot(a: list[int], b: list[int], gf: GF2m) -> list[int]:
    r = list(a)
    db = len(b) - 1
    q = [0] * (len(a) - db)
    inv = gf.inv(b[-1])
    for d in range(len(r) - 1, db - 1, -1):
        if r[d]:
            f = gf.mul(r[d], inv)
            q[d - db] = f
            for j in range(db + 1):
                if b[j]:
                    r[d - db + j] ^= gf.mul(f, b[j])
    return q


def _py_gcd(a: list[int], b: list[int], gf: GF2m) -> list[int]:
    x = list(a)
    y = list(b)
    while y:
        x, y = y, _py_rem(x, y, gf)
    inv = gf.inv(x[-1])
    return [gf.mul(v, inv) for v in x]


def _py_frob(f: list[int], m: int, gf: GF2m) -> list[list[int]]:
    e = len(f) - 1
    if e == 1:
        cur = [f[0]]
    else:
        cur = [0, 1] + [0] * (e - 2)
    table = [list(cur)]
    for _ in range(1, m):
        sq = [0] * (2 * e - 1)
        for j, v in enumerate(cur):
            if v:
                sq[2 * j] = gf.mul(v, v)
        cur = _py_rem(sq, f, gf)
        cur.extend([0] * (e - len(cur)))
        table.append(list(cur))
    return table


def _py_trace(table: list[list[int]], beta: int, m: int, gf: GF2m) -> list[int]:
    e = len(table[0])
    out = [0] * e
    b = beta
    for i in range(m):
        if i > 0:
            b = gf.mul(b, b)
        row = table[i]
        for j in range(e):
            if row[j]:
                out[j] ^= gf.mul(b, row[j])
    return _py_trim(out)


__all__ = ["PinSketch"]
