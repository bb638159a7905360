"""Bit strings, edit-distance oracles, edit scripts, and the adversarial channel.

All public positions are 1-indexed and slices are inclusive, so
``x.substring(i, j)`` has length ``j - i + 1``. Within storage the lowest
string index sits in the least significant bit of each byte; serialized bit
files are bit-exact under that rule.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, RangeError, ScriptInvalidError

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


class BitString:
    """Immutable sequence of bits with explicit length."""

    __slots__ = ("_bits", "_key")

    def __init__(self, bits=()):
        arr = np.array(bits, dtype=np.uint8, copy=True).ravel()
        if arr.size and arr.max() > 1:
            raise ParameterError("bits must be 0 or 1")
        arr.setflags(write=False)
        self._bits = arr
        self._key = None

    @classmethod
    def _wrap(cls, arr: np.ndarray) -> "BitString":
        obj = cls.__new__(cls)
        arr.setflags(write=False)
        obj._bits = arr
        obj._key = None
        return obj

    @classmethod
    def from_str(cls, s: str) -> "BitString":
        return cls(np.frombuffer(s.encode("ascii"), dtype=np.uint8) - ord("0"))

    @classmethod
    def zeros(cls, n: int) -> "BitString":
        return cls._wrap(np.zeros(n, dtype=np.uint8))

    @classmethod
    def random(cls, n: int, rng: np.random.Generator) -> "BitString":
        return cls._wrap(rng.integers(0, 2, size=n, dtype=np.uint8))

    @property
    def len(self) -> int:
        return int(self._bits.size)

    def __len__(self) -> int:
        return int(self._bits.size)

    def bits(self) -> np.ndarray:
        """Read-only uint8 array view, one byte per bit."""
        return self._bits

    def __getitem__(self, i: int) -> int:
        if not 1 <= i <= self.len:
            raise RangeError(f"bit index {i} outside [1, {self.len}]")
        return int(self._bits[i - 1])

    def substring(self, i: int, j: int) -> "BitString":
        """x[i, j] inclusive; j = i - 1 yields the empty string."""
        if not (1 <= i <= j + 1 <= self.len + 1):
            raise RangeError(f"substring [{i}, {j}] outside [1, {self.len}]")
        return BitString._wrap(self._bits[i - 1 : j].copy())

    def concat(self, other: "BitString") -> "BitString":
        return BitString._wrap(np.concatenate([self._bits, other._bits]))

    def xor(self, other: "BitString") -> "BitString":
        if self.len != other.len:
            raise ParameterError("xor requires equal lengths")
        return BitString._wrap(np.bitwise_xor(self._bits, other._bits))

    def to01(self) -> str:
        return (self._bits + ord("0")).tobytes().decode("ascii")

    def _bytes_key(self) -> bytes:
        if self._key is None:
            self._key = self._bits.tobytes()
        return self._key

    def __eq__(self, other) -> bool:
        if not isinstance(other, BitString):
            return NotImplemented
        return self.len == other.len and self._bytes_key() == other._bytes_key()

    def __hash__(self) -> int:
        return hash((self.len, self._bytes_key()))

    def __repr__(self) -> str:
        if self.len <= 64:
            return f"BitString('{self.to01()}')"
        return f"BitString(len={self.len})"


@njit(cache=True)
def _lcs_kernel(a, b):
    la = a.size
    lb = b.size
    prev = np.zeros(lb + 1, dtype=np.int32)
    cur = np.zeros(lb + 1, dtype=np.int32)
    for i in range(1, la + 1):
        ai = a[i - 1]
        cur[0] = 0
        for j in range(1, lb + 1):
            if ai == b[j - 1]:
                cur[j] = prev[j - 1] + 1
            else:
                x = prev[j]
                y = cur[j - 1]
                cur[j] = x if x > y else y
        t = prev
        prev = cur
        cur = t
    return prev[lb]


@njit(cache=True)
def _ed_kernel(a, b):
    la = a.size
    lb = b.size
    prev = np.empty(lb + 1, dtype=np.int32)
    cur = np.empty(lb + 1, dtype=np.int32)
    for j in range(lb + 1):
        prev[j] = j
    for i in range(1, la + 1):
        ai = a[i - 1]
        cur[0] = i
        for j in range(1, lb + 1):
            if ai == b[j - 1]:
                cur[j] = prev[j - 1]
            else:
                x = prev[j]
                y = cur[j - 1]
                cur[j] = (x if x < y else y) + 1
        t = prev
        prev = cur
        cur = t
    return prev[lb]


@njit(cache=True)
def _ed_banded_kernel(a, b, t):
    # Insert/delete DP restricted to |i - j - (la - lb) shifts| within the
    # budget band; exact when the true distance is <= t, else returns t + 1.
    la = a.size
    lb = b.size
    if abs(la - lb) > t:
        return t + 1
    big = t + 1
    width = 2 * t + 1
    prev = np.full(width + 2, big, dtype=np.int32)
    cur = np.full(width + 2, big, dtype=np.int32)
    # column j maps to slot j - i + t + 1 in each row buffer
    for j in range(0, min(lb, t) + 1):
        prev[j + t + 1] = j
    for i in range(1, la + 1):
        for s in range(width + 2):
            cur[s] = big
        jlo = i - t
        if jlo < 0:
            jlo = 0
        jhi = i + t
        if jhi > lb:
            jhi = lb
        ai = a[i - 1]
        for j in range(jlo, jhi + 1):
            s = j - i + t + 1
            best = big
            if j > 0 and ai == b[j - 1]:
                best = prev[s]
            up = prev[s + 1]
            if up + 1 < best:
                best = up + 1
            if j > 0:
                left = cur[s - 1]
                if left + 1 < best:
                    best = left + 1
            elif j == 0:
                best = i if i <= best else best
            cur[s] = best if best < big else big
        t2 = prev
        prev = cur
        cur = t2
    res = prev[lb - la + t + 1]
    return res if res <= t else t + 1


def lcs(a: BitString, b: BitString) -> int:
    """Length of the longest common subsequence."""
    if a.len == 0 or b.len == 0:
        return 0
    return int(_lcs_kernel(a.bits(), b.bits()))


def edit_distance(a: BitString, b: BitString) -> int:
    """Minimum insertions plus deletions transforming a into b."""
    if a.len == 0:
        return b.len
    if b.len == 0:
        return a.len
    return int(_ed_kernel(a.bits(), b.bits()))


def edit_distance_at_most(a: BitString, b: BitString, t: int) -> int:
    """Exact edit distance when it is <= t, else t + 1."""
    if t < 0:
        raise ParameterError("band must be non-negative")
    if a.len == 0 or b.len == 0:
        d = a.len + b.len
        return d if d <= t else t + 1
    return int(_ed_banded_kernel(a.bits(), b.bits(), int(t)))


@dataclass(frozen=True)
class EditOp:
    kind: str  # "insert" or "delete"
    pos: int  # 1-indexed at application time
    bit: int = 0


@dataclass(frozen=True)
class EditScript:
    ops: tuple

    @property
    def cost(self) -> int:
        return len(self.ops)


def apply_edits(x: BitString, script: EditScript) -> BitString:
    """Apply ops left to right; each position is checked at application time."""
    work = list(x.bits())
    for op in script.ops:
        if op.kind == "insert":
            # insert at pos shifts the current bit at pos rightward;
            # pos = len + 1 appends
            if not 1 <= op.pos <= len(work) + 1:
                raise ScriptInvalidError(f"insert at {op.pos} in length {len(work)}")
            work.insert(op.pos - 1, op.bit & 1)
        elif op.kind == "delete":
            if not 1 <= op.pos <= len(work):
                raise ScriptInvalidError(f"delete at {op.pos} in length {len(work)}")
            del work[op.pos - 1]
        else:
            raise ScriptInvalidError(f"unknown op kind {op.kind!r}")
    return BitString(work)


CHANNEL_STRATEGIES = ("random", "prefix_del", "suffix_ins", "block_shift", "worst_seeded")


def _random_script(x: BitString, k: int, rng: np.random.Generator) -> EditScript:
    ops = []
    cur = x.len
    for _ in range(k):
        if cur == 0 or rng.integers(0, 2) == 1:
            pos = int(rng.integers(1, cur + 2))
            ops.append(EditOp("insert", pos, int(rng.integers(0, 2))))
            cur += 1
        else:
            pos = int(rng.integers(1, cur + 1))
            ops.append(EditOp("delete", pos))
            cur -= 1
    return EditScript(tuple(ops))


def _block_shift_script(x: BitString, k: int, rng: np.random.Generator) -> EditScript:
    # move d = k//2 consecutive bits elsewhere: d deletes + d inserts <= k edits
    d = k // 2
    if d == 0:
        pos = int(rng.integers(1, x.len + 1))
        return EditScript((EditOp("delete", pos),))
    d = min(d, x.len)
    src = int(rng.integers(1, x.len - d + 2))
    moved = [x[src + i] for i in range(d)]
    ops = [EditOp("delete", src) for _ in range(d)]
    dst = int(rng.integers(1, x.len - d + 2))
    for i, bit in enumerate(moved):
        ops.append(EditOp("insert", dst + i, bit))
    return EditScript(tuple(ops))


def _worst_seeded_script(x: BitString, k: int, rng: np.random.Generator) -> EditScript:
    # clustered edits that duplicate local content, the regime where matching
    # sees the most collisions
    ops = []
    cur = x.len
    center = int(rng.integers(1, cur + 1))
    for i in range(k):
        if cur > 0 and i % 2 == 0:
            pos = min(max(1, center), cur)
            ops.append(EditOp("insert", pos, x[min(max(1, center), x.len)]))
            cur += 1
        elif cur > 0:
            pos = min(max(1, center + i), cur)
            ops.append(EditOp("delete", pos))
            cur -= 1
        else:
            ops.append(EditOp("insert", 1, int(rng.integers(0, 2))))
            cur += 1
    return EditScript(tuple(ops))


def channel_script(x: BitString, k: int, strategy: str, seed: int) -> EditScript:
    """Deterministic adversarial edit script with at most k operations."""
    if k < 0:
        raise ParameterError("edit budget must be non-negative")
    if strategy not in CHANNEL_STRATEGIES:
        raise ParameterError(f"unknown strategy {strategy!r}")
    if k == 0:
        return EditScript(())
    rng = np.random.Generator(np.random.PCG64(seed))
    if strategy == "prefix_del":
        kk = min(k, x.len)
        return EditScript(tuple(EditOp("delete", 1) for _ in range(kk)))
    if strategy == "suffix_ins":
        return EditScript(
            tuple(
                EditOp("insert", x.len + 1 + i, int(rng.integers(0, 2)))
                for i in range(k)
            )
        )
    if strategy == "random":
        return _random_script(x, k, rng)
    if strategy == "block_shift":
        return _block_shift_script(x, k, rng)
    return _worst_seeded_script(x, k, rng)


def adversarial_channel(x: BitString, k: int, strategy: str, seed: int) -> BitString:
    """Apply a deterministic adversarial script; ED(x, result) <= k."""
    return apply_edits(x, channel_script(x, k, strategy, seed))


def write_bit_file(path, bs: BitString) -> None:
    """Length-prefixed raw bit file: u64 LE bit count then packed bytes."""
    with open(path, "wb") as fh:
        fh.write(np.uint64(bs.len).tobytes())
        fh.write(np.packbits(bs.bits(), bitorder="little").tobytes())


def read_bit_file(path) -> BitString:
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < 8:
        raise ParameterError(f"{path}: truncated bit file")
    n = int(np.frombuffer(raw[:8], dtype=np.uint64)[0])
    need = (n + 7) // 8
    body = raw[8:]
    if len(body) < need:
        raise ParameterError(f"{path}: bit file shorter than its header claims")
    bits = np.unpackbits(
        np.frombuffer(body[:need], dtype=np.uint8), bitorder="little"
    )[:n]
    return BitString(bits)


class BitWriter:
    """LSB-first bit accumulator used by all sketch serializers."""

    def __init__(self):
        self._chunks = []
        self._acc = 0
        self._nacc = 0

    def write(self, value: int, nbits: int) -> None:
        if nbits < 0 or (nbits < value.bit_length()):
            raise ParameterError(f"value {value} does not fit in {nbits} bits")
        self._acc |= (value & ((1 << nbits) - 1)) << self._nacc
        self._nacc += nbits
        while self._nacc >= 8:
            self._chunks.append(self._acc & 0xFF)
            self._acc >>= 8
            self._nacc -= 8

    def write_bits(self, arr: np.ndarray) -> None:
        for b in arr:
            self.write(int(b), 1)

    @property
    def bit_length(self) -> int:
        return len(self._chunks) * 8 + self._nacc

    def getvalue(self) -> bytes:
        tail = bytes([self._acc & 0xFF]) if self._nacc else b""
        return bytes(self._chunks) + tail


class BitReader:
    def __init__(self, data: bytes):
        self._data = data
        self._pos = 0  # bit cursor

    def read(self, nbits: int) -> int:
        end = self._pos + nbits
        if end > len(self._data) * 8:
            raise ParameterError("bit reader ran past end of data")
        value = 0
        got = 0
        pos = self._pos
        while got < nbits:
            byte = self._data[pos >> 3]
            off = pos & 7
            take = min(8 - off, nbits - got)
            value |= ((byte >> off) & ((1 << take) - 1)) << got
            got += take
            pos += take
        self._pos = end
        return value

    def read_bits(self, nbits: int) -> np.ndarray:
        out = np.empty(nbits, dtype=np.uint8)
        for i in range(nbits):
            out[i] = self.read(1)
        return out

    @property
    def bits_left(self) -> int:
        return len(self._data) * 8 - self._pos
