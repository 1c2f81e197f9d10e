"""GF(2) vectors, matrices, affine solution spaces and bit permutations.

Bit ``i`` of a vector is stored as bit ``i`` of a Python integer, so index 0 is
the leftmost character of the canonical bit string and the least significant
bit of the integer.  Concatenation ``a ∘ b`` places ``a`` in the low bits.

The low-level helpers (``parity``, ``popcount``, ``mask``) accept either a
Python ``int`` or a numpy ``uint64`` array so the same kernels drive scalar
evaluation and whole-domain enumeration.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np

__all__ = [
    "AffineSpace",
    "BitMatrix",
    "BitVector",
    "Permutation",
    "apply_perm",
    "invert_perm",
    "mask",
    "parity",
    "popcount",
    "rank",
    "rank_many",
    "row_reduce",
    "sample_affine",
    "sample_affine_many",
    "solve_affine",
    "xor",
]


def mask(n: int) -> int:
    return (1 << n) - 1


def popcount(x):
    if isinstance(x, np.ndarray):
        return np.bitwise_count(x)
    return int(x).bit_count()


def parity(x):
    if isinstance(x, np.ndarray):
        return np.bitwise_count(x).astype(np.uint64) & np.uint64(1)
    return int(x).bit_count() & 1


@dataclass(frozen=True)
class BitVector:
    """An immutable GF(2) vector of ``length`` bits packed into ``value``."""

    value: int
    length: int

    def __post_init__(self) -> None:
        if self.length < 0:
            raise ValueError("length must be non-negative")
        if self.value < 0 or self.value >> self.length:
            raise ValueError(f"value does not fit in {self.length} bits")

    @classmethod
    def zeros(cls, length: int) -> "BitVector":
        return cls(0, length)

    @classmethod
    def from_bits(cls, bits: Iterable[int]) -> "BitVector":
        value = 0
        n = 0
        for n, b in enumerate(bits, start=1):
            if b not in (0, 1):
                raise ValueError(f"bit {n - 1} is not 0 or 1")
            value |= int(b) << (n - 1)
        return cls(value, n)

    @classmethod
    def from_str(cls, s: str) -> "BitVector":
        """Parse a canonical bit string such as ``"10110"`` (index 0 first)."""
        return cls.from_bits(int(c) for c in s)

    @classmethod
    def from_text(cls, text: str) -> "BitVector":
        """Parse the ``len:hex`` text form."""
        head, sep, digits = text.strip().partition(":")
        if not sep:
            raise ValueError(f"missing ':' in vector text {text!r}")
        try:
            length = int(head, 10)
        except ValueError:
            raise ValueError(f"bad length field {head!r}") from None
        if length < 0:
            raise ValueError(f"bad length field {head!r}")
        if not digits:
            raise ValueError("empty hex field")
        try:
            value = int(digits, 16)
        except ValueError:
            raise ValueError(f"bad hex field {digits!r}") from None
        if value >> length:
            raise ValueError(f"hex field {digits!r} exceeds {length} bits")
        return cls(value, length)

    @classmethod
    def random(cls, length: int, rng: np.random.Generator) -> "BitVector":
        return cls(random_int(length, rng), length)

    def to_text(self) -> str:
        width = max(1, (self.length + 3) // 4)
        return f"{self.length}:{self.value:0{width}x}"

    def bits(self) -> list[int]:
        return [(self.value >> i) & 1 for i in range(self.length)]

    def __str__(self) -> str:
        return "".join(str(b) for b in self.bits())

    def __len__(self) -> int:
        return self.length

    def __getitem__(self, i: int) -> int:
        if not -self.length <= i < self.length:
            raise IndexError(i)
        return (self.value >> (i % self.length)) & 1

    def __xor__(self, other: "BitVector") -> "BitVector":
        return xor(self, other)

    def concat(self, *others: "BitVector") -> "BitVector":
        value, length = self.value, self.length
        for o in others:
            value |= o.value << length
            length += o.length
        return BitVector(value, length)

    def prefix(self, n: int) -> "BitVector":
        if not 0 <= n <= self.length:
            raise ValueError(f"prefix length {n} outside [0, {self.length}]")
        return BitVector(self.value & mask(n), n)

    def sub(self, start: int, n: int) -> "BitVector":
        if start < 0 or n < 0 or start + n > self.length:
            raise ValueError("sub-range out of bounds")
        return BitVector((self.value >> start) & mask(n), n)

    def weight(self) -> int:
        return self.value.bit_count()


def random_int(length: int, rng: np.random.Generator) -> int:
    """Uniform integer of ``length`` bits drawn from ``rng``."""
    if length <= 0:
        return 0
    nbytes = (length + 7) // 8
    raw = int.from_bytes(rng.bytes(nbytes), "little")
    return raw & mask(length)


def xor(a: BitVector, b: BitVector) -> BitVector:
    if a.length != b.length:
        raise ValueError(f"length mismatch: {a.length} vs {b.length}")
    return BitVector(a.value ^ b.value, a.length)


@dataclass(frozen=True)
class BitMatrix:
    """Row-major GF(2) matrix; ``rows[i]`` packs row ``i`` with column j at bit j."""

    rows: tuple[int, ...]
    ncols: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "rows", tuple(int(r) for r in self.rows))
        for i, r in enumerate(self.rows):
            if r < 0 or r >> self.ncols:
                raise ValueError(f"row {i} has bits beyond column {self.ncols}")

    @property
    def nrows(self) -> int:
        return len(self.rows)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nrows, self.ncols)

    @classmethod
    def identity(cls, n: int) -> "BitMatrix":
        return cls(tuple(1 << i for i in range(n)), n)

    @classmethod
    def zero(cls, nrows: int, ncols: int) -> "BitMatrix":
        return cls((0,) * nrows, ncols)

    @classmethod
    def from_columns(cls, cols: Sequence[int], nrows: int) -> "BitMatrix":
        rows = [0] * nrows
        for j, c in enumerate(cols):
            for i in range(nrows):
                if (c >> i) & 1:
                    rows[i] |= 1 << j
        return cls(tuple(rows), len(cols))

    @classmethod
    def from_array(cls, arr) -> "BitMatrix":
        a = np.asarray(arr, dtype=np.uint8) & 1
        nrows, ncols = a.shape
        rows = tuple(int(sum(int(a[i, j]) << j for j in range(ncols))) for i in range(nrows))
        return cls(rows, ncols)

    @classmethod
    def random(cls, nrows: int, ncols: int, rng: np.random.Generator) -> "BitMatrix":
        return cls(tuple(random_int(ncols, rng) for _ in range(nrows)), ncols)

    def to_array(self) -> np.ndarray:
        return np.array(
            [[(r >> j) & 1 for j in range(self.ncols)] for r in self.rows], dtype=np.uint8
        ).reshape(self.nrows, self.ncols)

    def column(self, j: int) -> int:
        return sum(((r >> j) & 1) << i for i, r in enumerate(self.rows))

    def transpose(self) -> "BitMatrix":
        return BitMatrix(tuple(self.column(j) for j in range(self.ncols)), self.nrows)

    def select_rows(self, idx: Iterable[int]) -> "BitMatrix":
        return BitMatrix(tuple(self.rows[i] for i in idx), self.ncols)

    def apply_raw(self, x):
        """Matrix-vector product on packed ints or uint64 arrays."""
        out = 0
        for i, r in enumerate(self.rows):
            if r:
                out = out | (parity(x & r) << i)
        if isinstance(x, np.ndarray) and not isinstance(out, np.ndarray):
            out = np.zeros_like(x)
        return out

    def __matmul__(self, v: BitVector) -> BitVector:
        if v.length != self.ncols:
            raise ValueError(f"vector length {v.length} != ncols {self.ncols}")
        return BitVector(self.apply_raw(v.value), self.nrows)


def row_reduce(rows: Sequence[int], ncols: int) -> tuple[list[int], list[int]]:
    """Reduced row echelon form over GF(2) with lowest-index pivots.

    Returns the nonzero reduced rows and their pivot columns, both ordered by
    pivot column.  Columns at or beyond ``ncols`` are carried along but never
    chosen as pivots, which is how augmented systems are handled.
    """
    work = [int(r) for r in rows]
    pivots: list[int] = []
    out: list[int] = []
    for col in range(ncols):
        bit = 1 << col
        hit = next((k for k, r in enumerate(work) if r & bit), None)
        if hit is None:
            continue
        prow = work.pop(hit)
        work = [r ^ prow if r & bit else r for r in work]
        out = [r ^ prow if r & bit else r for r in out]
        out.append(prow)
        pivots.append(col)
    return out, pivots


def rank(m: BitMatrix) -> int:
    return len(row_reduce(m.rows, m.ncols)[1])


def rank_many(vectors: np.ndarray, width: int) -> np.ndarray:
    """Rank of each row-set in a ``(groups, count)`` array of ``width``-bit vectors."""
    work = np.array(vectors, dtype=np.uint64, copy=True)
    if work.ndim != 2:
        raise ValueError("expected a (groups, count) array")
    out = np.zeros(work.shape[0], dtype=np.int64)
    if work.shape[1] == 0:
        return out
    rows = np.arange(work.shape[0])
    for col in range(width):
        has = ((work >> np.uint64(col)) & np.uint64(1)).astype(bool)
        found = has.any(axis=1)
        pivot = work[rows, has.argmax(axis=1)]
        # the pivot row cancels itself, so it never pivots again
        work ^= np.where(has & found[:, None], pivot[:, None], np.uint64(0))
        out += found
    return out


@dataclass(frozen=True)
class AffineSpace:
    """The set ``offset + span(basis)`` inside ``{0,1}^ambient_len``."""

    offset: BitVector
    basis: tuple[BitVector, ...]
    ambient_len: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "basis", tuple(self.basis))
        if self.offset.length != self.ambient_len:
            raise ValueError("offset length differs from ambient length")
        if any(b.length != self.ambient_len for b in self.basis):
            raise ValueError("basis vector length differs from ambient length")
        if len(row_reduce([b.value for b in self.basis], self.ambient_len)[1]) != len(self.basis):
            raise ValueError("basis vectors are linearly dependent")

    @property
    def dim(self) -> int:
        return len(self.basis)

    @property
    def size(self) -> int:
        return 1 << self.dim

    def contains(self, v: BitVector) -> bool:
        if v.length != self.ambient_len:
            return False
        diff = v.value ^ self.offset.value
        reduced, pivots = row_reduce([b.value for b in self.basis], self.ambient_len)
        for r, p in zip(reduced, pivots):
            if (diff >> p) & 1:
                diff ^= r
        return diff == 0

    def point(self, coeffs: int) -> BitVector:
        """The member selected by the coefficient bit mask ``coeffs``."""
        value = self.offset.value
        for j, b in enumerate(self.basis):
            if (coeffs >> j) & 1:
                value ^= b.value
        return BitVector(value, self.ambient_len)

    def elements(self) -> Iterator[BitVector]:
        for c in range(self.size):
            yield self.point(c)


def solve_affine(m: BitMatrix, y: BitVector) -> AffineSpace | None:
    """All ``x`` with ``m @ x == y``; ``None`` when the system is inconsistent."""
    if y.length != m.nrows:
        raise ValueError(f"right-hand side has {y.length} bits, matrix has {m.nrows} rows")
    n = m.ncols
    aug = [r | (((y.value >> i) & 1) << n) for i, r in enumerate(m.rows)]
    reduced, pivots = row_reduce(aug, n)
    # a zero row with a set augmented bit never gets a pivot, so scan the rest
    pivot_set = set(pivots)
    residual = [r for r in _reduce_all(aug, reduced, pivots) if r]
    if any(r >> n for r in residual):
        return None
    offset = 0
    for r, p in zip(reduced, pivots):
        if (r >> n) & 1:
            offset |= 1 << p
    basis = []
    for f in range(n):
        if f in pivot_set:
            continue
        v = 1 << f
        for r, p in zip(reduced, pivots):
            if (r >> f) & 1:
                v |= 1 << p
        basis.append(BitVector(v, n))
    return AffineSpace(BitVector(offset, n), tuple(basis), n)


def _reduce_all(rows: Sequence[int], reduced: Sequence[int], pivots: Sequence[int]) -> list[int]:
    out = []
    for r in rows:
        for pr, p in zip(reduced, pivots):
            if (r >> p) & 1:
                r ^= pr
        out.append(r)
    return out


def sample_affine(space: AffineSpace, rng: np.random.Generator) -> BitVector:
    if space is None:
        raise ValueError("cannot sample from an empty solution set")
    return space.point(random_int(space.dim, rng))


def sample_affine_many(space: AffineSpace, count: int, rng: np.random.Generator) -> np.ndarray:
    """``count`` independent uniform members as a uint64 array (ambient ≤ 64)."""
    if space is None:
        raise ValueError("cannot sample from an empty solution set")
    if space.ambient_len > 64:
        raise ValueError("vectorized sampling needs ambient length ≤ 64")
    out = np.full(count, space.offset.value, dtype=np.uint64)
    for b in space.basis:
        pick = rng.integers(0, 2, size=count, dtype=np.uint64)
        out ^= pick * np.uint64(b.value)
    return out


@dataclass(frozen=True)
class Permutation:
    """Bijection on ``range(len(map))``; applying it sends bit i to ``map[i]``."""

    map: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "map", tuple(int(i) for i in self.map))
        if sorted(self.map) != list(range(len(self.map))):
            raise ValueError("permutation map is not a bijection")

    def __len__(self) -> int:
        return len(self.map)

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        return cls(tuple(range(n)))

    @classmethod
    def random(cls, n: int, rng: np.random.Generator) -> "Permutation":
        return cls(tuple(int(i) for i in rng.permutation(n)))

    def apply_raw(self, v):
        out = 0
        for i, p in enumerate(self.map):
            out = out | (((v >> i) & 1) << p)
        if isinstance(v, np.ndarray) and not isinstance(out, np.ndarray):
            out = np.zeros_like(v)
        return out


def apply_perm(p: Permutation, v: BitVector) -> BitVector:
    if len(p) != v.length:
        raise ValueError(f"permutation over {len(p)} points applied to {v.length} bits")
    return BitVector(p.apply_raw(v.value), v.length)


def invert_perm(p: Permutation) -> Permutation:
    inv = [0] * len(p)
    for i, q in enumerate(p.map):
        inv[q] = i
    return Permutation(tuple(inv))
