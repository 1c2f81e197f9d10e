"""Seeded extractors, samplers, the inner-product extractor and a condenser.

Two seeded families are provided:

* ``strong-hash``: ``x ↦ low m_out bits of a·x̂`` in GF(2^L), where ``x̂`` is x
  with an extra set bit at position ``n_in`` and ``a`` is derived from the
  seed.  With ``d = L`` the seed is ``a`` itself and the family is universal,
  so the leftover-hash bound applies.
* ``linear-multiplicative`` / ``fixed-rank-invertible``: ``x ↦ low m_out bits of
  a·x`` in GF(2^n_in).  Linear in x for every seed; rank m_out whenever a ≠ 0.

When ``d`` is smaller than the field degree, the seed ``s`` is embedded as the
element ``c·(s + X^d)`` for a fixed dense constant ``c``.  The embedding is
injective and never zero, and the dense factor keeps each output bit
dependent on many input bits even for tiny seeds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from enum import Enum
from typing import Sequence

import numpy as np

from .bitlin import AffineSpace, BitMatrix, BitVector, mask, solve_affine
from .field2m import FieldElem, FieldSpec, as_linear_map, default_field, gf_mul

__all__ = [
    "CondenserSpec",
    "ExtractorKind",
    "SampleIndexSet",
    "SeededExtractorSpec",
    "SomewhereRandomMatrix",
    "condense",
    "ext_strong",
    "ip_extract",
    "lext_linear",
    "lext_preimage",
    "samp",
    "spread_constant",
]


class ExtractorKind(str, Enum):
    STRONG_HASH = "strong-hash"
    LINEAR = "linear-multiplicative"
    FIXED_RANK = "fixed-rank-invertible"


@dataclass(frozen=True)
class SeededExtractorSpec:
    n_in: int
    d: int
    m_out: int
    kind: ExtractorKind = ExtractorKind.FIXED_RANK
    k_min: int | None = None
    eps: float | None = None
    modulus: int | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", ExtractorKind(self.kind))
        if min(self.n_in, self.d, self.m_out) < 0:
            raise ValueError("extractor lengths must be non-negative")
        if self.k_min is None:
            # implicit threshold: full entropy; tiny sampler sources may fall short
            object.__setattr__(self, "k_min", self.n_in)
        elif self.m_out > self.k_min:
            raise ValueError(f"m_out = {self.m_out} exceeds k_min = {self.k_min}")
        if self.kind is not ExtractorKind.STRONG_HASH:
            if self.n_in < 1:
                raise ValueError("linear extractors need n_in ≥ 1")
            if self.d > self.n_in:
                raise ValueError(f"seed length {self.d} exceeds field degree {self.n_in}")
            if self.m_out > self.n_in:
                raise ValueError(f"m_out = {self.m_out} exceeds n_in = {self.n_in}")
        if self.eps is None and self.kind is ExtractorKind.STRONG_HASH and not self.entropy_deficient:
            object.__setattr__(self, "eps", 2.0 ** (-(self.k_min - self.m_out) / 2))
        # resolve the field eagerly so reports name the exact instantiation
        self.field

    @property
    def entropy_deficient(self) -> bool:
        """True when the output is longer than the min-entropy threshold."""
        return self.m_out > self.k_min

    @property
    def degree(self) -> int:
        if self.kind is ExtractorKind.STRONG_HASH:
            return max(self.n_in + 1, self.m_out, self.d)
        return self.n_in

    @property
    def field(self) -> FieldSpec:
        if self.modulus is not None:
            return FieldSpec(self.degree, self.modulus)
        return default_field(self.degree)

    @property
    def seed_count(self) -> int:
        return 1 << self.d

    def seed_element(self, seed):
        """Field element used for ``seed`` (int or uint64 array)."""
        if self.d < self.degree:
            f = self.field
            marked = seed | (np.uint64(1 << self.d) if isinstance(seed, np.ndarray) else 1 << self.d)
            return gf_mul(marked, spread_constant(f.m), f.m, f.modulus)
        return seed

    def to_json(self) -> dict:
        out = {"n_in": self.n_in, "d": self.d, "m_out": self.m_out, "kind": self.kind.value}
        if self.k_min != self.n_in:
            out["k_min"] = self.k_min
        if self.eps is not None:
            out["eps"] = self.eps
        if self.modulus is not None:
            out["modulus"] = f"{self.modulus:x}"
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "SeededExtractorSpec":
        mod = obj.get("modulus")
        return cls(
            n_in=int(obj["n_in"]),
            d=int(obj["d"]),
            m_out=int(obj["m_out"]),
            kind=ExtractorKind(obj.get("kind", ExtractorKind.FIXED_RANK.value)),
            k_min=obj.get("k_min"),
            eps=obj.get("eps"),
            modulus=int(mod, 16) if mod else None,
        )


_SPREAD_WORD = 0x9E3779B97F4A7C15  # binary expansion of the golden ratio


@lru_cache(maxsize=None)
def spread_constant(m: int) -> int:
    """Fixed dense nonzero element of GF(2^m) used by the seed embedding."""
    reps = (m + 63) // 64
    word = int.from_bytes(_SPREAD_WORD.to_bytes(8, "little") * reps, "little")
    return (word & mask(m)) | 1


def _check_len(v: BitVector, n: int, what: str) -> None:
    if v.length != n:
        raise ValueError(f"{what} has {v.length} bits, expected {n}")


# raw kernels: ints or uint64 arrays in, same out


def ext_strong_raw(spec: SeededExtractorSpec, x, seed):
    f = spec.field
    marker = 1 << spec.n_in
    xh = x | (np.uint64(marker) if isinstance(x, np.ndarray) else marker)
    prod = gf_mul(xh, spec.seed_element(seed), f.m, f.modulus)
    return prod & (np.uint64(mask(spec.m_out)) if isinstance(prod, np.ndarray) else mask(spec.m_out))


def lext_raw(spec: SeededExtractorSpec, x, seed):
    f = spec.field
    prod = gf_mul(x, spec.seed_element(seed), f.m, f.modulus)
    return prod & (np.uint64(mask(spec.m_out)) if isinstance(prod, np.ndarray) else mask(spec.m_out))


def ext_strong(spec: SeededExtractorSpec, x: BitVector, seed: BitVector) -> BitVector:
    if spec.kind is not ExtractorKind.STRONG_HASH:
        raise ValueError("ext_strong needs a strong-hash spec")
    _check_len(x, spec.n_in, "source")
    _check_len(seed, spec.d, "seed")
    return BitVector(ext_strong_raw(spec, x.value, seed.value), spec.m_out)


def lext_linear(spec: SeededExtractorSpec, x: BitVector, seed: BitVector) -> BitVector:
    if spec.kind is ExtractorKind.STRONG_HASH:
        raise ValueError("lext_linear needs a linear spec")
    _check_len(x, spec.n_in, "source")
    _check_len(seed, spec.d, "seed")
    if spec.kind is ExtractorKind.FIXED_RANK and spec.seed_element(seed.value) == 0:
        raise ValueError("zero seed is not admissible for a fixed-rank extractor")
    return BitVector(lext_raw(spec, x.value, seed.value), spec.m_out)


def linear_map(spec: SeededExtractorSpec, seed: int) -> BitMatrix:
    """The matrix of ``lext_linear(spec, ·, seed)``."""
    a = spec.seed_element(int(seed))
    if spec.m_out == 0:
        return BitMatrix((), spec.n_in)
    return as_linear_map(FieldElem(spec.field, a), spec.m_out)


def lext_preimage(spec: SeededExtractorSpec, seed: BitVector, y: BitVector) -> AffineSpace:
    if spec.kind is not ExtractorKind.FIXED_RANK:
        raise ValueError("pre-images are only defined for fixed-rank extractors")
    _check_len(seed, spec.d, "seed")
    _check_len(y, spec.m_out, "target")
    if spec.seed_element(seed.value) == 0:
        raise ValueError("zero seed is not admissible for a fixed-rank extractor")
    space = solve_affine(linear_map(spec, seed.value), y)
    assert space is not None  # full row rank: always consistent
    return space


@dataclass(frozen=True)
class SampleIndexSet:
    indices: tuple[int, ...]
    range: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "indices", tuple(int(i) for i in self.indices))
        if any(not 0 <= i < self.range for i in self.indices):
            raise ValueError("sample index out of range")

    def __len__(self) -> int:
        return len(self.indices)

    def __iter__(self):
        return iter(self.indices)

    def count_in(self, members) -> int:
        s = set(members)
        return sum(1 for i in self.indices if i in s)


def sampler_values(spec: SeededExtractorSpec, x, range_: int) -> list:
    """Per-seed sampled values (each an int or array), reduced modulo ``range_``."""
    ext = ext_strong_raw if spec.kind is ExtractorKind.STRONG_HASH else lext_raw
    out = []
    for s in range(spec.seed_count):
        v = ext(spec, x, s)
        out.append(v % (np.uint64(range_) if isinstance(v, np.ndarray) else range_))
    return out


def samp(spec: SeededExtractorSpec, x: BitVector, range_: int, distinct: bool = False) -> SampleIndexSet:
    """Evaluate the extractor at every seed.

    With ``distinct=True`` collisions are resolved by linear probing, which
    keeps the first occurrence in place and yields a set of 2^d distinct
    positions; this variant is used where positions must be disjoint.
    """
    _check_len(x, spec.n_in, "sampler source")
    if range_ < 1:
        raise ValueError("sampler range must be positive")
    if spec.m_out != max(0, math.ceil(math.log2(range_))):
        raise ValueError(f"sampler needs m_out = ceil(log2 {range_})")
    vals = [int(v) for v in sampler_values(spec, x.value, range_)]
    if distinct:
        vals = probe_distinct(vals, range_)
    return SampleIndexSet(tuple(vals), range_)


def probe_distinct(vals: Sequence[int], range_: int) -> list[int]:
    if len(vals) > range_:
        raise ValueError("more distinct samples requested than the range holds")
    used: set[int] = set()
    out = []
    for v in vals:
        while v in used:
            v = (v + 1) % range_
        used.add(v)
        out.append(v)
    return out


def ip_extract_raw(x, y, m: int, r: int, modulus: int):
    out = 0
    lm = mask(m)
    for i in range(r):
        xi = (x >> (i * m)) & lm
        yi = (y >> (i * m)) & lm
        out = out ^ gf_mul(xi, yi, m, modulus)
    return out


def ip_extract(x: BitVector, y: BitVector, fld: FieldSpec, r: int) -> BitVector:
    """Inner product of two r-vectors over GF(2^m), blocks taken low to high."""
    if x.length != y.length:
        raise ValueError("sources must have equal length")
    if x.length != r * fld.m:
        raise ValueError(f"source length {x.length} != r·m = {r * fld.m}")
    return BitVector(ip_extract_raw(x.value, y.value, fld.m, r, fld.modulus), fld.m)


@dataclass(frozen=True)
class CondenserSpec:
    """Iterated split-and-multiply condenser over ``n_in``-bit inputs."""

    n_in: int
    iterations: int = 2

    def __post_init__(self) -> None:
        if self.iterations < 0:
            raise ValueError("iterations must be non-negative")
        if self.row_len < 1:
            raise ValueError("too many iterations for the input length")

    @property
    def D_con(self) -> int:
        return 3**self.iterations

    @property
    def widths(self) -> tuple[int, ...]:
        w = [self.n_in]
        for _ in range(self.iterations):
            w.append(w[-1] // 2)
        return tuple(w)

    @property
    def row_len(self) -> int:
        return self.widths[-1]

    def to_json(self) -> dict:
        return {"n_in": self.n_in, "iterations": self.iterations}

    @classmethod
    def from_json(cls, obj: dict) -> "CondenserSpec":
        return cls(int(obj["n_in"]), int(obj.get("iterations", 2)))


def condense_raw(spec: CondenserSpec, x, row: int):
    digits = []
    r = row
    for _ in range(spec.iterations):
        digits.append(r % 3)
        r //= 3
    digits.reverse()  # most significant digit selects at the first level
    for level, choice in enumerate(digits):
        half = spec.widths[level + 1]
        hm = mask(half)
        a = x & hm
        b = (x >> half) & hm
        if choice == 0:
            x = a
        elif choice == 1:
            x = b
        else:
            f = default_field(half)
            x = gf_mul(a, b, f.m, f.modulus)
    return x & mask(spec.row_len) if not isinstance(x, np.ndarray) else x & np.uint64(mask(spec.row_len))


def condense(x: BitVector, row: int, spec: CondenserSpec) -> BitVector:
    _check_len(x, spec.n_in, "condenser input")
    if not 0 <= row < spec.D_con:
        raise ValueError(f"row {row} outside [0, {spec.D_con})")
    return BitVector(int(condense_raw(spec, x.value, row)), spec.row_len)


@dataclass(frozen=True)
class SomewhereRandomMatrix:
    rows: tuple[BitVector, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "rows", tuple(self.rows))
        if len({r.length for r in self.rows}) > 1:
            raise ValueError("rows must have equal length")

    @property
    def D(self) -> int:
        return len(self.rows)

    def xor_rows(self) -> BitVector:
        out = BitVector.zeros(self.rows[0].length if self.rows else 0)
        for r in self.rows:
            out = out ^ r
        return out
