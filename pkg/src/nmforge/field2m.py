"""Arithmetic in GF(2^m) with polynomial-basis elements packed into ints.

Element bit ``i`` is the coefficient of ``x^i``.  ``gf_mul`` works on Python
ints of any size and on numpy ``uint64`` arrays (for m ≤ 32), which is what the
vectorized extractor kernels rely on.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .bitlin import BitMatrix, BitVector, mask
from ._moduli import DEFAULT_MODULI

__all__ = [
    "FieldElem",
    "FieldSpec",
    "as_linear_map",
    "clmul",
    "default_field",
    "fadd",
    "finv",
    "fmul",
    "gf_mul",
    "is_irreducible",
    "smallest_irreducible",
    "poly_mod",
]

TRIAL_DIVISION_MAX_DEGREE = 20


def _deg(p: int) -> int:
    return p.bit_length() - 1


def clmul(a, b, width: int | None = None):
    """Carry-less product.  ``width`` bounds the bits of ``b`` for array inputs."""
    if not isinstance(b, np.ndarray):
        b = int(b)
        out = a & 0 if isinstance(a, np.ndarray) else 0
        while b:
            low = b & -b
            out = out ^ (a << (low.bit_length() - 1))
            b ^= low
        return out
    if not isinstance(a, np.ndarray):
        return clmul(b, a, width)
    if width is None:
        raise ValueError("width is required when both operands are arrays")
    out = np.zeros_like(a)
    one = np.uint64(1)
    for i in range(width):
        out ^= (a << np.uint64(i)) * ((b >> np.uint64(i)) & one)
    return out


def poly_mod(p, m: int, modulus: int):
    """Reduce ``p`` modulo the degree-``m`` polynomial ``modulus``.

    Folds the high part through the low part of the modulus, so sparse moduli
    reduce in a handful of shift-xor passes.
    """
    low = modulus ^ (1 << m)
    low_deg = _deg(low) if low else -1
    if isinstance(p, np.ndarray):
        # each fold lowers the degree by at least m - deg(low)
        top = 2 * m - 2
        lm = np.uint64(mask(m))
        sm = np.uint64(m)
        while top >= m:
            hi = p >> sm
            p = (p & lm) ^ clmul(hi, low)
            top = top - m + low_deg
        return p
    p = int(p)
    while p >> m:
        hi = p >> m
        p = (p & mask(m)) ^ clmul(hi, low)
    return p


ARRAY_MAX_DEGREE = 32


def gf_mul(a, b, m: int, modulus: int):
    if m > ARRAY_MAX_DEGREE and (isinstance(a, np.ndarray) or isinstance(b, np.ndarray)):
        raise ValueError(f"uint64 array kernels need m ≤ {ARRAY_MAX_DEGREE}, got {m}; use Python ints")
    return poly_mod(clmul(a, b, m), m, modulus)


def _poly_divmod(a: int, b: int) -> tuple[int, int]:
    q = 0
    db = _deg(b)
    while a and _deg(a) >= db:
        s = _deg(a) - db
        q ^= 1 << s
        a ^= b << s
    return q, a


def _poly_gcd(a: int, b: int) -> int:
    while b:
        a, b = b, _poly_divmod(a, b)[1]
    return a


def _square_mod(p: int, m: int, modulus: int) -> int:
    return poly_mod(_spread(p), m, modulus)


def _spread_byte(b: int) -> int:
    out = 0
    for i in range(8):
        if (b >> i) & 1:
            out |= 1 << (2 * i)
    return out


_SPREAD = [_spread_byte(b) for b in range(256)]


def _spread(p: int) -> int:
    data = p.to_bytes((p.bit_length() + 7) // 8 or 1, "little")
    out = 0
    for k, byte in enumerate(data):
        if byte:
            out |= _SPREAD[byte] << (16 * k)
    return out


def _prime_factors(n: int) -> list[int]:
    out, p = [], 2
    while p * p <= n:
        if n % p == 0:
            out.append(p)
            while n % p == 0:
                n //= p
        p += 1
    if n > 1:
        out.append(n)
    return out


@lru_cache(maxsize=None)
def _irreducibles_upto(d: int) -> tuple[int, ...]:
    """All irreducible polynomials of degree 1..d, by sieving."""
    found: list[int] = []
    for p in range(2, 1 << (d + 1)):
        dp = _deg(p)
        if all(_poly_divmod(p, q)[1] for q in found if 2 * _deg(q) <= dp):
            found.append(p)
    return tuple(found)


def is_irreducible(modulus: int, method: str = "auto") -> bool:
    """Irreducibility over GF(2).

    Trial division by every irreducible of degree ≤ m/2 for small m; above
    that, Rabin's test (x^(2^m) ≡ x and coprimality for each prime divisor).
    ``method`` forces one of ``"trial"`` or ``"rabin"``.
    """
    m = _deg(modulus)
    if m < 1:
        return False
    if m == 1:
        return True
    if not modulus & 1:
        return False
    if method == "auto":
        method = "trial" if m <= TRIAL_DIVISION_MAX_DEGREE else "rabin"
    if method == "trial":
        for q in _irreducibles_upto(m // 2):
            if _poly_divmod(modulus, q)[1] == 0:
                return False
        return True
    powers = {0: 2}
    x = 2
    for i in range(1, m + 1):
        x = _square_mod(x, m, modulus)
        powers[i] = x
    if powers[m] != 2:
        return False
    for p in _prime_factors(m):
        if _poly_gcd(modulus, powers[m // p] ^ 2) != 1:
            return False
    return True


@dataclass(frozen=True)
class FieldSpec:
    m: int
    modulus: int

    def __post_init__(self) -> None:
        if self.m < 1:
            raise ValueError("field degree must be positive")
        if _deg(self.modulus) != self.m:
            raise ValueError(f"modulus {self.modulus:#x} does not have degree {self.m}")
        if not _check_irreducible(self.modulus):
            raise ValueError(f"modulus {self.modulus:#x} is reducible")

    @property
    def order(self) -> int:
        return 1 << self.m

    def elem(self, value: int) -> "FieldElem":
        return FieldElem(self, value)

    def to_json(self) -> dict:
        return {"m": self.m, "modulus": f"{self.modulus:x}"}

    @classmethod
    def from_json(cls, obj: dict) -> "FieldSpec":
        return cls(int(obj["m"]), int(obj["modulus"], 16))


@lru_cache(maxsize=None)
def _check_irreducible(modulus: int) -> bool:
    return is_irreducible(modulus)


@lru_cache(maxsize=None)
def default_field(m: int) -> FieldSpec:
    """GF(2^m) with the frozen default modulus for degree ``m``."""
    if m < 1:
        raise ValueError("field degree must be positive")
    modulus = DEFAULT_MODULI.get(m)
    if modulus is None:
        modulus = smallest_irreducible(m)
    return FieldSpec(m, modulus)


def smallest_irreducible(m: int) -> int:
    """The irreducible polynomial of degree ``m`` with the smallest bit mask."""
    small = _irreducibles_upto(min(8, m // 2)) if m > 1 else ()
    p = (1 << m) | 1 if m > 1 else 3
    while True:
        if all(_poly_divmod(p, q)[1] for q in small) and is_irreducible(p):
            return p
        p += 2


@dataclass(frozen=True)
class FieldElem:
    spec: FieldSpec
    value: int

    def __post_init__(self) -> None:
        if self.value < 0 or self.value >> self.spec.m:
            raise ValueError("element does not fit in the field")

    @property
    def coeffs(self) -> BitVector:
        return BitVector(self.value, self.spec.m)

    def __mul__(self, other: "FieldElem") -> "FieldElem":
        return fmul(self, other)

    def __add__(self, other: "FieldElem") -> "FieldElem":
        return fadd(self, other)


def _same_field(a: FieldElem, b: FieldElem) -> None:
    if a.spec != b.spec:
        raise ValueError("operands belong to different fields")


def fadd(a: FieldElem, b: FieldElem) -> FieldElem:
    _same_field(a, b)
    return FieldElem(a.spec, a.value ^ b.value)


def fmul(a: FieldElem, b: FieldElem) -> FieldElem:
    _same_field(a, b)
    return FieldElem(a.spec, gf_mul(a.value, b.value, a.spec.m, a.spec.modulus))


def finv(a: FieldElem) -> FieldElem:
    """Inverse by the extended Euclidean algorithm on polynomials."""
    if a.value == 0:
        raise ZeroDivisionError("zero has no inverse")
    r0, r1 = a.spec.modulus, a.value
    s0, s1 = 0, 1
    while r1 != 1:
        q, r = _poly_divmod(r0, r1)
        r0, r1 = r1, r
        s0, s1 = s1, s0 ^ clmul(q, s1)
    return FieldElem(a.spec, poly_mod(s1, a.spec.m, a.spec.modulus))


def as_linear_map(a: FieldElem, out_bits: int) -> BitMatrix:
    """The ``out_bits × m`` matrix of ``x ↦ low out_bits of a·x``."""
    m = a.spec.m
    if not 1 <= out_bits <= m:
        raise ValueError(f"out_bits must lie in [1, {m}]")
    cols = [gf_mul(a.value, 1 << j, m, a.spec.modulus) & mask(out_bits) for j in range(m)]
    return BitMatrix.from_columns(cols, out_bits)
