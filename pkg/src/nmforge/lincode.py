"""Linear block codes over GF(2), with a dual-BCH constructor."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .bitlin import BitMatrix, BitVector, rank
from .field2m import FieldSpec, clmul, default_field, gf_mul

__all__ = [
    "LinearCodeSpec",
    "build_dual_bch",
    "cyclic_dual_generator",
    "bch_generator_poly",
    "cyclotomic_coset",
    "encode",
    "min_distance",
    "project",
    "project_raw",
]


@dataclass(frozen=True)
class LinearCodeSpec:
    """A code given by its ``n_out × k_in`` generator (codeword = gen · msg)."""

    n_out: int
    k_in: int
    gen: BitMatrix
    rel_distance: float
    family: str = "explicit"
    params: tuple = ()

    def __post_init__(self) -> None:
        if self.gen.shape != (self.n_out, self.k_in):
            raise ValueError(f"generator shape {self.gen.shape} != ({self.n_out}, {self.k_in})")
        if rank(self.gen) != self.k_in:
            raise ValueError("generator does not have full column rank")

    @property
    def rate(self) -> float:
        return self.k_in / self.n_out

    def encode_raw(self, msg):
        return self.gen.apply_raw(msg)

    def to_json(self) -> dict:
        if self.family == "dual-bch":
            n_b, t_b = self.params
            return {"family": "dual-bch", "n_b": n_b, "t_b": t_b}
        cols = [self.gen.column(j) for j in range(self.k_in)]
        width = (self.n_out + 3) // 4
        return {
            "family": "explicit",
            "n_out": self.n_out,
            "generator": [f"{c:0{width}x}" for c in cols],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "LinearCodeSpec":
        family = obj.get("family")
        if family == "dual-bch":
            return build_dual_bch(int(obj["n_b"]), int(obj["t_b"]))
        if family == "explicit":
            n_out = int(obj["n_out"])
            cols = [int(c, 16) for c in obj["generator"]]
            gen = BitMatrix.from_columns(cols, n_out)
            return cls(n_out, len(cols), gen, min_distance(gen) / n_out)
        raise ValueError(f"unknown code family {family!r}")


def encode(spec: LinearCodeSpec, msg: BitVector) -> BitVector:
    if msg.length != spec.k_in:
        raise ValueError(f"message has {msg.length} bits, code expects {spec.k_in}")
    return spec.gen @ msg


def project_raw(cw, idx: Sequence[int]):
    out = 0
    for j, i in enumerate(idx):
        out = out | (((cw >> i) & 1) << j)
    return out


def project(cw: BitVector, idx: Sequence[int]) -> BitVector:
    """The bits of ``cw`` at ``idx``, in the order given."""
    idx = [int(i) for i in idx]
    for i in idx:
        if not 0 <= i < cw.length:
            raise IndexError(f"index {i} outside codeword of length {cw.length}")
    return BitVector(project_raw(cw.value, idx), len(idx))


def min_distance(gen: BitMatrix) -> int:
    """Minimum nonzero codeword weight by enumerating all messages."""
    k = gen.ncols
    cols = [gen.column(j) for j in range(k)]
    best = gen.nrows + 1
    cw = 0
    # Gray-code walk: one column xor per message
    for i in range(1, 1 << k):
        cw ^= cols[(i & -i).bit_length() - 1]
        best = min(best, cw.bit_count())
    return best


def cyclotomic_coset(i: int, n: int) -> tuple[int, ...]:
    seen = []
    j = i % n
    while j not in seen:
        seen.append(j)
        j = (2 * j) % n
    return tuple(sorted(seen))


def _primitive_element(field: FieldSpec) -> int:
    order = field.order - 1
    factors = [p for p in range(2, order + 1) if order % p == 0 and all(p % q for q in range(2, int(p**0.5) + 1))]
    for g in range(2, field.order):
        if all(_pow(g, order // p, field) != 1 for p in factors):
            return g
    return 1  # GF(2): the only nonzero element


def _pow(a: int, e: int, field: FieldSpec) -> int:
    out = 1
    while e:
        if e & 1:
            out = gf_mul(out, a, field.m, field.modulus)
        a = gf_mul(a, a, field.m, field.modulus)
        e >>= 1
    return out


def _minimal_poly(root: int, field: FieldSpec) -> int:
    # product of (x - root^(2^j)) over the conjugates, coefficients in GF(2^s)
    conj = []
    r = root
    while r not in conj:
        conj.append(r)
        r = gf_mul(r, r, field.m, field.modulus)
    coeffs = [1]
    for c in conj:
        nxt = [0] * (len(coeffs) + 1)
        for k, a in enumerate(coeffs):
            nxt[k + 1] ^= a
            nxt[k] ^= gf_mul(a, c, field.m, field.modulus)
        coeffs = nxt
    if any(a not in (0, 1) for a in coeffs):
        raise ArithmeticError("minimal polynomial has coefficients outside GF(2)")
    return sum(a << k for k, a in enumerate(coeffs))


@lru_cache(maxsize=None)
def bch_generator_poly(n_b: int, t_b: int) -> int:
    """Generator of the narrow-sense binary BCH code with roots α^1..α^(2t_b−1)."""
    s = (n_b + 1).bit_length() - 1
    field = default_field(s)
    alpha = _primitive_element(field)
    g = 1
    covered: set[int] = set()
    for i in range(1, 2 * t_b):
        if i % n_b in covered:
            continue
        coset = cyclotomic_coset(i, n_b)
        covered.update(coset)
        g = clmul(g, _minimal_poly(_pow(alpha, i, field), field))
    return g


def _poly_div_exact(a: int, b: int) -> int:
    q = 0
    db = b.bit_length() - 1
    while a and a.bit_length() - 1 >= db:
        sh = a.bit_length() - 1 - db
        q |= 1 << sh
        a ^= b << sh
    if a:
        raise ArithmeticError("polynomial division is not exact")
    return q


def _reverse(p: int, deg: int) -> int:
    return int(format(p, f"0{deg + 1}b")[::-1], 2)


def cyclic_dual_generator(n_b: int, t_b: int) -> BitMatrix:
    """Generator of the dual code from the reciprocal check polynomial.

    The dual of a cyclic code with check polynomial ``h = (x^n − 1)/g`` is
    generated by the reciprocal of ``h``; its columns here are the shifts.
    """
    g = bch_generator_poly(n_b, t_b)
    k_dual = g.bit_length() - 1
    h = _poly_div_exact((1 << n_b) | 1, g)
    h_rec = _reverse(h, n_b - k_dual)
    return BitMatrix.from_columns([h_rec << j for j in range(k_dual)], n_b)


def _trace(a: int, field: FieldSpec) -> int:
    t, x = 0, a
    for _ in range(field.m):
        t ^= x
        x = gf_mul(x, x, field.m, field.modulus)
    return t


def _trace_generator(n_b: int, t_b: int) -> BitMatrix:
    # position i of the codeword for message (a_1, a_3, …) is Σ_k Tr(a_k α^{i(2k−1)})
    s = (n_b + 1).bit_length() - 1
    field = default_field(s)
    alpha = _primitive_element(field)
    table = np.empty(n_b, dtype=np.uint64)
    x = 1
    for i in range(n_b):
        table[i] = x
        x = gf_mul(x, alpha, field.m, field.modulus)
    # Tr(x^b · y) is the parity of y against a fixed mask
    fmask = [
        sum(_trace(gf_mul(1 << b, 1 << j, field.m, field.modulus), field) << j for j in range(s))
        for b in range(s)
    ]
    idx = np.arange(n_b, dtype=np.int64)
    cols = []
    covered: set[int] = set()
    for e in range(1, 2 * t_b, 2):
        coset = cyclotomic_coset(e, n_b)
        if e in covered:
            continue
        covered.update(coset)
        powers = table[(idx * e) % n_b]
        # short cosets have subfield coefficients: keep an independent subset
        picked: list[int] = []
        for b in range(s):
            bits = (np.bitwise_count(powers & np.uint64(fmask[b])) & 1).astype(np.uint8)
            col = int.from_bytes(np.packbits(bits, bitorder="little").tobytes(), "little")
            if rank(BitMatrix(tuple(picked + [col]), n_b)) > len(picked):
                picked.append(col)
            if len(picked) == len(coset):
                break
        cols += picked
    return BitMatrix.from_columns(cols, n_b)


@lru_cache(maxsize=None)
def build_dual_bch(n_b: int, t_b: int) -> LinearCodeSpec:
    """Dual of the binary BCH code of length ``n_b = 2^s − 1`` and designed distance 2t_b.

    Messages are the trace-form coefficients (a_1, a_3, …, a_{2t_b−1}), s bits
    each.  Every codeword position is then a dense functional of the message,
    unlike the banded shift basis, which matters when single positions are
    sampled.  The code itself equals the span of the cyclic generator.
    """
    s = (n_b + 1).bit_length() - 1
    if n_b < 3 or (1 << s) - 1 != n_b:
        raise ValueError(f"n_b = {n_b} is not of the form 2^s - 1 with s ≥ 2")
    if t_b < 1 or t_b * s > n_b:
        raise ValueError(f"t_b = {t_b} outside [1, n_b/s]")
    gen = _trace_generator(n_b, t_b)
    # Carlitz-Uchiyama bound on the dual-BCH minimum weight
    bound = max(0.0, 2 ** (s - 1) - (t_b - 1) * 2 ** (s / 2))
    return LinearCodeSpec(
        n_out=n_b,
        k_in=gen.ncols,
        gen=gen,
        rel_distance=math.floor(bound) / n_b,
        family="dual-bch",
        params=(n_b, t_b),
    )
