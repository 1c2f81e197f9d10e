import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nmforge.bitlin import rank
from nmforge.field2m import (
    ARRAY_MAX_DEGREE,
    FieldElem,
    FieldSpec,
    as_linear_map,
    default_field,
    finv,
    fmul,
    gf_mul,
    is_irreducible,
    smallest_irreducible,
)
from nmforge._moduli import DEFAULT_MODULI


def schoolbook(a: int, b: int, modulus: int) -> int:
    """Reference product: bit-by-bit polynomial multiplication then long division."""
    m = modulus.bit_length() - 1
    prod = 0
    for i in range(b.bit_length()):
        if (b >> i) & 1:
            prod ^= a << i
    for sh in range(prod.bit_length() - 1, m - 1, -1):
        if (prod >> sh) & 1:
            prod ^= modulus << (sh - m)
    return prod


def brute_irreducible(p: int) -> bool:
    d = p.bit_length() - 1
    for q in range(2, 1 << (d // 2 + 1)):
        if q.bit_length() - 1 < 1:
            continue
        r = p
        for sh in range(r.bit_length() - q.bit_length(), -1, -1):
            if (r >> (sh + q.bit_length() - 1)) & 1:
                r ^= q << sh
        if r == 0:
            return False
    return True


GF8 = FieldSpec(3, 0b1011)


def test_small_products():
    x, x2 = GF8.elem(0b010), GF8.elem(0b100)
    assert fmul(x, x2) == GF8.elem(0b011)
    a = GF8.elem(0b110)
    assert fmul(a, GF8.elem(1)) == a


def test_inverse_examples():
    assert finv(GF8.elem(1)) == GF8.elem(1)
    assert finv(GF8.elem(0b010)) == GF8.elem(0b101)
    with pytest.raises(ZeroDivisionError):
        finv(GF8.elem(0))


def test_gf256_inverse_against_search():
    f = default_field(8)
    table = {}
    for a in range(1, 256):
        # independent oracle: exhaustive search for the partner
        table[a] = next(b for b in range(1, 256) if schoolbook(a, b, f.modulus) == 1)
    for a, inv in table.items():
        assert finv(f.elem(a)).value == inv
        assert fmul(f.elem(a), f.elem(inv)).value == 1


def test_gf2_16_random_inverses(rng):
    f = default_field(16)
    for a in rng.integers(1, 1 << 16, size=10_000):
        e = f.elem(int(a))
        assert fmul(e, finv(e)).value == 1


@pytest.mark.parametrize("m", [1, 2, 3, 4])
def test_field_axioms_exhaustive(m):
    f = default_field(m)
    els = [f.elem(v) for v in range(f.order)]
    one, zero = f.elem(1), f.elem(0)
    for a, b in itertools.product(els, repeat=2):
        assert a * b == b * a
        assert a * one == a and a + zero == a
    for a, b, c in itertools.product(els, repeat=3):
        assert (a * b) * c == a * (b * c)
        assert a * (b + c) == a * b + a * c


@given(st.integers(5, 40).flatmap(lambda m: st.tuples(st.just(m), *[st.integers(0, (1 << m) - 1)] * 3)))
def test_field_axioms_random(args):
    m, a, b, c = args
    f = default_field(m)
    a, b, c = f.elem(a), f.elem(b), f.elem(c)
    assert a * b == b * a
    assert (a * b) * c == a * (b * c)
    assert a * (b + c) == a * b + a * c
    assert (a * b).value == schoolbook(a.value, b.value, f.modulus)


def test_array_kernel_matches_scalar(rng):
    for m in (2, 7, 16, 31, 32):
        f = default_field(m)
        a = rng.integers(0, 1 << m, size=500, dtype=np.uint64)
        b = rng.integers(0, 1 << m, size=500, dtype=np.uint64)
        got = gf_mul(a, b, m, f.modulus)
        assert [int(v) for v in got] == [schoolbook(int(x), int(y), f.modulus) for x, y in zip(a, b)]


def test_array_kernel_degree_guard():
    f = default_field(ARRAY_MAX_DEGREE + 1)
    with pytest.raises(ValueError):
        gf_mul(np.ones(2, dtype=np.uint64), np.ones(2, dtype=np.uint64), f.m, f.modulus)


def test_linear_map_examples():
    f = default_field(8)
    assert as_linear_map(f.elem(1), 8).rows == tuple(1 << i for i in range(8))
    assert rank(as_linear_map(f.elem(0), 8)) == 0
    assert all(rank(as_linear_map(f.elem(a), 3)) == 3 for a in range(1, 256))


@pytest.mark.parametrize("m", [4, 8, 12])
def test_truncated_multiplication_is_onto(m, rng):
    f = default_field(m)
    xs = np.arange(f.order, dtype=np.uint64)
    for a in rng.integers(1, f.order, size=5):
        for out_bits in (1, m // 2, m):
            img = gf_mul(xs, np.full_like(xs, int(a)), m, f.modulus) & np.uint64((1 << out_bits) - 1)
            assert len(np.unique(img)) == 1 << out_bits
            mat = as_linear_map(f.elem(int(a)), out_bits)
            assert [mat.apply_raw(int(x)) for x in xs[:64]] == [int(v) for v in img[:64]]


def test_default_moduli_are_smallest_irreducibles():
    for m in range(1, 15):
        p = DEFAULT_MODULI[m]
        assert brute_irreducible(p)
        assert not any(brute_irreducible(q) for q in range((1 << m) + 1, p) if q & 1 or m == 1)
        assert smallest_irreducible(m) == p


def test_irreducibility_methods_agree():
    for p in range(1 << 6, 1 << 11):
        assert is_irreducible(p, "trial") == is_irreducible(p, "rabin") == brute_irreducible(p)


def test_reducible_modulus_rejected():
    with pytest.raises(ValueError):
        FieldSpec(4, 0b10101)
    with pytest.raises(ValueError):
        FieldElem(GF8, 8)


def test_large_default_fields_resolve():
    for m in (64, 127, 1012):
        f = default_field(m)
        assert f.m == m and is_irreducible(f.modulus, "rabin")
