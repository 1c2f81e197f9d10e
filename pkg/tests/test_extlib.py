import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nmforge.bitlin import BitVector, xor
from nmforge.extlib import (
    CondenserSpec,
    ExtractorKind,
    SeededExtractorSpec,
    SomewhereRandomMatrix,
    condense,
    condense_raw,
    ext_strong,
    ext_strong_raw,
    ip_extract,
    lext_linear,
    lext_preimage,
    lext_raw,
    linear_map,
    probe_distinct,
    samp,
    sampler_values,
)
from nmforge.field2m import FieldSpec, default_field

STRONG = ExtractorKind.STRONG_HASH
LINEAR = ExtractorKind.LINEAR
FIXED = ExtractorKind.FIXED_RANK


def strong_joint_tv(spec: SeededExtractorSpec, support: np.ndarray) -> float:
    """Exact TV of (Ext(X, S), S) from (U, S) for flat X, by enumerating seeds and support."""
    total = 0.0
    for s in range(spec.seed_count):
        out = ext_strong_raw(spec, support, s).astype(np.int64)
        p = np.bincount(out, minlength=1 << spec.m_out) / len(support)
        total += 0.5 * np.abs(p - 2.0 ** -spec.m_out).sum()
    return total / spec.seed_count


def affine_support(rng, n, k):
    from nmforge.acceptance import _random_affine

    return _random_affine(rng, n, k)


# strong hash


def test_leftover_hash_uniform_source():
    spec = SeededExtractorSpec(10, 11, 2, STRONG, k_min=10)
    assert spec.eps == 2.0**-4
    assert strong_joint_tv(spec, np.arange(1 << 10, dtype=np.uint64)) <= 2.0**-4


def test_leftover_hash_affine_source(rng):
    spec = SeededExtractorSpec(12, 13, 3, STRONG, k_min=8)
    for _ in range(3):
        assert strong_joint_tv(spec, affine_support(rng, 12, 8)) <= 2.0**-2.5


@pytest.mark.parametrize("n,k,m", [(8, 6, 2), (10, 5, 1), (12, 9, 3), (14, 10, 4)])
def test_leftover_hash_bound_on_flat_sources(n, k, m, rng):
    spec = SeededExtractorSpec(n, n + 1, m, STRONG, k_min=k)
    for _ in range(2):
        support = np.sort(rng.choice(1 << n, size=1 << k, replace=False)).astype(np.uint64)
        assert strong_joint_tv(spec, support) <= 2.0 ** (-(k - m) / 2)


def test_strong_hash_is_a_function(rng):
    spec = SeededExtractorSpec(10, 6, 3, STRONG, k_min=8)
    x, s = BitVector.random(10, rng), BitVector.random(6, rng)
    assert ext_strong(spec, x, s) == ext_strong(spec, x, s)
    with pytest.raises(ValueError):
        ext_strong(spec, BitVector(0, 9), s)


def test_entropy_deficient_spec_has_no_bound():
    spec = SeededExtractorSpec(3, 2, 2, STRONG)
    assert not spec.entropy_deficient and spec.eps == 2.0 ** -0.5
    with pytest.raises(ValueError):
        SeededExtractorSpec(6, 4, 5, STRONG, k_min=4)


# linear


@given(st.integers(0, 1023), st.integers(0, 1023), st.integers(1, 1023))
def test_lext_linearity(a, b, s):
    spec = SeededExtractorSpec(10, 10, 6, LINEAR)
    va, vb, seed = BitVector(a, 10), BitVector(b, 10), BitVector(s, 10)
    assert lext_linear(spec, xor(va, vb), seed) == xor(lext_linear(spec, va, seed), lext_linear(spec, vb, seed))


def test_lext_unit_seed_is_identity(rng):
    spec = SeededExtractorSpec(9, 9, 9, FIXED)
    for _ in range(50):
        x = BitVector.random(9, rng)
        assert lext_linear(spec, x, BitVector(1, 9)) == x


def test_fixed_rank_rejects_zero_seed():
    spec = SeededExtractorSpec(8, 8, 3, FIXED)
    with pytest.raises(ValueError):
        lext_linear(spec, BitVector(5, 8), BitVector(0, 8))
    with pytest.raises(ValueError):
        lext_preimage(spec, BitVector(0, 8), BitVector(0, 3))


def test_seed_embedding_is_injective_and_nonzero():
    spec = SeededExtractorSpec(16, 9, 4, FIXED)
    els = spec.seed_element(np.arange(spec.seed_count, dtype=np.uint64))
    assert len(np.unique(els)) == spec.seed_count and np.all(els != 0)


def test_affine_source_property(rng):
    # for a linear map the output on an affine source is uniform or misses half the range
    n, k, m = 10, 6, 4
    spec = SeededExtractorSpec(n, n, m, LINEAR)
    support = affine_support(rng, n, k)
    tvs, bad = [], 0
    for s in range(1, spec.seed_count):
        p = np.bincount(lext_raw(spec, support, s).astype(np.int64), minlength=1 << m) / len(support)
        tv = 0.5 * np.abs(p - 2.0**-m).sum()
        tvs.append(tv)
        bad += tv > 0
    eps = float(np.mean(tvs))
    assert bad / (spec.seed_count - 1) <= 2 * eps


def test_preimage_dimension_and_round_trip(rng):
    spec = SeededExtractorSpec(10, 10, 3, FIXED)
    for s in range(1, 1 << 10):
        y = BitVector(int(rng.integers(0, 8)), 3)
        space = lext_preimage(spec, BitVector(s, 10), y)
        assert space.dim == 7
        if s % 97 == 0:
            for pt in space.elements():
                assert lext_linear(spec, pt, BitVector(s, 10)) == y


def test_preimage_full_output_is_unique():
    spec = SeededExtractorSpec(8, 8, 8, FIXED)
    space = lext_preimage(spec, BitVector(77, 8), BitVector(200, 8))
    assert space.dim == 0
    assert lext_linear(spec, space.offset, BitVector(77, 8)) == BitVector(200, 8)


def test_linear_map_matches_kernel(rng):
    spec = SeededExtractorSpec(12, 7, 5, LINEAR)
    xs = np.arange(1 << 12, dtype=np.uint64)
    for s in rng.integers(0, 1 << 7, size=5):
        mat = linear_map(spec, int(s))
        got = lext_raw(spec, xs, int(s))
        assert all(mat.apply_raw(int(x)) == int(got[x]) for x in range(0, 4096, 37))


def test_spec_json_round_trip():
    for spec in (SeededExtractorSpec(12, 7, 5, LINEAR), SeededExtractorSpec(10, 4, 3, STRONG, k_min=6),
                 SeededExtractorSpec(9, 9, 2, FIXED, modulus=0x211)):
        assert SeededExtractorSpec.from_json(spec.to_json()) == spec


# samplers


def test_sampler_permutation_case():
    # d = n_in = m_out: Ext(x, ·) is multiplication by a nonzero constant, a bijection on seeds
    spec = SeededExtractorSpec(4, 4, 4, LINEAR)
    idx = samp(spec, BitVector(0b0110, 4), 16)
    assert sorted(idx.indices) == list(range(16))


def test_sampler_full_range_counts(rng):
    spec = SeededExtractorSpec(12, 5, 3, STRONG, k_min=8)
    x = BitVector.random(12, rng)
    idx = samp(spec, x, 8)
    assert len(idx) == 32 and idx.count_in(range(8)) == 32


def test_sampler_modulo_reduction(rng):
    spec = SeededExtractorSpec(12, 5, 3, STRONG, k_min=8)
    x = BitVector.random(12, rng)
    idx = samp(spec, x, 6)
    raw = [int(v) for v in sampler_values(spec, x.value, 1 << 3)]
    assert list(idx.indices) == [v % 6 for v in raw]
    with pytest.raises(ValueError):
        samp(spec, x, 16)


def test_distinct_sampling():
    assert probe_distinct([3, 3, 3, 0], 5) == [3, 4, 0, 1]
    with pytest.raises(ValueError):
        probe_distinct([0, 1, 2], 2)


# inner product


def test_inner_product_examples(rng):
    f = default_field(3)
    x = BitVector.random(12, rng)
    assert ip_extract(x, BitVector(0, 12), f, 4) == BitVector(0, 3)
    gf2 = FieldSpec(1, 0b11)
    assert ip_extract(BitVector.from_str("10"), BitVector.from_str("11"), gf2, 2) == BitVector(1, 1)
    with pytest.raises(ValueError):
        ip_extract(BitVector(0, 10), BitVector(0, 10), f, 4)


def test_inner_product_error_bound(rng):
    from nmforge.acceptance import ip_joint_tv

    for _ in range(4):
        xs = np.sort(rng.choice(256, size=128, replace=False)).astype(np.uint64)
        ys = np.sort(rng.choice(256, size=128, replace=False)).astype(np.uint64)
        assert ip_joint_tv(xs, ys, 2, 4) <= 0.25


def test_inner_product_symmetric(rng):
    f = default_field(4)
    for _ in range(100):
        x, y = BitVector.random(16, rng), BitVector.random(16, rng)
        assert ip_extract(x, y, f, 4) == ip_extract(y, x, f, 4)


# condenser


def test_condenser_annihilation_and_shape(rng):
    spec = CondenserSpec(16, iterations=1)
    x = BitVector(int(rng.integers(0, 256)) << 8, 16)  # low half a = 0
    assert condense(x, 2, spec) == BitVector(0, 8)
    spec2 = CondenserSpec(16)
    assert {condense(BitVector.random(16, rng), r, spec2).length for r in range(spec2.D_con)} == {4}
    with pytest.raises(ValueError):
        condense(x, 9, spec2)


def test_condenser_keeps_entropy(rng):
    spec = CondenserSpec(16, iterations=1)
    for _ in range(200):
        support = rng.choice(1 << 16, size=1 << 8, replace=False).astype(np.uint64)
        best = 0.0
        for row in range(spec.D_con):
            counts = np.bincount(condense_raw(spec, support, row).astype(np.int64))
            best = max(best, -math.log2(counts.max() / len(support)) / spec.row_len)
        assert best >= 0.6


def test_condenser_array_matches_scalar(rng):
    spec = CondenserSpec(20)
    xs = rng.integers(0, 1 << 20, size=100, dtype=np.uint64)
    for row in range(spec.D_con):
        got = condense_raw(spec, xs, row)
        assert [int(v) for v in got] == [condense(BitVector(int(x), 20), row, spec).value for x in xs]


def test_somewhere_random_matrix():
    m = SomewhereRandomMatrix((BitVector(3, 4), BitVector(5, 4)))
    assert m.D == 2 and m.xor_rows() == BitVector(6, 4)
    with pytest.raises(ValueError):
        SomewhereRandomMatrix((BitVector(3, 4), BitVector(5, 5)))
