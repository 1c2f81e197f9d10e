from fractions import Fraction

import numpy as np
import pytest
from scipy.stats import chisquare

from nmforge import tamperlab as tl
from nmforge.bitlin import BitVector
from nmforge.nmcode import EncodeFailure, decode, decode_batch, encode, encode_batch, scheme
from nmforge.nmx import ilnm_inv_batch, load_profile


def test_scheme_shape(toy_scheme):
    assert toy_scheme.k == 2 and toy_scheme.block == 20
    assert toy_scheme.rate == Fraction(1, 10)
    assert toy_scheme.to_json() == {"profile": "toy20", "k": 2, "block": 20, "rate": "1/10"}
    assert scheme("toy20").profile is toy_scheme.profile


def test_correctness_every_message(toy_scheme, rng):
    for s in range(1 << toy_scheme.k):
        cs = encode_batch(toy_scheme, s, 5000, rng)
        assert np.all(decode_batch(toy_scheme, cs) == s)
        for _ in range(10):
            c = encode(toy_scheme, BitVector(s, 2), rng)
            assert c and decode(toy_scheme, c) == BitVector(s, 2)


def test_exhaustive_decode_agrees_with_batch(toy_scheme):
    table, fb = tl.decode_table(toy_scheme.profile)
    z = np.arange(1 << 20, dtype=np.uint64)
    assert np.array_equal(table, ilnm_inv_batch(toy_scheme.profile, z))
    assert fb.mean() == pytest.approx(1 / 16)


def test_encodings_are_randomized(toy_scheme, rng):
    cs = encode_batch(toy_scheme, 3, 1000, rng)
    assert len(np.unique(cs)) >= 990


def test_seed_determinism(toy_scheme):
    a = encode(toy_scheme, BitVector(1, 2), np.random.default_rng(7))
    b = encode(toy_scheme, BitVector(1, 2), np.random.default_rng(7))
    assert a == b
    x = encode_batch(toy_scheme, 2, 50, np.random.default_rng(7))
    y = encode_batch(toy_scheme, 2, 50, np.random.default_rng(7))
    assert np.array_equal(x, y)


def test_encoding_uniform_over_valid_codewords(toy_scheme, rng):
    table, fb = tl.decode_table(toy_scheme.profile)
    valid = np.nonzero((table == 1) & ~fb)[0]
    pos = np.full(1 << 20, -1, dtype=np.int64)
    pos[valid] = np.arange(len(valid))
    cs = encode_batch(toy_scheme, 1, 10 * len(valid), rng)
    idx = pos[cs.astype(np.int64)]
    assert idx.min() >= 0
    counts = np.bincount(idx, minlength=len(valid))
    assert chisquare(counts).pvalue >= 1e-3


def test_length_checks(toy_scheme, rng):
    with pytest.raises(ValueError):
        encode(toy_scheme, BitVector(0, 3), rng)
    with pytest.raises(ValueError):
        decode(toy_scheme, BitVector(0, 21))
    with pytest.raises(ValueError):
        encode_batch(toy_scheme, 4, 1, rng)


def test_encode_failure_is_falsy():
    f = EncodeFailure(BitVector(0, 2), "no admissible fixing")
    assert not f


def test_identity_tampering_keeps_message(toy_scheme, rng):
    spec = tl.SplitState(10, tl.BitFunction.identity(10), tl.BitFunction.identity(10))
    cs = encode_batch(toy_scheme, 2, 2000, rng)
    assert np.all(decode_batch(toy_scheme, spec.apply_raw(cs)) == 2)


@pytest.mark.parametrize("name", ["small64", "demo1k"])
def test_round_trip_larger_profiles(name, rng):
    sch = scheme(load_profile(name))
    for _ in range(3):
        s = BitVector.random(sch.k, rng)
        c = encode(sch, s, rng)
        assert c.length == sch.block and decode(sch, c) == s
