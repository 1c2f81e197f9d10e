import numpy as np
import pytest

from nmforge.acb import AcbParams, _rung, acb, acb_raw, flip_flop, flip_flop_raw
from nmforge.acceptance import ACB_TOY, acb_joint_tv
from nmforge.bitlin import BitVector

P = AcbParams(n=20, n1=12, n2=3, t=1, h=4, d=4)


def test_deterministic_and_output_length(rng):
    for _ in range(50):
        y, x, a = BitVector.random(12, rng), BitVector.random(20, rng), BitVector.random(4, rng)
        out = acb(P, y, x, a)
        assert out.length == 3 and out == acb(P, y, x, a)


def test_zero_advice_rounds():
    p = AcbParams(n=10, n1=6, n2=2, t=1, h=0, d=3)
    assert p.widths == (6,)
    out = acb(p, BitVector(0b101101, 6), BitVector(0x2A5, 10), BitVector(0, 0))
    assert out.length == 2


def test_widths_halve_to_floor():
    assert P.widths == (12, 6, 3, 3, 3)
    assert AcbParams(n=8, n1=16, n2=1, t=1, h=3, d=2).widths == (16, 8, 4, 2)


def test_flip_flop_bits_disagree(rng):
    trials = 10_000
    y = rng.integers(0, 1 << 12, size=trials, dtype=np.uint64)
    x = rng.integers(0, 1 << 20, size=trials, dtype=np.uint64)
    y0 = flip_flop_raw(P, y, x, 0, 0)
    y1 = flip_flop_raw(P, y, x, 1, 0)
    assert np.mean(y0 != y1) >= 0.9


def test_flip_flop_checks_shapes():
    with pytest.raises(ValueError):
        flip_flop(P, BitVector(0, 11), BitVector(0, 20), 0)
    with pytest.raises(ValueError):
        flip_flop(P, BitVector(0, 12), BitVector(0, 20), 2)
    with pytest.raises(ValueError):
        flip_flop(P, BitVector(0, 12), BitVector(0, 20), 0, round_index=4)
    assert flip_flop(P, BitVector(7, 12), BitVector(9, 20), 1).length == 6


def test_rung_is_a_permutation_for_fixed_helper(rng):
    ys = np.arange(1 << 12, dtype=np.uint64)
    for _ in range(4):
        helper = np.full_like(ys, rng.integers(0, 1 << 20))
        for suffix in (False, True):
            out = _rung(P, ys, helper, 12, suffix, 3)
            assert len(np.unique(out)) == len(ys)


def test_array_matches_scalar(rng):
    y = rng.integers(0, 1 << 12, size=64, dtype=np.uint64)
    x = rng.integers(0, 1 << 20, size=64, dtype=np.uint64)
    a = rng.integers(0, 16, size=64, dtype=np.uint64)
    got = acb_raw(P, y, x, a)
    assert [int(v) for v in got] == [int(acb_raw(P, int(yy), int(xx), int(aa))) for yy, xx, aa in zip(y, x, a)]


def test_single_bit_advice_changes_output(rng):
    p = AcbParams(n=24, n1=16, n2=8, t=1, h=4, d=4)
    trials = 5000
    y = rng.integers(0, 1 << 16, size=trials, dtype=np.uint64)
    x = rng.integers(0, 1 << 24, size=trials, dtype=np.uint64)
    for a in (0b0000, 0b1011):
        base = acb_raw(p, y, x, a)
        for j in range(4):
            assert np.mean(acb_raw(p, y, x, a ^ (1 << j)) != base) >= 0.9


def test_bounds_reported_not_enforced():
    assert P.violations()
    assert any(v.startswith("n1") for v in P.violations())
    with pytest.raises(ValueError):
        AcbParams(n=20, n1=12, n2=3, t=1, h=4, d=4, enforce_bounds=True)
    big = AcbParams(n=3000, n1=3000, n2=22, t=1, h=1, d=4, enforce_bounds=True)
    assert big.violations() == []


def test_invalid_lengths():
    with pytest.raises(ValueError):
        AcbParams(n=8, n1=2, n2=3, t=1, h=1, d=2)
    with pytest.raises(ValueError):
        AcbParams(n=0, n1=4, n2=1, t=1, h=1, d=2)


def test_json_round_trip():
    for p in (P, ACB_TOY, AcbParams(n=9, n1=8, n2=2, t=2, h=1, d=3, lambda_=2, k1=7, min_width=4)):
        assert AcbParams.from_json(p.to_json()) == p


def test_honest_output_close_to_uniform_given_tampered(rng):
    p = ACB_TOY
    delta = np.uint64(0x3C3C3)
    tv, se = acb_joint_tv(p, 0b01, [(0b10, lambda y: y ^ np.uint64(0x0F0F), lambda y, z: z ^ delta)],
                          50_000, rng)
    assert tv + 3 * se <= 0.25


def test_identical_advice_is_not_broken(rng):
    # sanity check on the harness: same advice, same inputs gives full correlation
    p = ACB_TOY
    tv, _ = acb_joint_tv(p, 0b01, [(0b01, lambda y: y, lambda y, z: z)], 20_000, rng)
    assert tv >= 0.5
