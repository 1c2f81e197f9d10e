import json

import numpy as np
import pytest

from nmforge.acceptance import fiber_labels, output_tv
from nmforge.bitlin import BitVector, Permutation, apply_perm, mask
from nmforge.nmx import (
    InterleavedInput,
    ParamProfile,
    ProfileError,
    _adv_parts,
    acb_wrap,
    acb_wrap_raw,
    adv_gen,
    adv_gen_raw,
    comm_nmext,
    fixing_id,
    ilext,
    ilext_batch,
    ilnm,
    ilnm_batch,
    ilnm_inv,
    ilnm_inv_batch,
    ilnm_sample_preimage,
    inv_key,
    inv_plan,
    list_profiles,
    load_profile,
    sample_preimage_batch,
    slice_,
)


def advice_batch(p, z):
    a = p.adv
    w = max(a.a1, a.a2)
    out = np.zeros_like(z)
    for g in range(1 << w):
        sel = (z & np.uint64(mask(w))) == g
        out[sel] = adv_gen_raw(p, z[sel], g & mask(a.a1), g & mask(a.a2))
    return out


# small helpers


def test_slice_examples():
    assert slice_(BitVector.from_str("10110"), 3) == BitVector.from_str("101")
    assert slice_(BitVector.from_str("10110"), 0).length == 0
    with pytest.raises(ValueError):
        slice_(BitVector.from_str("10110"), 6)


# evaluators


def test_outputs_have_declared_lengths(toy, rng):
    for _ in range(20):
        z = BitVector.random(20, rng)
        for fn in (ilext, ilnm, ilnm_inv):
            out = fn(toy, z)
            assert out.length == toy.m and out == fn(toy, z)
    with pytest.raises(ValueError):
        ilnm_inv(toy, BitVector(0, 19))


def test_batch_matches_scalar(toy, rng):
    z = rng.integers(0, 1 << 20, size=300, dtype=np.uint64)
    inv = ilnm_inv_batch(toy, z)
    fwd = ilnm_batch(toy, z)
    ext = ilext_batch(toy, z)
    for i, v in enumerate(z):
        bv = BitVector(int(v), 20)
        assert int(inv[i]) == ilnm_inv(toy, bv).value
        assert int(fwd[i]) == ilnm(toy, bv).value
        assert int(ext[i]) == ilext(toy, bv).value


def test_fallback_outputs_zero(toy):
    z = np.arange(1 << 20, dtype=np.uint64)
    out, fb = ilnm_inv_batch(toy, z, with_fallback=True)
    assert 0 < fb.mean() < 0.1
    assert not out[fb].any()
    zf = int(z[fb][0])
    key, zb2 = inv_key(toy, zf)
    assert inv_plan(toy, key, zb2).fallback
    assert fixing_id(toy, zf)[2] is None


def test_sample_preimage_round_trip(toy, rng):
    for g in range(1 << toy.m):
        zs = sample_preimage_batch(toy, g, 10_000, rng)
        assert np.all(ilnm_inv_batch(toy, zs) == g)
    for _ in range(20):
        g = BitVector.random(toy.m, rng)
        assert ilnm_inv(toy, ilnm_sample_preimage(toy, g, rng)) == g


def test_sampler_stays_in_one_fiber_shape(toy, rng):
    zs = sample_preimage_batch(toy, 1, 20_000, rng)
    labels, fb = fiber_labels(toy, zs)
    assert not fb.any()
    # a fiber has 2^fiber_dim points, so no fiber can collect more distinct samples
    per_fiber = {}
    for lab, z in zip(map(tuple, labels.tolist()), zs):
        per_fiber.setdefault(lab, set()).add(int(z))
    assert max(len(s) for s in per_fiber.values()) <= 1 << toy.fiber_dim


def test_ilnm_output_near_uniform(toy, rng):
    z = rng.integers(0, 1 << 20, size=1 << 16, dtype=np.uint64)
    assert output_tv(ilnm_batch(toy, z), toy.m) <= 0.2


def test_ilext_on_interleaved_flat_sources(toy, rng):
    for _ in range(3):
        xs = rng.choice(1 << 10, size=1 << 9, replace=False).astype(np.uint64)
        ys = rng.choice(1 << 10, size=1 << 9, replace=False).astype(np.uint64)
        pi = Permutation.random(20, rng)
        zs = (xs[:, None] | (ys[None, :] << np.uint64(10))).ravel()
        zs = pi.apply_raw(zs)
        assert output_tv(ilext_batch(toy, zs), toy.m) <= 0.2


# advice generation


def test_advice_differs_under_tampering(toy, rng):
    n = 100_000
    z = rng.integers(0, 1 << 20, size=n, dtype=np.uint64)
    flips = np.uint64(1) << rng.integers(0, 20, size=n, dtype=np.uint64)
    assert np.mean(advice_batch(toy, z) == advice_batch(toy, z ^ flips)) <= 0.1
    other = rng.integers(0, 1 << 20, size=n, dtype=np.uint64)
    other = np.where(other == z, other ^ np.uint64(1), other)
    assert np.mean(advice_batch(toy, z) == advice_batch(toy, other)) <= 0.1


def test_advice_bundle_layout(toy, rng):
    for _ in range(30):
        z = BitVector.random(20, rng)
        b = adv_gen(toy, z)
        assert b.length == toy.adv_len == b.flatten().length
        a = toy.adv
        assert b.flatten().value == adv_gen_raw(toy, z.value, z.value & mask(a.a1), z.value & mask(a.a2))


def test_advice_zero_input(toy):
    b = adv_gen(toy, BitVector(0, 20))
    assert b.w1.value == 0 and b.z3.value == 0


def test_advice_parts_linear_for_fixed_prefixes(toy, rng):
    for _ in range(200):
        z1, z2 = int(rng.integers(0, 4)), int(rng.integers(0, 8))
        x, y = (int(v) for v in rng.integers(0, 1 << 20, size=2))
        zx3, wx1, _ = _adv_parts(toy, x, z1, z2)
        zy3, wy1, _ = _adv_parts(toy, y, z1, z2)
        zs3, ws1, _ = _adv_parts(toy, x ^ y, z1, z2)
        assert zs3 == zx3 ^ zy3 and ws1 == wx1 ^ wy1


# wrapper and two-source view


def test_acb_wrap_is_xor_of_rows(toy, rng):
    from nmforge.acb import acb_raw
    from nmforge.extlib import lext_raw
    from nmforge.nmx import boundary_seed

    a = toy.adv
    for _ in range(30):
        z, w = BitVector.random(20, rng), BitVector.random(toy.adv_len, rng)
        expect = 0
        for i in range(1, a.D + 1):
            v = lext_raw(toy.wrap_lext1, z.value & mask(a.nw), boundary_seed(toy.wrap_lext1, i))
            r = lext_raw(toy.wrap_lext2, z.value, boundary_seed(toy.wrap_lext2, v))
            expect ^= int(acb_raw(toy.wrap_acb, r, z.value, w.value | (i << toy.adv_len)))
        assert acb_wrap(toy, z, w).value == expect == acb_wrap_raw(toy, z.value, w.value)


def test_comm_nmext_is_inverse_on_concatenation(toy, rng):
    for _ in range(50):
        x, y = BitVector.random(10, rng), BitVector.random(10, rng)
        assert comm_nmext(toy, x, y) == ilnm_inv(toy, x.concat(y))
    with pytest.raises(ValueError):
        comm_nmext(toy, BitVector(0, 9), BitVector(0, 11))


def test_interleaved_input_checks_permutation(rng):
    x, y = BitVector.random(4, rng), BitVector.random(4, rng)
    pi = Permutation.random(8, rng)
    ii = InterleavedInput.interleave(x, y, pi)
    assert ii.z == apply_perm(pi, x.concat(y))
    with pytest.raises(ValueError):
        InterleavedInput(BitVector(ii.z.value ^ 1, 8), x, y, pi)


# profiles


def test_bundled_profiles():
    assert {"toy20", "small64", "demo1k"} <= set(list_profiles())
    assert load_profile("demo1k").block == 1012
    assert load_profile("small64").block == 64


def test_profile_json_round_trip():
    for name in ("toy20", "small64", "demo1k"):
        p = load_profile(name)
        q = ParamProfile.from_json(json.loads(json.dumps(p.to_json())))
        assert q.to_json() == p.to_json()
        assert p.describe()["derived"]["fiber_dim"] == p.fiber_dim


def test_profile_validation_errors(toy):
    obj = toy.to_json()
    del obj["n7"]
    with pytest.raises(ProfileError, match="n7"):
        ParamProfile.from_json(obj)
    bad = toy.to_json()
    bad["n6"] = 3
    with pytest.raises(ProfileError):
        ParamProfile.from_json(bad)
    with pytest.raises(ProfileError, match="profile not found"):
        load_profile("no-such-profile")


def test_profile_search_path(toy, tmp_path, monkeypatch):
    obj = toy.to_json()
    obj["name"] = "mine"
    (tmp_path / "mine.json").write_text(json.dumps(obj))
    monkeypatch.setenv("NMFORGE_PROFILE_DIR", str(tmp_path))
    assert "mine" in list_profiles()
    assert load_profile("mine").name == "mine"
    assert load_profile(str(tmp_path / "mine.json")).n == toy.n


@pytest.mark.parametrize("name", ["small64", "demo1k"])
def test_larger_profiles_round_trip(name, rng):
    p = load_profile(name)
    for _ in range(3):
        g = BitVector.random(p.m, rng)
        z = ilnm_sample_preimage(p, g, rng)
        assert z.length == p.block and ilnm_inv(p, z) == g
