"""The twelve acceptance checks, shared by the test suite and ``nmforge verify``.

Each check enumerates or samples a desk-scale instance, compares the measured
quantity with its threshold and wall-time budget, and returns a
:class:`CriterionResult`.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np
from scipy.stats import chisquare

from . import tamperlab as tl
from .acb import AcbParams, acb_raw
from .bitlin import BitMatrix, BitVector, Permutation, mask, rank, rank_many
from .extlib import ExtractorKind, SeededExtractorSpec, ip_extract_raw, lext_preimage, lext_raw, sampler_values
from .field2m import default_field, gf_mul
from .lincode import build_dual_bch, min_distance
from .nmcode import decode, decode_batch, encode, encode_batch, scheme
from .nmx import (
    _functionals,
    _group_by_key,
    gather,
    ilext_batch,
    ilnm_inv_batch,
    inv_plan,
    load_profile,
)

__all__ = ["CRITERIA", "CriterionResult", "run", "run_all"]

TOY = "toy20"


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    measured: float | int | str
    threshold: str
    seconds: float
    budget: float
    details: dict = field(default_factory=dict)

    @property
    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return (f"{verdict} criterion {self.number:2d} {self.title}: measured {self.measured} "
                f"(need {self.threshold}) in {self.seconds:.1f}s / {self.budget:.0f}s")

    def to_json(self) -> dict:
        return asdict(self)


def _finish(number: int, title: str, ok: bool, measured, threshold: str, t0: float, budget: float,
            **details) -> CriterionResult:
    secs = time.perf_counter() - t0
    details["within_budget"] = secs <= budget
    return CriterionResult(number, title, bool(ok and secs <= budget), measured, threshold,
                           round(secs, 2), budget, details)


# 1 ----------------------------------------------------------------------------


def correctness(seed: int = 0, per_message: int = 10_000) -> CriterionResult:
    t0 = time.perf_counter()
    sch = scheme(TOY)
    rng = tl.named_rng(seed, "correctness")
    failures = 0
    for s in range(1 << sch.k):
        cs = encode_batch(sch, s, per_message, rng)
        failures += int(np.count_nonzero(decode_batch(sch, cs) != s))
        msg = BitVector(s, sch.k)
        for _ in range(25):
            c = encode(sch, msg, rng)
            failures += int(not c or decode(sch, c) != msg)
    return _finish(1, "perfect correctness on toy20", failures == 0, failures, "0 failures", t0, 10,
                   messages=1 << sch.k, encodings_per_message=per_message + 25)


# 2 ----------------------------------------------------------------------------


def fiber_labels(profile, z: np.ndarray):
    """Per-codeword fiber label rows (key, z̄₂, z₅, z̄₆, advice functionals, output) and fallback flags."""
    p = profile
    labels = np.zeros((len(z), 7), dtype=np.uint64)
    fb = np.zeros(len(z), dtype=bool)
    o = p.offsets
    for key, zb2, sel in _group_by_key(p, z):
        plan = inv_plan(p, key, zb2)
        if plan.fallback:
            fb[sel] = True
            continue
        zs = z[sel]
        labels[sel, 0] = key
        labels[sel, 1] = zb2
        labels[sel, 2] = (zs >> np.uint64(o[4])) & np.uint64(mask(p.n5))
        labels[sel, 3] = gather(zs, plan.zbar6_pos)
        labels[sel, 4] = _functionals(plan.e_rows, zs)
        labels[sel, 5] = _functionals(plan.lext0_rows, zs)
    labels[:, 6] = ilnm_inv_batch(p, z)
    return labels, fb


def fiber_structure() -> CriterionResult:
    t0 = time.perf_counter()
    p = load_profile(TOY)
    z = np.arange(1 << p.block, dtype=np.uint64)
    labels, fb = fiber_labels(p, z)
    live = np.nonzero(~fb)[0]
    _, inverse, sizes = np.unique(labels[live], axis=0, return_inverse=True, return_counts=True)
    inverse = inverse.ravel()
    common = int(sizes[0])
    uniform_size = bool(np.all(sizes == common))
    dims: set[int] = set()
    affine = uniform_size
    if uniform_size:
        order = np.argsort(inverse, kind="stable")
        members = z[live][order].reshape(len(sizes), common)
        ranks = rank_many(members[:, 1:] ^ members[:, :1], p.block)
        dims = {int(r) for r in np.unique(ranks)}
        # 2^r distinct points spanning r dimensions around a member form an affine space
        affine = bool(np.all(np.left_shift(1, ranks) == common))
    ok = uniform_size and affine and len(dims) == 1
    return _finish(2, "affine fibers of one dimension on toy20", ok, sorted(dims), "a single dimension", t0, 300,
                   fibers=len(sizes), fiber_size=common, expected_dim=p.fiber_dim,
                   fallback_fraction=float(fb.mean()))


# 3 ----------------------------------------------------------------------------


def sampler_uniformity(seed: int = 0, samples: int = 1_000_000) -> CriterionResult:
    t0 = time.perf_counter()
    sch = scheme(TOY)
    dec, fb = tl.decode_table(sch.profile)
    rng = tl.named_rng(seed, "sampler")
    pvals, outside = {}, 0
    for s in range(1 << sch.k):
        fiber = np.nonzero((dec == s) & ~fb)[0].astype(np.uint64)
        draws = encode_batch(sch, s, samples, rng)
        idx = np.searchsorted(fiber, draws)
        hit = (idx < len(fiber)) & (fiber[np.minimum(idx, len(fiber) - 1)] == draws)
        outside += int(np.count_nonzero(~hit))
        pvals[s] = float(chisquare(np.bincount(idx[hit], minlength=len(fiber))).pvalue)
    worst = min(pvals.values())
    return _finish(3, "fiber sampler uniformity on toy20", outside == 0 and worst >= 1e-3, round(worst, 4),
                   "chi-square p ≥ 0.001", t0, 600, p_values=pvals, samples_outside_fiber=outside)


# 4 ----------------------------------------------------------------------------


def _random_affine(rng, n: int, k: int) -> np.ndarray:
    while True:
        basis = [int(v) for v in rng.integers(1, 1 << n, size=k)]
        if rank(BitMatrix(tuple(basis), n)) == k:
            break
    pts = np.zeros(1 << k, dtype=np.uint64)
    for j, b in enumerate(basis):
        pts[1 << j:2 << j] = pts[:1 << j] ^ np.uint64(b)
    return pts ^ np.uint64(rng.integers(0, 1 << n))


def ip_joint_tv(xs: np.ndarray, ys: np.ndarray, m: int, r: int) -> float:
    """Exact TV of (IP(X, Y), X) from (U_m, X) for flat X, Y."""
    fld = default_field(m)
    xi = np.repeat(np.arange(len(xs)), len(ys))
    pair = tl.EnumerableSource(np.arange(len(xs) * len(ys), dtype=np.uint64))
    ip = ip_extract_raw(np.repeat(xs, len(ys)), np.tile(ys, len(xs)), m, r, fld.modulus)
    joint = tl.exact_joint(lambda i: ip[i.astype(np.int64)], lambda i: xi[i.astype(np.int64)],
                           pair, 1 << m, len(xs), exact=False)
    ref = tl.DistributionTable.uniform(1 << m).product(tl.DistributionTable.uniform(len(xs)))
    return tl.tv_distance(joint, ref)


def ip_extractor(seed: int = 0, trials: int = 12) -> CriterionResult:
    t0 = time.perf_counter()
    n, m, k = 8, 2, 7
    r = n // m
    rng = tl.named_rng(seed, "inner-product")
    tvs = []
    for j in range(trials):
        if j % 2:
            xs, ys = _random_affine(rng, n, k), _random_affine(rng, n, k)
        else:
            xs = np.sort(rng.choice(1 << n, size=1 << k, replace=False)).astype(np.uint64)
            ys = np.sort(rng.choice(1 << n, size=1 << k, replace=False)).astype(np.uint64)
        tvs.append(max(ip_joint_tv(xs, ys, m, r), ip_joint_tv(ys, xs, m, r)))
    bound = 2.0 ** (-(k + k - n - m) / 2)
    worst = max(tvs)
    return _finish(4, "inner-product extractor error", worst <= bound, round(worst, 5), f"≤ {bound}", t0, 60,
                   sources=trials)


# 5 ----------------------------------------------------------------------------


def seed_ranks(spec: SeededExtractorSpec) -> np.ndarray:
    """Rank of LExt(·, seed) for every seed, from its column images."""
    f = spec.field
    seeds = np.arange(spec.seed_count, dtype=np.uint64)
    a = spec.seed_element(seeds)
    cols = np.stack([gf_mul(a, np.full_like(a, 1 << j), f.m, f.modulus) for j in range(spec.n_in)], axis=1)
    return rank_many(cols & np.uint64(mask(spec.m_out)), spec.m_out)


def fixed_rank(seed: int = 0) -> CriterionResult:
    t0 = time.perf_counter()
    cases = [(16, 16, 5), (16, 16, 16), (16, 9, 11), (12, 12, 7), (10, 10, 3)]
    rng = tl.named_rng(seed, "fixed-rank")
    bad, checked, dims = 0, 0, set()
    for n_in, d, m_out in cases:
        spec = SeededExtractorSpec(n_in, d, m_out, ExtractorKind.FIXED_RANK)
        ranks = seed_ranks(spec)
        if d == n_in:
            ranks = ranks[1:]  # seed 0 is excluded in fixed-rank mode
        bad += int(np.count_nonzero(ranks != m_out))
        checked += len(ranks)
        for s in rng.integers(1, spec.seed_count, size=64):
            y = BitVector(int(rng.integers(0, 1 << m_out)), m_out)
            space = lext_preimage(spec, BitVector(int(s), d), y)
            dims.add((n_in, m_out, space.dim))
            bad += int(space.dim != n_in - m_out)
            bad += int(lext_raw(spec, space.offset.value, int(s)) != y.value)
    return _finish(5, "fixed-rank linear extractor", bad == 0, bad, "0 rank or dimension defects", t0, 60,
                   seeds_checked=checked, preimage_dims=sorted(dims))


# 6 ----------------------------------------------------------------------------


def sampler_deviation(seed: int = 0, sets: int = 20) -> CriterionResult:
    t0 = time.perf_counter()
    n_in, k, m_out, d = 12, 8, 4, 8
    spec = SeededExtractorSpec(n_in, d, m_out, ExtractorKind.STRONG_HASH, k_min=k)
    rng = tl.named_rng(seed, "sampler-deviation")
    vals = np.stack(sampler_values(spec, np.arange(1 << n_in, dtype=np.uint64), 1 << m_out), axis=1)
    D = spec.seed_count
    counts = []
    for _ in range(sets):
        R = rng.choice(1 << m_out, size=1 << (m_out - 1), replace=False)
        hits = np.isin(vals, R).sum(axis=1)
        counts.append(int(np.count_nonzero(np.abs(hits - 0.5 * D) > spec.eps * D)))
    worst = max(counts)
    return _finish(6, "sampler deviation count", worst < 1 << k, worst, f"< {1 << k} in every set", t0, 120,
                   eps=spec.eps, seeds=D, counts=counts)


# 7 ----------------------------------------------------------------------------


def dual_bch() -> CriterionResult:
    t0 = time.perf_counter()
    expected = {1: (4, 8), 2: (8, 4)}
    found, ok = {}, True
    for t_b, (dim, dist) in expected.items():
        code = build_dual_bch(15, t_b)
        d = min_distance(code.gen)
        subsets_ok = all(
            rank(BitMatrix(tuple(code.gen.rows[i] for i in sub), code.k_in)) == t_b
            for sub in itertools.combinations(range(15), t_b)
        )
        found[t_b] = {"dim": code.k_in, "min_distance": d, "subsets_full_rank": subsets_ok}
        ok &= code.k_in == dim and d >= dist and d >= round(code.rel_distance * 15) and subsets_ok
    return _finish(7, "dual-BCH structure at n_b = 15", ok, str(found), "[15,4,8] and [15,8,≥4], full rank",
                   t0, 60)


# 8 ----------------------------------------------------------------------------


def uniformity_sources(profile, rng) -> dict[str, np.ndarray]:
    n = profile.n
    full = np.arange(1 << profile.block, dtype=np.uint64)
    half = np.sort(rng.choice(1 << profile.block, size=1 << (profile.block - 1), replace=False)).astype(np.uint64)
    xs = rng.choice(1 << n, size=1 << (n - 1), replace=False).astype(np.uint64)
    ys = rng.choice(1 << n, size=1 << (n - 1), replace=False).astype(np.uint64)
    pi = Permutation.random(profile.block, rng)
    inter = pi.apply_raw((xs[:, None] | (ys[None, :] << np.uint64(n))).ravel())
    return {"uniform": full, "flat-half": half, "interleaved-flat": inter}


def output_tv(values: np.ndarray, m: int) -> float:
    got = tl.DistributionTable.from_counts(np.bincount(values.astype(np.int64), minlength=1 << m))
    return tl.tv_distance(got, tl.DistributionTable.uniform(1 << m))


def extractor_uniformity(seed: int = 0) -> CriterionResult:
    t0 = time.perf_counter()
    p = load_profile(TOY)
    rng = tl.named_rng(seed, "uniformity")
    tvs = {}
    for name, src in uniformity_sources(p, rng).items():
        tvs[f"ilext/{name}"] = output_tv(ilext_batch(p, src), p.ilext.lext2.m_out)
        tvs[f"ilnm_inv/{name}"] = output_tv(ilnm_inv_batch(p, src), p.m)
    worst = max(tvs.values())
    return _finish(8, "extractor output uniformity on toy20", worst <= 0.2, round(worst, 5), "≤ 0.2", t0, 1200,
                   tv=tvs, note="desk-scale budget, not an asymptotic bound")


# 9 ----------------------------------------------------------------------------


def nm_battery(seed: int = 0) -> CriterionResult:
    t0 = time.perf_counter()
    sch = scheme(TOY)
    errors, ok = {}, True
    for name, spec in tl.battery(sch.profile.n, tl.named_rng(seed, "battery")):
        err = tl.nm_experiment(sch, spec, seed=seed, adversary=name).nm_error
        errors[name] = err
        if name == "identity":
            ok &= err == 0
        elif name.startswith("constant"):
            ok &= err <= 2.0 ** -sch.block
        else:
            ok &= err <= 0.25
    worst = max(errors.values())
    return _finish(9, "non-malleability battery on toy20", ok, round(worst, 5), "≤ 0.25 each", t0, 1800,
                   errors=errors)


# 10 ---------------------------------------------------------------------------


def random_linear_composed(n: int, rng) -> tl.LinearComposed:
    inner = tl.Interleaved(n, tl.BitFunction.random_table(n, n, rng), tl.BitFunction.random_table(n, n, rng),
                           Permutation.random(2 * n, rng))
    return tl.LinearComposed(BitMatrix.random(2 * n, 2 * n, rng), inner)


def decomposition(seed: int = 0, specs: int = 50, n: int = 6) -> CriterionResult:
    t0 = time.perf_counter()
    rng = tl.named_rng(seed, "decomposition")
    z = np.arange(1 << (2 * n), dtype=np.uint64)
    mismatches = 0
    for _ in range(specs):
        spec = random_linear_composed(n, rng)
        mismatches += int(np.count_nonzero(tl.decompose_linear_composed(spec).apply_raw(z) != spec.apply_raw(z)))
    return _finish(10, "linear-composed decomposition identity", mismatches == 0, mismatches, "0 mismatches",
                   t0, 120, specs=specs, block=2 * n)


# 11 ---------------------------------------------------------------------------

ACB_TOY = AcbParams(n=24, n1=16, n2=2, t=2, h=2, d=4)


def acb_joint_tv(p: AcbParams, honest: int, copies: list[tuple[int, Callable, Callable]], trials: int, rng):
    """MC joint TV of (honest, tampered outputs) from (uniform, tampered outputs), and its standard error.

    The helper is ``X + Z`` with ``X`` uniform and ``Z`` a function of the row;
    each copy is ``(advice, row tamper, helper-offset tamper)``.
    """
    y = rng.integers(0, 1 << p.n1, size=trials, dtype=np.uint64)
    x = rng.integers(0, 1 << p.n, size=trials, dtype=np.uint64)
    ztab = rng.integers(0, 1 << p.n, size=1 << p.n1, dtype=np.uint64)
    z = ztab[y.astype(np.int64)]
    out = acb_raw(p, y, x ^ z, honest).astype(np.int64)
    tam = np.zeros(trials, dtype=np.int64)
    for j, (adv, row_f, z_f) in enumerate(copies):
        tam |= acb_raw(p, row_f(y), x ^ z_f(y, z), adv).astype(np.int64) << (p.n2 * j)
    cells_t = 1 << (p.n2 * len(copies))
    joint = np.bincount(out * cells_t + tam, minlength=(1 << p.n2) * cells_t) / trials
    marg = np.bincount(tam, minlength=cells_t) / trials
    ref = np.outer(np.full(1 << p.n2, 2.0 ** -p.n2), marg).ravel()
    tv = 0.5 * float(np.abs(joint - ref).sum())
    se = 0.5 * float(np.sqrt(joint * (1 - joint) / trials).sum() + np.sqrt(marg * (1 - marg) / trials).sum())
    return tv, se


def acb_contract(seed: int = 0, trials: int = 100_000) -> CriterionResult:
    t0 = time.perf_counter()
    p = ACB_TOY
    rng = tl.named_rng(seed, "acb")
    gtab = rng.integers(0, 1 << p.n1, size=1 << p.n1, dtype=np.uint64)
    ztab2 = rng.integers(0, 1 << p.n, size=1 << p.n1, dtype=np.uint64)
    delta = np.uint64(rng.integers(1, 1 << p.n))
    ident_row = lambda y: y  # noqa: E731
    same_z = lambda y, z: z  # noqa: E731
    # advice strings "01" and "10": index 0 is the low bit
    scenarios = {
        "identity helper, 01 vs 10": (0b10, [(0b01, ident_row, same_z)]),
        "shifted helper, 01 vs 11": (0b10, [(0b11, lambda y: y ^ np.uint64(0x5A5A), lambda y, z: z ^ delta)]),
        "two copies, 00 vs 01 and 10": (0b00, [
            (0b10, lambda y: gtab[y.astype(np.int64)], lambda y, z: ztab2[y.astype(np.int64)]),
            (0b01, ident_row, lambda y, z: z ^ delta),
        ]),
    }
    res, ok = {}, True
    for name, (honest, copies) in scenarios.items():
        tv, se = acb_joint_tv(p, honest, copies, trials, rng)
        res[name] = {"tv": round(tv, 5), "se": round(se, 5)}
        ok &= tv + 3 * se <= 0.25
    worst = max(v["tv"] + 3 * v["se"] for v in res.values())
    return _finish(11, "advice correlation breaker joint closeness", ok, round(worst, 5), "TV + 3σ ≤ 0.25", t0,
                   300, scenarios=res, params=p.to_json(), violated_bounds=p.violations())


# 12 ---------------------------------------------------------------------------


def mc_agreement(seed: int = 0, seeds: int = 100, trials: int = 5000) -> CriterionResult:
    t0 = time.perf_counter()
    sch = scheme(TOY)
    bat = dict(tl.battery(sch.profile.n, tl.named_rng(seed, "battery")))
    names = ["bitflip-single-5", "interleaved-tables-0", "linear-bitflip-0", "protocol-0"]
    within = {}
    for name in names:
        exact = tl.nm_experiment(sch, bat[name], seed=seed).nm_error
        hits = 0
        for s in range(seeds):
            r = tl.nm_experiment(sch, bat[name], mode="monte-carlo", trials=trials, seed=seed * 1000 + s)
            hits += abs(r.nm_error - exact) <= 3 * r.std_error
        within[name] = hits
    worst = min(within.values())
    return _finish(12, "Monte Carlo agrees with exact mode", worst >= 99, worst, f"≥ 99 of {seeds} seeds",
                   t0, 1800, within_3se=within, trials=trials)


CRITERIA: dict[int, Callable[[], CriterionResult]] = {
    1: correctness,
    2: fiber_structure,
    3: sampler_uniformity,
    4: ip_extractor,
    5: fixed_rank,
    6: sampler_deviation,
    7: dual_bch,
    8: extractor_uniformity,
    9: nm_battery,
    10: decomposition,
    11: acb_contract,
    12: mc_agreement,
}


def run(number: int) -> CriterionResult:
    if number not in CRITERIA:
        raise ValueError(f"no criterion {number}; choose from 1-{len(CRITERIA)}")
    return CRITERIA[number]()


def run_all(numbers=None, echo: Callable[[str], None] | None = None) -> list[CriterionResult]:
    out = []
    for k in numbers or sorted(CRITERIA):
        r = run(k)
        if echo:
            echo(r.line)
        out.append(r)
    return out
