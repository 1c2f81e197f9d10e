"""Seedless non-malleable extractors for interleaved sources.

Four evaluators share one parameter profile:

* ``ilext``: the interleaved-source extractor (condense, extract rows, break
  correlations with the row index as advice, fold, extract).
* ``adv_gen`` / ``acb_wrap`` / ``ilnm``: advice generation followed by the
  row-wise correlation breaker.
* ``ilnm_inv``: the invertible variant whose fibers are affine spaces,
  together with ``ilnm_sample_preimage`` which samples a fiber uniformly.
* ``comm_nmext``: the two-source view used against communicating tamperers.

Every evaluator is written once over "raw" values, which are either Python
ints or numpy ``uint64`` arrays.  Whatever depends only on a few leading
slices of the input (sampled position sets, the LExt₀ seed, the chosen code
positions) lives in a cached per-key plan, so whole-domain enumeration groups
inputs by key and runs the remaining arithmetic vectorized.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from importlib import resources
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np

from .acb import AcbParams, acb_raw
from .bitlin import BitMatrix, BitVector, mask, parity, random_int, row_reduce, solve_affine
from .extlib import (
    CondenserSpec,
    ExtractorKind,
    SeededExtractorSpec,
    condense_raw,
    lext_raw,
    linear_map,
    probe_distinct,
    sampler_values,
)
from .lincode import LinearCodeSpec, project_raw

__all__ = [
    "AdviceBundle",
    "AdvParams",
    "IlextParams",
    "InterleavedInput",
    "InvPlan",
    "ParamProfile",
    "ProfileError",
    "SamplerFailure",
    "acb_wrap",
    "adv_gen",
    "boundary_seed",
    "comm_nmext",
    "fixing_id",
    "ilext",
    "ilext_batch",
    "ilnm",
    "ilnm_batch",
    "ilnm_inv",
    "ilnm_inv_batch",
    "ilnm_sample_preimage",
    "inv_key",
    "inv_plan",
    "sample_preimage_batch",
    "list_profiles",
    "load_profile",
    "slice_",
]

PROFILE_ENV = "NMFORGE_PROFILE_DIR"


class ProfileError(ValueError):
    """A parameter profile is missing or violates a shape constraint."""


class SamplerFailure(RuntimeError):
    """The pre-image sampler exhausted its retries."""


def _bits(n: int) -> int:
    """Bits needed to write the integers 1..n."""
    return max(1, int(n).bit_length())


def _log2_exact(n: int, what: str) -> int:
    if n < 1 or n & (n - 1):
        raise ProfileError(f"{what} = {n} must be a power of two")
    return n.bit_length() - 1


def _clog2(n: int) -> int:
    return max(0, math.ceil(math.log2(n))) if n > 1 else 0


def _is_array(x) -> bool:
    return isinstance(x, np.ndarray)


def _u(x, like):
    """Lift an int constant to uint64 when ``like`` is an array."""
    return np.uint64(x) if _is_array(like) else x


def boundary_seed(spec: SeededExtractorSpec, s):
    """Map seed 0 to seed 1 when the seed fills the whole field."""
    if spec.d < spec.degree:
        return s
    if _is_array(s):
        return s | (s == 0).astype(np.uint64)
    return s if s else 1


def gather(z, positions: Sequence[int]):
    """Bits of ``z`` at ``positions`` packed low to high."""
    out = project_raw(z, positions)
    if _is_array(z) and not _is_array(out):
        return np.zeros_like(z)
    return out


def scatter(bits, positions: Sequence[int]):
    """Inverse of :func:`gather`: place packed bits at ``positions``."""
    out = 0
    for j, p in enumerate(positions):
        out = out | (((bits >> j) & 1) << p)
    if _is_array(bits) and not _is_array(out):
        return np.zeros_like(bits)
    return out


def slice_(z: BitVector, length: int) -> BitVector:
    """The length-``length`` prefix."""
    if not 0 <= length <= z.length:
        raise ValueError(f"slice length {length} outside [0, {z.length}]")
    return z.prefix(length)


# ---------------------------------------------------------------- parameters


def _lin(n_in: int, d: int, m_out: int, kind=ExtractorKind.LINEAR) -> SeededExtractorSpec:
    return SeededExtractorSpec(n_in, d, m_out, kind)


def _sampler(n_in: int, d: int, range_: int) -> SeededExtractorSpec:
    return SeededExtractorSpec(n_in, d, _clog2(range_), ExtractorKind.STRONG_HASH)


@dataclass(frozen=True)
class IlextParams:
    """Shape of one interleaved-source extractor instance."""

    n_in: int
    m_out: int
    n1: int
    iterations: int
    r_len: int
    s_len: int
    acb_d: int
    t: int = 1

    def __post_init__(self) -> None:
        if not 1 <= self.n1 <= self.n_in:
            raise ProfileError(f"ilext slice {self.n1} outside [1, {self.n_in}]")
        if self.m_out > self.n_in:
            raise ProfileError("ilext output longer than its input")
        try:
            self.condenser
            self.lext1
            self.acb
            self.lext2
        except ValueError as exc:
            raise ProfileError(f"ilext shape: {exc}") from exc

    @cached_property
    def condenser(self) -> CondenserSpec:
        return CondenserSpec(self.n1, self.iterations)

    @property
    def rows(self) -> int:
        return self.condenser.D_con

    @cached_property
    def lext1(self) -> SeededExtractorSpec:
        return _lin(self.n_in, min(self.condenser.row_len, self.n_in), self.r_len)

    @cached_property
    def acb(self) -> AcbParams:
        return AcbParams(
            n=self.n_in, n1=self.r_len, n2=self.s_len, t=self.t, h=_bits(self.rows),
            d=self.acb_d, min_width=max(self.s_len, 2) if self.r_len >= 2 else self.r_len,
        )

    @cached_property
    def lext2(self) -> SeededExtractorSpec:
        return _lin(self.n_in, self.s_len, self.m_out)

    def to_json(self) -> dict:
        return {k: getattr(self, k) for k in ("n_in", "m_out", "n1", "iterations", "r_len", "s_len", "acb_d", "t")}

    @classmethod
    def from_json(cls, obj: dict) -> "IlextParams":
        return cls(**{k: int(v) for k, v in obj.items()})


@dataclass(frozen=True)
class AdvParams:
    """Advice generator and row-wise wrapper used by :func:`ilnm`."""

    a1: int  # prefix feeding the code-position sampler
    a2: int  # prefix feeding the input-position sampler
    dS: int
    dT: int
    n0: int
    L: int
    inner: IlextParams
    nw: int  # prefix feeding the row seeds
    D: int
    v_len: int
    r_len: int
    acb_d: int

    def to_json(self) -> dict:
        out = {k: getattr(self, k) for k in ("a1", "a2", "dS", "dT", "n0", "L", "nw", "D", "v_len", "r_len", "acb_d")}
        out["inner"] = self.inner.to_json()
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "AdvParams":
        args = {k: int(v) for k, v in obj.items() if k != "inner"}
        return cls(inner=IlextParams.from_json(obj["inner"]), **args)


@dataclass(frozen=True, eq=False)
class ParamProfile:
    """Concrete lengths for every evaluator at one block size ``2n``."""

    name: str
    n: int
    m: int
    n0: int
    n1: int
    n2: int
    n3: int
    n4: int
    n5: int
    n6: int
    n7: int
    n8: int
    n9: int
    D: int
    D1: int
    D2: int
    code: LinearCodeSpec
    v_len: int
    r_len: int
    acb_d: int
    inner: IlextParams
    ilext: IlextParams
    adv: AdvParams
    t: int = 1
    min_n6: int = 0
    constants: dict = field(default_factory=dict)
    description: str = ""

    def __post_init__(self) -> None:
        self._validate_shapes()

    # derived lengths ---------------------------------------------------

    @property
    def block(self) -> int:
        return 2 * self.n

    @property
    def L0(self) -> int:
        return math.isqrt(self.n0)

    @property
    def tbar1_size(self) -> int:
        return self.D1 - self.L0

    @property
    def z8_len(self) -> int:
        return self.n6 - self.D2 - self.n7 - self.n8

    @property
    def row_bits(self) -> int:
        return _bits(self.D)

    @property
    def advice_len(self) -> int:
        return self.n1 + self.n2 + self.D2 + self.tbar1_size + self.L0

    @property
    def fiber_dim(self) -> int:
        """Dimension of every fiber at fixed key, advice values and z̄₆."""
        return (self.n8 - self.m) + (self.z8_len - self.D1)

    @property
    def offsets(self) -> tuple[int, ...]:
        """Start offsets of z₁ … z₆."""
        out, acc = [], 0
        for ln in (self.n1, self.n2, self.n3, self.n4, self.n5, self.n6):
            out.append(acc)
            acc += ln
        return tuple(out)

    @property
    def key_len(self) -> int:
        return self.n1 + self.n2 + self.n3 + self.n4

    # derived extractor specs --------------------------------------------

    @cached_property
    def samp1(self) -> SeededExtractorSpec:
        return _sampler(self.n1, _log2_exact(self.D1, "D1"), self.code.n_out)

    @cached_property
    def samp2(self) -> SeededExtractorSpec:
        return _sampler(self.n2, _log2_exact(self.D2, "D2"), self.n6)

    @cached_property
    def samp3(self) -> SeededExtractorSpec:
        return _sampler(self.n3, _log2_exact(self.n7, "n7"), self.n6 - self.D2)

    @cached_property
    def samp4(self) -> SeededExtractorSpec:
        return _sampler(self.n4, _log2_exact(self.n8, "n8"), self.n6 - self.D2 - self.n7)

    @cached_property
    def lext0(self) -> SeededExtractorSpec:
        return _lin(self.block, self.n0, self.L0, ExtractorKind.FIXED_RANK)

    @cached_property
    def lext1(self) -> SeededExtractorSpec:
        return _lin(self.n5, self.row_bits, self.v_len)

    @cached_property
    def lext2(self) -> SeededExtractorSpec:
        return _lin(self.n7, self.v_len, self.r_len)

    @cached_property
    def lext3(self) -> SeededExtractorSpec:
        return _lin(self.n8, self.n9, self.m, ExtractorKind.FIXED_RANK)

    @cached_property
    def acb(self) -> AcbParams:
        return AcbParams(
            n=self.n7, n1=self.r_len, n2=self.n9, t=self.t,
            h=self.advice_len + self.row_bits, d=self.acb_d,
            min_width=max(self.n9, 2) if self.r_len >= 2 else self.r_len,
        )

    # adv_gen / ilnm specs
    @cached_property
    def adv_sampS(self) -> SeededExtractorSpec:
        return _sampler(self.adv.a1, self.adv.dS, self.code.n_out)

    @cached_property
    def adv_sampT(self) -> SeededExtractorSpec:
        return _sampler(self.adv.a2, self.adv.dT, self.block)

    @cached_property
    def adv_lext(self) -> SeededExtractorSpec:
        return _lin(self.block, self.adv.n0, self.adv.L, ExtractorKind.FIXED_RANK)

    @property
    def adv_len(self) -> int:
        a = self.adv
        return a.a1 + a.a2 + (1 << a.dT) + (1 << a.dS) + a.L

    @cached_property
    def wrap_lext1(self) -> SeededExtractorSpec:
        return _lin(self.adv.nw, _bits(self.adv.D), self.adv.v_len)

    @cached_property
    def wrap_lext2(self) -> SeededExtractorSpec:
        return _lin(self.block, self.adv.v_len, self.adv.r_len)

    @cached_property
    def wrap_acb(self) -> AcbParams:
        return AcbParams(
            n=self.block, n1=self.adv.r_len, n2=self.m, t=self.t,
            h=self.adv_len + _bits(self.adv.D), d=self.adv.acb_d,
        )

    # validation ----------------------------------------------------------

    def _validate_shapes(self) -> None:
        def need(cond: bool, msg: str) -> None:
            if not cond:
                raise ProfileError(f"profile {self.name!r}: {msg}")

        need(self.n >= 1 and self.m >= 1, "n and m must be positive")
        need(
            self.n1 + self.n2 + self.n3 + self.n4 + self.n5 + self.n6 == self.block,
            "n1 + … + n5 + n6 must equal 2n",
        )
        need(self.n6 >= self.min_n6, f"n6 = {self.n6} below min_n6 = {self.min_n6}")
        need(self.code.k_in == self.block, f"code message length {self.code.k_in} != 2n")
        need(self.D >= 1, "D must be positive")
        need(self.D1 > self.L0 >= 1, "need D1 > L0 = floor(sqrt(n0)) ≥ 1")
        need(self.D1 <= self.code.n_out, "D1 exceeds the code length")
        need(self.D2 <= self.n6, "D2 exceeds n6")
        need(self.n7 <= self.n6 - self.D2, "n7 exceeds what remains of z6")
        need(self.n8 <= self.n6 - self.D2 - self.n7, "n8 exceeds what remains of z6")
        need(self.z8_len >= self.D1, "free block z8 shorter than D1")
        need(self.m <= self.n8, "m exceeds n8")
        need(self.n9 <= self.n8, "n9 exceeds n8")
        need(self.row_bits <= self.n5, "row index does not fit the z5 extractor seed")
        need(self.v_len <= self.n7 and self.v_len <= self.n5, "v_len exceeds n5 or n7")
        need(self.inner.n_in == self.D2, "inner extractor input must be D2 bits")
        need(self.inner.m_out == self.n0, "inner extractor output must be n0 bits")
        need(self.ilext.n_in == self.block, "ilext input must be 2n bits")
        need(self.ilext.m_out == self.m, "ilext output must be m bits")
        a = self.adv
        need(a.a1 <= self.block and a.a2 <= self.block and a.nw <= self.block, "advice slices exceed 2n")
        need((1 << a.dS) <= self.code.n_out, "advice code sample exceeds code length")
        need(a.inner.n_in == (1 << a.dT) and a.inner.m_out == a.n0, "advice inner extractor shape")
        need(_bits(a.D) <= a.nw, "wrapper row index does not fit its seed slice")
        try:
            for name in ("samp1", "samp2", "samp3", "samp4", "lext0", "lext1", "lext2", "lext3",
                         "acb", "adv_sampS", "adv_sampT", "adv_lext", "wrap_lext1", "wrap_lext2", "wrap_acb"):
                getattr(self, name)
        except ValueError as exc:
            raise ProfileError(f"profile {self.name!r}: {exc}") from exc

    def soft_violations(self) -> list[str]:
        """Inequalities from the asymptotic analysis that this profile does not meet."""
        out = []
        for label, p in (("acb", self.acb), ("ilext.acb", self.ilext.acb), ("wrap.acb", self.wrap_acb),
                         ("inner.acb", self.inner.acb)):
            out += [f"{label}: {v}" for v in p.violations()]
        for label in ("samp1", "samp2", "samp3", "samp4", "adv_sampS", "adv_sampT"):
            s = getattr(self, label)
            if s.entropy_deficient:
                out.append(f"{label}: output {s.m_out} bits from a {s.n_in}-bit source")
        if self.n9 >= self.n8:
            out.append("n9 should be below n8")
        return out

    def describe(self) -> dict:
        """Full machine-readable shape, including every derived spec."""
        specs = {
            name: getattr(self, name).to_json()
            for name in ("samp1", "samp2", "samp3", "samp4", "lext0", "lext1", "lext2", "lext3",
                         "acb", "adv_sampS", "adv_sampT", "adv_lext", "wrap_lext1", "wrap_lext2", "wrap_acb")
        }
        return {
            "profile": self.to_json(),
            "derived": {
                "L0": self.L0, "z8_len": self.z8_len, "advice_len": self.advice_len,
                "fiber_dim": self.fiber_dim, "rate": self.m / self.block,
            },
            "specs": specs,
            "substitutions": {
                "strong seeded extractor": "universal hash trunc(a·x) over GF(2^L)",
                "linear seeded extractor": "truncated multiplication over GF(2^n)",
                "two-source NM extractor for protocols": "ilnm_inv on x∘y",
            },
            "soft_violations": self.soft_violations(),
        }

    # serialization --------------------------------------------------------

    _SCALARS = ("n", "m", "n0", "n1", "n2", "n3", "n4", "n5", "n6", "n7", "n8", "n9",
                "D", "D1", "D2", "v_len", "r_len", "acb_d", "t", "min_n6")

    def to_json(self) -> dict:
        out: dict[str, Any] = {"name": self.name}
        if self.description:
            out["description"] = self.description
        out.update({k: getattr(self, k) for k in self._SCALARS})
        out["code"] = self.code.to_json()
        out["inner"] = self.inner.to_json()
        out["ilext"] = self.ilext.to_json()
        out["adv"] = self.adv.to_json()
        out["constants"] = dict(self.constants)
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "ParamProfile":
        try:
            scalars = {k: int(obj[k]) for k in cls._SCALARS if k in obj}
            missing = [k for k in cls._SCALARS if k not in obj and k not in ("t", "min_n6")]
            if missing:
                raise ProfileError(f"profile field {missing[0]!r} is missing")
            return cls(
                name=str(obj.get("name", "unnamed")),
                description=str(obj.get("description", "")),
                code=LinearCodeSpec.from_json(obj["code"]),
                inner=IlextParams.from_json(obj["inner"]),
                ilext=IlextParams.from_json(obj["ilext"]),
                adv=AdvParams.from_json(obj["adv"]),
                constants=dict(obj.get("constants", {})),
                **scalars,
            )
        except ProfileError:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise ProfileError(f"malformed profile: {exc}") from exc


def _profile_dirs() -> list[Path]:
    dirs = []
    env = os.environ.get(PROFILE_ENV)
    if env:
        dirs += [Path(p) for p in env.split(os.pathsep) if p]
    dirs.append(Path(str(resources.files("nmforge") / "profiles")))
    return dirs


def list_profiles() -> list[str]:
    names = set()
    for d in _profile_dirs():
        if d.is_dir():
            names.update(p.stem for p in d.glob("*.json"))
    return sorted(names)


@lru_cache(maxsize=None)
def _load_path(path: str) -> ParamProfile:
    with open(path) as fh:
        return ParamProfile.from_json(json.load(fh))


def load_profile(name_or_path: str) -> ParamProfile:
    """Load a profile by file path or by name from the search path."""
    p = Path(name_or_path)
    if p.suffix == ".json" and p.is_file():
        return _load_path(str(p.resolve()))
    for d in _profile_dirs():
        cand = d / f"{name_or_path}.json"
        if cand.is_file():
            return _load_path(str(cand.resolve()))
    raise ProfileError(f"profile not found: {name_or_path}")


# ---------------------------------------------------------------- ilext


def ilext_raw(p: IlextParams, z):
    z1 = z & _u(mask(p.n1), z)
    s = 0
    for row in range(p.rows):
        v = condense_raw(p.condenser, z1, row) & _u(mask(p.lext1.d), z)
        r = lext_raw(p.lext1, z, boundary_seed(p.lext1, v))
        s = s ^ acb_raw(p.acb, r, z, row + 1)
    return lext_raw(p.lext2, z, boundary_seed(p.lext2, s))


def ilext(profile: ParamProfile, z: BitVector) -> BitVector:
    _need_block(profile, z)
    return BitVector(int(ilext_raw(profile.ilext, z.value)), profile.m)


def _need_block(profile: ParamProfile, z: BitVector) -> None:
    if z.length != profile.block:
        raise ValueError(f"input has {z.length} bits, profile expects 2n = {profile.block}")


# ---------------------------------------------------------------- adv_gen, ilnm


@dataclass(frozen=True)
class AdviceBundle:
    z1: BitVector
    z2: BitVector
    z3: BitVector
    w1: BitVector
    w2: BitVector

    def flatten(self) -> BitVector:
        return self.z1.concat(self.z2, self.z3, self.w1, self.w2)

    @property
    def length(self) -> int:
        return sum(v.length for v in (self.z1, self.z2, self.z3, self.w1, self.w2))


@lru_cache(maxsize=4096)
def _adv_sets(profile: ParamProfile, z1: int, z2: int) -> tuple[tuple[int, ...], tuple[int, ...], tuple[int, ...]]:
    S = tuple(int(v) for v in sampler_values(profile.adv_sampS, z1, profile.code.n_out))
    T = tuple(int(v) for v in sampler_values(profile.adv_sampT, z2, profile.block))
    rows = tuple(profile.code.gen.rows[i] for i in S)
    return S, T, rows


def _adv_parts(profile: ParamProfile, z, z1: int, z2: int):
    a = profile.adv
    S, T, e_rows = _adv_sets(profile, z1, z2)
    z3 = gather(z, T)
    r = ilext_raw(a.inner, z3)
    w1 = 0
    for j, row in enumerate(e_rows):
        w1 = w1 | (parity(z & _u(row, z)) << j)
    w2 = lext_raw(profile.adv_lext, z, boundary_seed(profile.adv_lext, r))
    return z3, w1, w2


def adv_gen_raw(profile: ParamProfile, z, z1: int, z2: int):
    a = profile.adv
    z3, w1, w2 = _adv_parts(profile, z, z1, z2)
    nT, nS = 1 << a.dT, 1 << a.dS
    out = z1 | (z2 << a.a1)
    out = _u(out, z) | (z3 << _u(a.a1 + a.a2, z)) | (w1 << _u(a.a1 + a.a2 + nT, z)) | (
        w2 << _u(a.a1 + a.a2 + nT + nS, z)
    )
    return out


def adv_gen(profile: ParamProfile, z: BitVector) -> AdviceBundle:
    _need_block(profile, z)
    a = profile.adv
    z1 = z.value & mask(a.a1)
    z2 = z.value & mask(a.a2)
    z3, w1, w2 = _adv_parts(profile, z.value, z1, z2)
    return AdviceBundle(
        BitVector(z1, a.a1), BitVector(z2, a.a2), BitVector(int(z3), 1 << a.dT),
        BitVector(int(w1), 1 << a.dS), BitVector(int(w2), a.L),
    )


def acb_wrap_raw(profile: ParamProfile, z, w):
    a = profile.adv
    zw = z & _u(mask(a.nw), z)
    hb = profile.adv_len
    s = 0
    for i in range(1, a.D + 1):
        v = lext_raw(profile.wrap_lext1, zw, boundary_seed(profile.wrap_lext1, i))
        r = lext_raw(profile.wrap_lext2, z, boundary_seed(profile.wrap_lext2, v))
        s = s ^ acb_raw(profile.wrap_acb, r, z, w | _u(i << hb, w))
    return s


def acb_wrap(profile: ParamProfile, z: BitVector, w: BitVector) -> BitVector:
    _need_block(profile, z)
    if w.length != profile.adv_len:
        raise ValueError(f"advice has {w.length} bits, profile expects {profile.adv_len}")
    return BitVector(int(acb_wrap_raw(profile, z.value, w.value)), profile.m)


def ilnm(profile: ParamProfile, z: BitVector) -> BitVector:
    return acb_wrap(profile, z, adv_gen(profile, z).flatten())


def ilnm_batch(profile: ParamProfile, z: np.ndarray) -> np.ndarray:
    """Vectorized :func:`ilnm`, grouping inputs by their sampler prefixes."""
    a = profile.adv
    width = max(a.a1, a.a2)
    z = np.asarray(z, dtype=np.uint64)
    out = np.zeros_like(z)
    key = z & np.uint64(mask(width))
    for k in np.unique(key):
        sel = key == k
        zz = z[sel]
        k = int(k)
        w = adv_gen_raw(profile, zz, k & mask(a.a1), k & mask(a.a2))
        out[sel] = acb_wrap_raw(profile, zz, w)
    return out


# ---------------------------------------------------------------- ilnm_inv


@dataclass(frozen=True)
class InvPlan:
    """Everything ``ilnm_inv`` derives from the key (z₁…z₄, z̄₂)."""

    T1: tuple[int, ...]
    T2: tuple[int, ...]
    T3: tuple[int, ...]
    T4: tuple[int, ...]
    zbar2_pos: tuple[int, ...]
    zbar6_pos: tuple[int, ...]
    zbar7_pos: tuple[int, ...]
    z8_pos: tuple[int, ...]
    z2p: int
    lext0_rows: tuple[int, ...]
    tbar1: tuple[int, ...] | None
    e_rows: tuple[int, ...]

    @property
    def fallback(self) -> bool:
        return self.tbar1 is None

    @property
    def constraint_rows(self) -> tuple[int, ...]:
        """Linear functionals fixed by the advice: E rows on T̄₁, then LExt₀ rows."""
        return self.e_rows + self.lext0_rows


def _restrict(row: int, positions: Sequence[int]) -> int:
    return project_raw(row, positions)


@lru_cache(maxsize=None)
def _position_sets(profile: ParamProfile, z1: int, z2: int, z3: int, z4: int):
    base6 = profile.offsets[5]
    n6 = profile.n6
    T1 = tuple(int(v) for v in sampler_values(profile.samp1, z1, profile.code.n_out))
    T2 = tuple(probe_distinct([int(v) for v in sampler_values(profile.samp2, z2, n6)], n6))
    rest6 = [i for i in range(n6) if i not in set(T2)]
    T3 = tuple(probe_distinct([int(v) for v in sampler_values(profile.samp3, z3, len(rest6))], len(rest6)))
    rest7 = [rest6[i] for i in range(len(rest6)) if i not in set(T3)]
    T4 = tuple(probe_distinct([int(v) for v in sampler_values(profile.samp4, z4, len(rest7))], len(rest7)))
    rest8 = [rest7[i] for i in range(len(rest7)) if i not in set(T4)]
    zbar2 = tuple(base6 + i for i in T2)
    zbar6 = tuple(base6 + rest6[i] for i in T3)
    zbar7 = tuple(base6 + rest7[i] for i in T4)
    z8 = tuple(base6 + i for i in rest8)
    return T1, T2, T3, T4, zbar2, zbar6, zbar7, z8


@lru_cache(maxsize=None)
def inv_plan(profile: ParamProfile, key: int, zbar2: int) -> InvPlan:
    """Plan for the key whose z₁…z₄ bits are ``key`` and whose z̄₂ is ``zbar2``."""
    o = profile.offsets
    z1 = key & mask(profile.n1)
    z2 = (key >> o[1]) & mask(profile.n2)
    z3 = (key >> o[2]) & mask(profile.n3)
    z4 = (key >> o[3]) & mask(profile.n4)
    T1, T2, T3, T4, zb2, zb6, zb7, z8 = _position_sets(profile, z1, z2, z3, z4)
    z2p = int(ilext_raw(profile.inner, zbar2))
    lext0 = profile.lext0
    l0_rows = linear_map(lext0, boundary_seed(lext0, z2p)).rows
    # greedy choice of code positions whose rows stay independent on z8
    span, _ = row_reduce([_restrict(r, z8) for r in l0_rows], len(z8))
    tbar1: tuple[int, ...] | None = None
    if len(span) == len(l0_rows):
        picked: list[int] = []
        for pos in T1:
            cand = _restrict(profile.code.gen.rows[pos], z8)
            grown, _ = row_reduce(span + [cand], len(z8))
            if len(grown) > len(span):
                span = grown
                picked.append(pos)
                if len(picked) == profile.tbar1_size:
                    tbar1 = tuple(picked)
                    break
    e_rows = tuple(profile.code.gen.rows[i] for i in tbar1) if tbar1 else ()
    return InvPlan(T1, T2, T3, T4, zb2, zb6, zb7, z8, z2p, tuple(l0_rows), tbar1, e_rows)


def _inv_advice(profile: ParamProfile, plan: InvPlan, key_z1, key_z2, zbar2, e_vals, z2pp, like):
    p = profile
    w = _u(key_z1 | (key_z2 << p.n1) | (zbar2 << (p.n1 + p.n2)), like)
    w = w | (e_vals << _u(p.n1 + p.n2 + p.D2, like))
    return w | (z2pp << _u(p.n1 + p.n2 + p.D2 + p.tbar1_size, like))


def _inv_s_tilde(profile: ParamProfile, w, z5, zbar6):
    p = profile
    hb = p.advice_len
    s = 0
    for i in range(1, p.D + 1):
        v = lext_raw(p.lext1, z5, boundary_seed(p.lext1, i))
        r = lext_raw(p.lext2, zbar6, boundary_seed(p.lext2, v))
        s = s ^ acb_raw(p.acb, r, zbar6, w | _u(i << hb, w))
    if _is_array(w) and not _is_array(s):
        s = np.zeros_like(w)
    return s


def _functionals(rows: Sequence[int], z):
    out = 0
    for j, row in enumerate(rows):
        out = out | (parity(z & _u(row, z)) << j)
    if _is_array(z) and not _is_array(out):
        return np.zeros_like(z)
    return out


def _inv_eval(profile: ParamProfile, plan: InvPlan, key: int, zbar2: int, z):
    p = profile
    if plan.fallback:
        return z & _u(0, z)
    o = p.offsets
    z1 = key & mask(p.n1)
    z2 = (key >> o[1]) & mask(p.n2)
    z5 = (z >> _u(o[4], z)) & _u(mask(p.n5), z)
    e_vals = _functionals(plan.e_rows, z)
    z2pp = _functionals(plan.lext0_rows, z)
    w = _inv_advice(p, plan, z1, z2, zbar2, e_vals, z2pp, z)
    zbar6 = gather(z, plan.zbar6_pos)
    zbar7 = gather(z, plan.zbar7_pos)
    s = _inv_s_tilde(p, w, z5, zbar6)
    return lext_raw(p.lext3, zbar7, boundary_seed(p.lext3, s))


def inv_key(profile: ParamProfile, z: int) -> tuple[int, int]:
    key = z & mask(profile.key_len)
    o = profile.offsets
    z2 = (key >> o[1]) & mask(profile.n2)
    T2 = _position_sets(
        profile, key & mask(profile.n1), z2, (key >> o[2]) & mask(profile.n3), (key >> o[3]) & mask(profile.n4)
    )[4]
    return key, int(gather(z, T2))


def ilnm_inv(profile: ParamProfile, z: BitVector) -> BitVector:
    _need_block(profile, z)
    key, zbar2 = inv_key(profile, z.value)
    plan = inv_plan(profile, key, zbar2)
    return BitVector(int(_inv_eval(profile, plan, key, zbar2, z.value)), profile.m)


def _group_by_key(profile: ParamProfile, z: np.ndarray):
    """Yield (key, z̄₂, selector) for each key group of a uint64 array."""
    keys = z & np.uint64(mask(profile.key_len))
    for k in np.unique(keys):
        sel_k = np.nonzero(keys == k)[0]
        k = int(k)
        o = profile.offsets
        T2pos = _position_sets(
            profile, k & mask(profile.n1), (k >> o[1]) & mask(profile.n2),
            (k >> o[2]) & mask(profile.n3), (k >> o[3]) & mask(profile.n4),
        )[4]
        zb2 = gather(z[sel_k], T2pos)
        for b in np.unique(zb2):
            yield k, int(b), sel_k[zb2 == b]


def ilnm_inv_batch(profile: ParamProfile, z: np.ndarray, with_fallback: bool = False):
    """Vectorized :func:`ilnm_inv`; optionally also returns the fallback mask."""
    z = np.asarray(z, dtype=np.uint64)
    out = np.zeros_like(z)
    fb = np.zeros(z.shape, dtype=bool)
    for key, zb2, sel in _group_by_key(profile, z):
        plan = inv_plan(profile, key, zb2)
        if plan.fallback:
            fb[sel] = True
            continue
        out[sel] = _inv_eval(profile, plan, key, zb2, z[sel])
    return (out, fb) if with_fallback else out


def ilext_batch(profile: ParamProfile, z: np.ndarray, params: IlextParams | None = None) -> np.ndarray:
    return ilext_raw(params or profile.ilext, np.asarray(z, dtype=np.uint64))


def fixing_id(profile: ParamProfile, z: int) -> tuple:
    """The values that pin down a single affine fiber of ``ilnm_inv``.

    These are the key, z̄₂, z₅, z̄₆ and the advice functionals; once they are
    fixed the output is linear in the remaining bits.
    """
    key, zb2 = inv_key(profile, z)
    plan = inv_plan(profile, key, zb2)
    if plan.fallback:
        return (key, zb2, None)
    z5 = (z >> profile.offsets[4]) & mask(profile.n5)
    return (key, zb2, z5, int(gather(z, plan.zbar6_pos)), int(_functionals(plan.e_rows, z)),
            int(_functionals(plan.lext0_rows, z)))


# ---------------------------------------------------------------- sampling


MAX_KEY_RETRIES = 10_000


@lru_cache(maxsize=4096)
def _lext3_preimage(profile: ParamProfile, g: int, s: int) -> tuple[int, tuple[int, ...]]:
    """Offset and basis of LExt₃(·, s̃)⁻¹(g)."""
    spec = profile.lext3
    space = solve_affine(linear_map(spec, boundary_seed(spec, s)), BitVector(g, profile.m))
    assert space is not None and space.dim == profile.n8 - profile.m
    return space.offset.value, tuple(b.value for b in space.basis)


@lru_cache(maxsize=None)
def _lext3_preimages(profile: ParamProfile, g: int) -> tuple[tuple[int, tuple[int, ...]], ...]:
    """The pre-image of ``g`` for every seed s̃ (small n₉ only)."""
    return tuple(_lext3_preimage(profile, g, s) for s in range(1 << profile.n9))


@lru_cache(maxsize=None)
def _z8_solver(profile: ParamProfile, key: int, zbar2: int):
    """Particular solutions for unit right-hand sides plus a null-space basis on z8."""
    plan = inv_plan(profile, key, zbar2)
    rows = [_restrict(r, plan.z8_pos) for r in plan.constraint_rows]
    mat = BitMatrix(tuple(rows), len(plan.z8_pos))
    units = []
    null: tuple[int, ...] = ()
    for j in range(len(rows)):
        space = solve_affine(mat, BitVector(1 << j, len(rows)))
        assert space is not None
        units.append(space.offset.value)
        null = tuple(b.value for b in space.basis)
    if not rows:
        null = tuple(1 << i for i in range(len(plan.z8_pos)))
    return tuple(units), null


def _draw_key(profile: ParamProfile, rng: np.random.Generator) -> tuple[int, int, InvPlan]:
    for _ in range(MAX_KEY_RETRIES):
        key = random_int(profile.key_len, rng)
        zb2 = random_int(profile.D2, rng)
        plan = inv_plan(profile, key, zb2)
        if not plan.fallback:
            return key, zb2, plan
    raise SamplerFailure(f"no admissible fixing after {MAX_KEY_RETRIES} draws")


def ilnm_sample_preimage(profile: ParamProfile, g: BitVector, rng: np.random.Generator) -> BitVector:
    """Uniform sample of the non-fallback fiber ``ilnm_inv⁻¹(g)``."""
    p = profile
    if g.length != p.m:
        raise ValueError(f"target has {g.length} bits, profile output is {p.m}")
    key, zb2, plan = _draw_key(p, rng)
    z5 = random_int(p.n5, rng)
    e_vals = random_int(p.tbar1_size, rng)
    z2pp = random_int(p.L0, rng)
    zbar6 = random_int(p.n7, rng)
    o = p.offsets
    w = _inv_advice(p, plan, key & mask(p.n1), (key >> o[1]) & mask(p.n2), zb2, e_vals, z2pp, 0)
    s = int(_inv_s_tilde(p, w, z5, zbar6))
    off, basis = _lext3_preimage(p, g.value, s)
    zbar7 = off
    for b in basis:
        if random_int(1, rng):
            zbar7 ^= b
    z = key | (z5 << o[4]) | scatter(zb2, plan.zbar2_pos) | scatter(zbar6, plan.zbar6_pos)
    z |= scatter(zbar7, plan.zbar7_pos)
    target = e_vals | (z2pp << p.tbar1_size)
    rhs = target ^ _functionals(plan.constraint_rows, z)
    units, null = _z8_solver(p, key, zb2)
    z8 = 0
    for j, u in enumerate(units):
        if (rhs >> j) & 1:
            z8 ^= u
    for b in null:
        if random_int(1, rng):
            z8 ^= b
    z |= scatter(z8, plan.z8_pos)
    return BitVector(z, p.block)


def sample_preimage_batch(profile: ParamProfile, g: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """``count`` independent draws of :func:`ilnm_sample_preimage`, vectorized."""
    p = profile
    o = p.offsets
    keys = rng.integers(0, 1 << p.key_len, size=count, dtype=np.uint64)
    zb2 = rng.integers(0, 1 << p.D2, size=count, dtype=np.uint64)
    # rejection: redraw entries whose key falls back
    for _ in range(MAX_KEY_RETRIES):
        bad = np.zeros(count, dtype=bool)
        pairs = keys * np.uint64(1 << p.D2) + zb2
        for pr in np.unique(pairs):
            k, b = divmod(int(pr), 1 << p.D2)
            if inv_plan(p, k, b).fallback:
                bad |= pairs == pr
        nb = int(bad.sum())
        if not nb:
            break
        keys[bad] = rng.integers(0, 1 << p.key_len, size=nb, dtype=np.uint64)
        zb2[bad] = rng.integers(0, 1 << p.D2, size=nb, dtype=np.uint64)
    else:
        raise SamplerFailure(f"no admissible fixing after {MAX_KEY_RETRIES} rounds")
    z5 = rng.integers(0, 1 << p.n5, size=count, dtype=np.uint64)
    e_vals = rng.integers(0, 1 << p.tbar1_size, size=count, dtype=np.uint64)
    z2pp = rng.integers(0, 1 << p.L0, size=count, dtype=np.uint64)
    zbar6 = rng.integers(0, 1 << p.n7, size=count, dtype=np.uint64)
    pre = _lext3_preimages(p, g)
    off_tab = np.array([q[0] for q in pre], dtype=np.uint64)
    basis_tab = np.array([q[1] for q in pre], dtype=np.uint64).reshape(len(pre), p.n8 - p.m)
    out = np.zeros(count, dtype=np.uint64)
    pairs = keys * np.uint64(1 << p.D2) + zb2
    for pr in np.unique(pairs):
        sel = np.nonzero(pairs == pr)[0]
        k, b = divmod(int(pr), 1 << p.D2)
        plan = inv_plan(p, k, b)
        nsel = len(sel)
        w = _inv_advice(p, plan, k & mask(p.n1), (k >> o[1]) & mask(p.n2), b, e_vals[sel], z2pp[sel], e_vals[sel])
        s = _inv_s_tilde(p, w, z5[sel], zbar6[sel]).astype(np.int64)
        zbar7 = off_tab[s]
        for j in range(basis_tab.shape[1]):
            pick = rng.integers(0, 2, size=nsel, dtype=np.uint64)
            zbar7 ^= pick * basis_tab[s, j]
        z = np.full(nsel, k | scatter(b, plan.zbar2_pos), dtype=np.uint64)
        z |= z5[sel] << np.uint64(o[4])
        z |= scatter(zbar6[sel], plan.zbar6_pos) | scatter(zbar7, plan.zbar7_pos)
        target = e_vals[sel] | (z2pp[sel] << np.uint64(p.tbar1_size))
        rhs = target ^ _functionals(plan.constraint_rows, z)
        units, null = _z8_solver(p, k, b)
        z8 = np.zeros(nsel, dtype=np.uint64)
        for j, u in enumerate(units):
            z8 ^= ((rhs >> np.uint64(j)) & np.uint64(1)) * np.uint64(u)
        for v in null:
            z8 ^= rng.integers(0, 2, size=nsel, dtype=np.uint64) * np.uint64(v)
        out[sel] = z | scatter(z8, plan.z8_pos)
    return out


# ---------------------------------------------------------------- two-source view


@dataclass(frozen=True)
class InterleavedInput:
    z: BitVector
    x: BitVector | None = None
    y: BitVector | None = None
    pi: Any = None

    def __post_init__(self) -> None:
        if self.pi is not None:
            from .bitlin import apply_perm

            if apply_perm(self.pi, self.x.concat(self.y)) != self.z:
                raise ValueError("z does not equal (x ∘ y)_π")

    @classmethod
    def interleave(cls, x: BitVector, y: BitVector, pi) -> "InterleavedInput":
        from .bitlin import apply_perm

        return cls(apply_perm(pi, x.concat(y)), x, y, pi)


def comm_nmext(profile: ParamProfile, x: BitVector, y: BitVector) -> BitVector:
    """Two-source extractor for protocol tampering: ``ilnm_inv(x ∘ y)``."""
    if x.length != profile.n or y.length != profile.n:
        raise ValueError(f"sources must have n = {profile.n} bits each")
    return ilnm_inv(profile, x.concat(y))
