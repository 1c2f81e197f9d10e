"""The non-malleable code: encoding samples a fiber of ``ilnm_inv``, decoding evaluates it."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .bitlin import BitVector
from .nmx import (
    ParamProfile,
    SamplerFailure,
    ilnm_inv,
    ilnm_inv_batch,
    ilnm_sample_preimage,
    load_profile,
    sample_preimage_batch,
)

__all__ = [
    "CodewordScheme",
    "EncodeFailure",
    "decode",
    "decode_batch",
    "encode",
    "encode_batch",
    "scheme",
]


@dataclass(frozen=True)
class CodewordScheme:
    profile: ParamProfile

    @property
    def k(self) -> int:
        return self.profile.m

    @property
    def block(self) -> int:
        return self.profile.block

    @property
    def rate(self) -> Fraction:
        return Fraction(self.k, self.block)

    def to_json(self) -> dict:
        return {"profile": self.profile.name, "k": self.k, "block": self.block, "rate": str(self.rate)}


@dataclass(frozen=True)
class EncodeFailure:
    """Returned instead of a codeword when the fiber sampler gives up."""

    message: BitVector
    reason: str

    def __bool__(self) -> bool:
        return False


def scheme(profile: ParamProfile | str) -> CodewordScheme:
    if isinstance(profile, str):
        profile = load_profile(profile)
    return CodewordScheme(profile)


def _check_message(sch: CodewordScheme, s: BitVector) -> None:
    if s.length != sch.k:
        raise ValueError(f"message has {s.length} bits, scheme expects {sch.k}")


def encode(sch: CodewordScheme, s: BitVector, rng: np.random.Generator) -> BitVector | EncodeFailure:
    _check_message(sch, s)
    try:
        return ilnm_sample_preimage(sch.profile, s, rng)
    except SamplerFailure as exc:
        return EncodeFailure(s, str(exc))


def decode(sch: CodewordScheme, c: BitVector) -> BitVector:
    if c.length != sch.block:
        raise ValueError(f"codeword has {c.length} bits, scheme expects {sch.block}")
    return ilnm_inv(sch.profile, c)


def encode_batch(sch: CodewordScheme, s: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """``count`` independent encodings of message ``s`` as a ``uint64`` array."""
    if not 0 <= s < 1 << sch.k:
        raise ValueError(f"message {s} does not fit in {sch.k} bits")
    return sample_preimage_batch(sch.profile, s, count, rng)


def decode_batch(sch: CodewordScheme, c: np.ndarray) -> np.ndarray:
    return ilnm_inv_batch(sch.profile, np.asarray(c, dtype=np.uint64))
