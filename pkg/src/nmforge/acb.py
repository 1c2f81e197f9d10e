"""Advice correlation breaker built from alternating-extraction flip-flops.

Each advice bit runs one flip-flop round on the row state ``y``.  A rung
uses a slice of ``y`` as the seed for a short extraction ``r`` from the
helper, then uses ``r`` as the seed for an extraction from the helper, the
slice and the rung counter, and xors that into the rest of ``y``.  Rung "P"
seeds from the prefix of ``y`` and rung "S" from its suffix; bit 0 runs P
then S, bit 1 runs S then P.

For a fixed helper every rung is a permutation of ``y``, so executions with
different advice never merge just because the state is small.  The counter
keeps consecutive rungs from cancelling each other.  Widths halve per round
down to ``min_width`` through one compressing extraction ``y ↦ LExt(y, r)``;
the same step produces the ``n2`` output bits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .bitlin import BitVector, mask
from .extlib import ExtractorKind, SeededExtractorSpec, lext_raw

__all__ = ["AcbParams", "acb", "acb_raw", "flip_flop", "flip_flop_raw"]


@dataclass(frozen=True)
class AcbParams:
    n: int
    n1: int
    n2: int
    t: int
    h: int
    d: int
    lambda_: int = 0
    eps: float = 0.25
    k1: int | None = None
    min_width: int | None = None
    enforce_bounds: bool = False

    def __post_init__(self) -> None:
        if self.k1 is None:
            object.__setattr__(self, "k1", self.n)
        if self.min_width is None:
            object.__setattr__(self, "min_width", max(self.n2, 2))
        if min(self.n, self.n1, self.n2, self.d) < 1 or self.t < 1 or self.h < 0:
            raise ValueError("ACB lengths must be positive")
        if self.min_width < self.n2 or self.n1 < self.min_width:
            raise ValueError("need n2 ≤ min_width ≤ n1")
        if self.enforce_bounds and self.violations():
            raise ValueError("ACB preconditions violated: " + "; ".join(self.violations()))

    @property
    def log_inv_eps(self) -> float:
        return math.log2(1 / self.eps)

    def bounds(self) -> dict[str, tuple[float, float]]:
        """Each precondition as (have, need)."""
        d, t, h, n2, le = self.d, self.t, self.h, self.n2, self.log_inv_eps
        return {
            "k1": (self.k1, 2 * d + 8 * t * d * h + le),
            "n1": (self.n1, 2 * d + 10 * t * d * h + (4 * h * t + 1) * n2 * n2 + le),
            "n2": (n2, 2 * d + 3 * t * d + le),
        }

    def violations(self) -> list[str]:
        return [f"{k} = {have} < {need:g}" for k, (have, need) in self.bounds().items() if have < need]

    @property
    def widths(self) -> tuple[int, ...]:
        w = [self.n1]
        for _ in range(self.h):
            w.append(max(w[-1] // 2, self.min_width))
        return tuple(w)

    def error_budget(self) -> float:
        return (self.h + 2**self.lambda_) * self.eps

    def to_json(self) -> dict:
        out = {k: getattr(self, k) for k in ("n", "n1", "n2", "t", "h", "d", "eps")}
        out["lambda"] = self.lambda_
        if self.k1 != self.n:
            out["k1"] = self.k1
        if self.min_width != max(self.n2, 2):
            out["min_width"] = self.min_width
        return out

    @classmethod
    def from_json(cls, obj: dict, **overrides) -> "AcbParams":
        args = dict(obj)
        if "lambda" in args:
            args["lambda_"] = args.pop("lambda")
        args.update(overrides)
        return cls(**args)


@lru_cache(maxsize=None)
def _lext(n_in: int, d: int, m_out: int) -> SeededExtractorSpec:
    return SeededExtractorSpec(n_in, d, m_out, ExtractorKind.LINEAR)


def _seed_len(p: AcbParams, w: int) -> int:
    return max(0, min(p.d, w - 1, p.n - 1))


def _r_len(p: AcbParams, w: int) -> int:
    return max(1, min(p.d, w - 1, p.n))


def _counter_bits(p: AcbParams) -> int:
    return (2 * p.h + 1).bit_length()


def _slice(y, w: int, ds: int, suffix: bool):
    if isinstance(y, np.ndarray):
        sh = np.uint64(w - ds if suffix else 0)
        return (y >> sh) & np.uint64(mask(ds))
    return (y >> (w - ds)) & mask(ds) if suffix else y & mask(ds)


def _rung(p: AcbParams, y, helper, w: int, suffix: bool, counter: int):
    ds = _seed_len(p, w)
    rest = w - ds
    if ds == 0 or rest == 0:
        return y
    rl = _r_len(p, w)
    s = _slice(y, w, ds, suffix)
    r = lext_raw(_lext(p.n, ds, rl), helper, s)
    if isinstance(y, np.ndarray):
        src = helper | (s << np.uint64(p.n)) | np.uint64((counter + 1) << (p.n + ds))
    else:
        src = helper | (s << p.n) | ((counter + 1) << (p.n + ds))
    f = lext_raw(_lext(p.n + ds + _counter_bits(p), rl, rest), src, r)
    if suffix:
        return y ^ f
    return y ^ (f << np.uint64(ds) if isinstance(y, np.ndarray) else f << ds)


def _compress(p: AcbParams, y, helper, w: int, w_out: int):
    if w_out == w:
        return y
    ds = _seed_len(p, w)
    r = lext_raw(_lext(p.n, ds, _r_len(p, w)), helper, _slice(y, w, ds, False))
    return lext_raw(_lext(w, _r_len(p, w), w_out), y, r)


def flip_flop_raw(p: AcbParams, y, helper, bit: int, round_index: int):
    w, w_out = p.widths[round_index], p.widths[round_index + 1]
    first, second = (False, True) if bit == 0 else (True, False)
    y = _rung(p, y, helper, w, first, 2 * round_index)
    y = _rung(p, y, helper, w, second, 2 * round_index + 1)
    return _compress(p, y, helper, w, w_out)


def acb_raw(p: AcbParams, y, helper, advice):
    for j in range(p.h):
        bit = (advice >> j) & 1
        if isinstance(advice, np.ndarray):
            # per-element bits: evaluate both branches and select
            y0 = flip_flop_raw(p, y, helper, 0, j)
            y1 = flip_flop_raw(p, y, helper, 1, j)
            y = np.where(bit.astype(bool), y1, y0)
        else:
            y = flip_flop_raw(p, y, helper, int(bit), j)
    w = p.widths[-1]
    y = _rung(p, y, helper, w, False, 2 * p.h)
    return _compress(p, y, helper, w, p.n2)


def flip_flop(p: AcbParams, y: BitVector, helper: BitVector, bit: int, round_index: int = 0) -> BitVector:
    """One advice-bit round: ``y`` of width ``widths[round_index]`` to the next width."""
    if not 0 <= round_index < p.h:
        raise ValueError(f"round index {round_index} outside [0, {p.h})")
    if y.length != p.widths[round_index]:
        raise ValueError(f"state has {y.length} bits, round expects {p.widths[round_index]}")
    if helper.length != p.n:
        raise ValueError(f"helper has {helper.length} bits, expected {p.n}")
    if bit not in (0, 1):
        raise ValueError("advice bit must be 0 or 1")
    return BitVector(flip_flop_raw(p, y.value, helper.value, bit, round_index), p.widths[round_index + 1])


def acb(p: AcbParams, y_row: BitVector, helper: BitVector, advice: BitVector) -> BitVector:
    if y_row.length != p.n1:
        raise ValueError(f"row has {y_row.length} bits, expected {p.n1}")
    if helper.length != p.n:
        raise ValueError(f"helper has {helper.length} bits, expected {p.n}")
    if advice.length != p.h:
        raise ValueError(f"advice has {advice.length} bits, expected {p.h}")
    return BitVector(int(acb_raw(p, y_row.value, helper.value, advice.value)), p.n2)
