"""Tampering families, the canonical simulator and exact / Monte Carlo oracles.

Codewords are ``2n``-bit vectors.  A split-state view reads the low ``n`` bits
as ``x`` and the high ``n`` bits as ``y``; interleaved families first undo a
permutation ``π`` so that ``c = (x ∘ y)_π``.

Every tampering function evaluates on Python ints and on ``uint64`` arrays, so
exact mode can push the whole codeword space through it at once.
"""

from __future__ import annotations

import json
import math
import time
import zlib
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Iterable, Sequence

import numpy as np

from .bitlin import BitMatrix, BitVector, Permutation, invert_perm, mask, random_int, rank
from .nmcode import CodewordScheme, decode, encode, encode_batch
from .nmx import ParamProfile, ilnm_inv_batch

__all__ = [
    "DEFAULT_CAP",
    "AdversarySpecError",
    "BitFunction",
    "CommProtocol",
    "DistributionTable",
    "EnumerableSource",
    "EnumerationCapExceeded",
    "ExperimentReport",
    "Interleaved",
    "LinearComposed",
    "Round",
    "SplitState",
    "SumForm",
    "battery",
    "canonical_simulator",
    "decode_table",
    "decompose_linear_composed",
    "exact_joint",
    "named_rng",
    "nm_experiment",
    "run_protocol",
    "spec_from_json",
    "tv_distance",
]

DEFAULT_CAP = 1 << 24
PMF_TOLERANCE = 2.0**-40
EXACT_RATIONAL_MAX = 1 << 16


class AdversarySpecError(ValueError):
    """A malformed adversary description; ``path`` names the offending field."""

    def __init__(self, path: str, msg: str) -> None:
        super().__init__(f"{path}: {msg}")
        self.path = path


class EnumerationCapExceeded(ValueError):
    pass


def named_rng(seed: int, name: str) -> np.random.Generator:
    """The substream ``name`` of the master ``seed``."""
    return np.random.default_rng([int(seed), zlib.crc32(name.encode())])


def _is_array(x) -> bool:
    return isinstance(x, np.ndarray)


def _const(v: int, like):
    return np.full(like.shape, v, dtype=np.uint64) if _is_array(like) else v


def _shift(x, k: int):
    return x << np.uint64(k) if _is_array(x) else x << k


def _rshift(x, k: int):
    return x >> np.uint64(k) if _is_array(x) else x >> k


def _low(x, k: int):
    return x & np.uint64(mask(k)) if _is_array(x) else x & mask(k)


def _lookup(table: np.ndarray, x):
    if _is_array(x):
        return table[x.astype(np.int64)]
    return int(table[int(x)])


# ---------------------------------------------------------------- functions on bit strings


def _hex_width(bits: int) -> int:
    return max(1, (bits + 3) // 4)


def _parse_hex(obj, path: str) -> int:
    if not isinstance(obj, str):
        raise AdversarySpecError(path, "expected a hex string")
    try:
        return int(obj, 16)
    except ValueError:
        raise AdversarySpecError(path, f"not a hex string: {obj!r}") from None


def _need(obj: dict, key: str, path: str):
    if not isinstance(obj, dict):
        raise AdversarySpecError(path, "expected an object")
    if key not in obj:
        raise AdversarySpecError(f"{path}.{key}", "missing field")
    return obj[key]


def _int_field(obj: dict, key: str, path: str) -> int:
    v = _need(obj, key, path)
    if not isinstance(v, int) or isinstance(v, bool) or v < 0:
        raise AdversarySpecError(f"{path}.{key}", "expected a non-negative integer")
    return v


@dataclass(frozen=True, eq=False)
class Op:
    """One step of a :class:`BitFunction` program."""

    kind: str
    width_in: int
    width_out: int
    value: int = 0
    start: int = 0
    perm: Permutation | None = None
    matrix: BitMatrix | None = None
    table: np.ndarray | None = None

    def apply(self, x):
        k = self.kind
        if k == "xor":
            return x ^ (np.uint64(self.value) if _is_array(x) else self.value)
        if k == "const":
            return _const(self.value, x)
        if k == "perm":
            return self.perm.apply_raw(x)
        if k == "affine":
            out = self.matrix.apply_raw(x)
            return out ^ (np.uint64(self.value) if _is_array(x) else self.value)
        if k == "table":
            return _lookup(self.table, x)
        if k == "slice_table":
            ln = self.table_bits
            piece = _low(_rshift(x, self.start), ln)
            new = _lookup(self.table, piece)
            return x ^ _shift(piece ^ new, self.start)
        raise AssertionError(k)

    @property
    def table_bits(self) -> int:
        return int(len(self.table)).bit_length() - 1

    def to_json(self) -> dict:
        k = self.kind
        if k in ("xor", "const"):
            return {"op": k, "value": f"{self.value:0{_hex_width(self.width_out)}x}"}
        if k == "perm":
            return {"op": k, "map": list(self.perm.map)}
        if k == "affine":
            w = _hex_width(self.width_in)
            return {
                "op": k,
                "rows": [f"{r:0{w}x}" for r in self.matrix.rows],
                "offset": f"{self.value:0{_hex_width(self.width_out)}x}",
            }
        w = _hex_width(self.width_out if k == "table" else self.table_bits)
        out = {"op": k, "table": [f"{int(v):0{w}x}" for v in self.table]}
        if k == "table":
            out["n_out"] = self.width_out
        else:
            out["start"] = self.start
        return out


def _table_array(values: Sequence[int], n_in: int, n_out: int, path: str) -> np.ndarray:
    if len(values) != 1 << n_in:
        raise AdversarySpecError(path, f"table has {len(values)} entries, expected {1 << n_in}")
    arr = np.asarray([int(v) for v in values], dtype=np.uint64)
    if n_out < 64 and np.any(arr >> np.uint64(n_out)):
        raise AdversarySpecError(path, f"table entry exceeds {n_out} bits")
    return arr


def _op_from_json(obj: dict, width: int, path: str) -> Op:
    kind = _need(obj, "op", path)
    if kind in ("xor", "const"):
        v = _parse_hex(_need(obj, "value", path), f"{path}.value")
        if v >> width:
            raise AdversarySpecError(f"{path}.value", f"exceeds {width} bits")
        return Op(kind, width, width, value=v)
    if kind == "perm":
        mp = _need(obj, "map", path)
        try:
            perm = Permutation(tuple(mp))
        except (TypeError, ValueError) as exc:
            raise AdversarySpecError(f"{path}.map", str(exc)) from None
        if len(perm) != width:
            raise AdversarySpecError(f"{path}.map", f"permutes {len(perm)} bits, input has {width}")
        return Op(kind, width, width, perm=perm)
    if kind == "affine":
        rows = [_parse_hex(r, f"{path}.rows[{i}]") for i, r in enumerate(_need(obj, "rows", path))]
        try:
            mat = BitMatrix(tuple(rows), width)
        except ValueError as exc:
            raise AdversarySpecError(f"{path}.rows", str(exc)) from None
        off = _parse_hex(obj.get("offset", "0"), f"{path}.offset")
        if off >> len(rows):
            raise AdversarySpecError(f"{path}.offset", f"exceeds {len(rows)} bits")
        return Op(kind, width, len(rows), value=off, matrix=mat)
    if kind == "table":
        n_out = _int_field(obj, "n_out", path)
        vals = [_parse_hex(v, f"{path}.table[{i}]") for i, v in enumerate(_need(obj, "table", path))]
        return Op(kind, width, n_out, table=_table_array(vals, width, n_out, f"{path}.table"))
    if kind == "slice_table":
        start = _int_field(obj, "start", path)
        vals = [_parse_hex(v, f"{path}.table[{i}]") for i, v in enumerate(_need(obj, "table", path))]
        ln = len(vals).bit_length() - 1
        if len(vals) != 1 << ln or start + ln > width:
            raise AdversarySpecError(f"{path}.table", "slice table must have 2^len entries inside the input")
        return Op(kind, width, width, start=start, table=_table_array(vals, ln, ln, f"{path}.table"))
    raise AdversarySpecError(f"{path}.op", f"unknown op {kind!r}")


@dataclass(frozen=True, eq=False)
class BitFunction:
    """A function ``{0,1}^n_in → {0,1}^n_out`` given as a program of simple steps.

    A dense function table is the one-step program ``[table]``.
    """

    n_in: int
    ops: tuple[Op, ...] = ()

    def __post_init__(self) -> None:
        w = self.n_in
        for op in self.ops:
            if op.width_in != w:
                raise ValueError(f"op {op.kind} expects {op.width_in} input bits, got {w}")
            w = op.width_out

    @property
    def n_out(self) -> int:
        return self.ops[-1].width_out if self.ops else self.n_in

    def __call__(self, x):
        for op in self.ops:
            x = op.apply(x)
        return x

    def then(self, *ops: Op) -> "BitFunction":
        return BitFunction(self.n_in, self.ops + tuple(ops))

    # constructors
    @classmethod
    def identity(cls, n: int) -> "BitFunction":
        return cls(n)

    @classmethod
    def constant(cls, n: int, value: int) -> "BitFunction":
        return cls(n, (Op("const", n, n, value=value),))

    @classmethod
    def xor_mask(cls, n: int, value: int) -> "BitFunction":
        return cls(n, (Op("xor", n, n, value=value),))

    @classmethod
    def linear(cls, matrix: BitMatrix, offset: int = 0) -> "BitFunction":
        return cls(matrix.ncols, (Op("affine", matrix.ncols, matrix.nrows, value=offset, matrix=matrix),))

    @classmethod
    def from_table(cls, values, n_in: int, n_out: int) -> "BitFunction":
        arr = _table_array(list(values), n_in, n_out, "table")
        return cls(n_in, (Op("table", n_in, n_out, table=arr),))

    @classmethod
    def random_table(cls, n_in: int, n_out: int, rng: np.random.Generator) -> "BitFunction":
        arr = rng.integers(0, 1 << n_out, size=1 << n_in, dtype=np.uint64)
        return cls(n_in, (Op("table", n_in, n_out, table=arr),))

    def tabulate(self) -> np.ndarray:
        return self(np.arange(1 << self.n_in, dtype=np.uint64))

    def to_json(self) -> dict:
        return {"n_in": self.n_in, "program": [op.to_json() for op in self.ops]}

    @classmethod
    def from_json(cls, obj: dict, path: str = "fn") -> "BitFunction":
        n_in = _int_field(obj, "n_in", path)
        prog = _need(obj, "program", path)
        if not isinstance(prog, list):
            raise AdversarySpecError(f"{path}.program", "expected a list")
        ops, w = [], n_in
        for i, o in enumerate(prog):
            op = _op_from_json(o, w, f"{path}.program[{i}]")
            ops.append(op)
            w = op.width_out
        return cls(n_in, tuple(ops))


def _check_fn(fn: BitFunction, n_in: int, n_out: int, what: str) -> None:
    if fn.n_in != n_in or fn.n_out != n_out:
        raise ValueError(f"{what} maps {fn.n_in} → {fn.n_out} bits, expected {n_in} → {n_out}")


# ---------------------------------------------------------------- tampering families


def _split(c, n: int):
    return _low(c, n), _low(_rshift(c, n), n)


def _join(x, y, n: int):
    return x | _shift(y, n)


@dataclass(frozen=True, eq=False)
class SplitState:
    """``x ∘ y ↦ f(x) ∘ g(y)``."""

    n: int
    f: BitFunction
    g: BitFunction
    family = "split-state"

    def __post_init__(self) -> None:
        _check_fn(self.f, self.n, self.n, "f")
        _check_fn(self.g, self.n, self.n, "g")

    @property
    def block(self) -> int:
        return 2 * self.n

    def apply_raw(self, c):
        x, y = _split(c, self.n)
        return _join(self.f(x), self.g(y), self.n)

    def to_json(self) -> dict:
        return {"family": self.family, "n": self.n, "f": self.f.to_json(), "g": self.g.to_json()}


@dataclass(frozen=True, eq=False)
class Interleaved:
    """``(x ∘ y)_π ↦ (f(x) ∘ g(y))_π``."""

    n: int
    f: BitFunction
    g: BitFunction
    pi: Permutation
    family = "interleaved"

    def __post_init__(self) -> None:
        _check_fn(self.f, self.n, self.n, "f")
        _check_fn(self.g, self.n, self.n, "g")
        if len(self.pi) != 2 * self.n:
            raise ValueError(f"π permutes {len(self.pi)} bits, block is {2 * self.n}")

    @property
    def block(self) -> int:
        return 2 * self.n

    def deinterleave(self, c):
        return _split(invert_perm(self.pi).apply_raw(c), self.n)

    def interleave(self, x, y):
        return self.pi.apply_raw(_join(x, y, self.n))

    def apply_raw(self, c):
        x, y = self.deinterleave(c)
        return self.interleave(self.f(x), self.g(y))

    def to_json(self) -> dict:
        return {
            "family": self.family, "n": self.n, "pi": list(self.pi.map),
            "f": self.f.to_json(), "g": self.g.to_json(),
        }


@dataclass(frozen=True, eq=False)
class LinearComposed:
    """``c ↦ h(inner(c))`` for a GF(2)-linear ``h``."""

    h: BitMatrix
    inner: Interleaved
    family = "linear-composed"

    def __post_init__(self) -> None:
        b = self.inner.block
        if self.h.shape != (b, b):
            raise ValueError(f"h has shape {self.h.shape}, expected ({b}, {b})")

    @property
    def n(self) -> int:
        return self.inner.n

    @property
    def block(self) -> int:
        return self.inner.block

    def apply_raw(self, c):
        return self.h.apply_raw(self.inner.apply_raw(c))

    def to_json(self) -> dict:
        w = _hex_width(self.block)
        return {"family": self.family, "h": [f"{r:0{w}x}" for r in self.h.rows], "inner": self.inner.to_json()}


@dataclass(frozen=True, eq=False)
class SumForm:
    """``(x ∘ y)_π ↦ ((f₁(x) + g₁(y)) ∘ (f₂(x) + g₂(y)))_π``."""

    n: int
    f1: BitFunction
    f2: BitFunction
    g1: BitFunction
    g2: BitFunction
    pi: Permutation
    family = "sum-form"

    def __post_init__(self) -> None:
        for name in ("f1", "f2", "g1", "g2"):
            _check_fn(getattr(self, name), self.n, self.n, name)
        if len(self.pi) != 2 * self.n:
            raise ValueError(f"π permutes {len(self.pi)} bits, block is {2 * self.n}")

    @property
    def block(self) -> int:
        return 2 * self.n

    def apply_raw(self, c):
        x, y = _split(invert_perm(self.pi).apply_raw(c), self.n)
        return self.pi.apply_raw(_join(self.f1(x) ^ self.g1(y), self.f2(x) ^ self.g2(y), self.n))

    def fixed_point_free(self) -> bool:
        """Whether f₁(x) + g₁(y) ≠ x for all x, y, or f₂(x) + g₂(y) ≠ y for all x, y.

        Decided by enumerating the ``2^n × 2^n`` grid, so only for small ``n``.
        """
        if self.n > 12:
            raise EnumerationCapExceeded("fixed-point check enumerates 2^(2n) pairs; n must be ≤ 12")
        xs = np.arange(1 << self.n, dtype=np.uint64)
        f1, f2, g1, g2 = (fn(xs) for fn in (self.f1, self.f2, self.g1, self.g2))
        first = not np.any((f1[:, None] ^ g1[None, :]) == xs[:, None])
        second = not np.any((f2[:, None] ^ g2[None, :]) == xs[None, :])
        return first or second

    def to_json(self) -> dict:
        out = {"family": self.family, "n": self.n, "pi": list(self.pi.map)}
        for name in ("f1", "f2", "g1", "g2"):
            out[name] = getattr(self, name).to_json()
        return out


@dataclass(frozen=True, eq=False)
class Round:
    """One message: ``party`` ("x" or "y") sends ``bits`` bits computed from its input and the transcript."""

    party: str
    bits: int
    fn: BitFunction

    def to_json(self) -> dict:
        return {"party": self.party, "bits": self.bits, "fn": self.fn.to_json()}


@dataclass(frozen=True, eq=False)
class CommProtocol:
    """Split-state tampering after a protocol in which each party sends at most ``t`` bits.

    A round function reads ``own ∘ transcript``; the final functions read
    ``own ∘ full transcript`` and return the tampered half.
    """

    n: int
    t: int
    rounds: tuple[Round, ...]
    final_f: BitFunction
    final_g: BitFunction
    family = "comm-protocol"

    def __post_init__(self) -> None:
        sent = {"x": 0, "y": 0}
        tr = 0
        for i, r in enumerate(self.rounds):
            if r.party not in sent:
                raise ValueError(f"round {i}: party must be 'x' or 'y'")
            _check_fn(r.fn, self.n + tr, r.bits, f"round {i} function")
            sent[r.party] += r.bits
            tr += r.bits
        for party, used in sent.items():
            if used > self.t:
                raise ValueError(f"party {party} sends {used} bits, budget is {self.t}")
        _check_fn(self.final_f, self.n + tr, self.n, "final_f")
        _check_fn(self.final_g, self.n + tr, self.n, "final_g")

    @property
    def block(self) -> int:
        return 2 * self.n

    @property
    def transcript_len(self) -> int:
        return sum(r.bits for r in self.rounds)

    def _run(self, x, y):
        tr = _const(0, x)
        pos = 0
        for r in self.rounds:
            own = x if r.party == "x" else y
            msg = r.fn(own | _shift(tr, self.n))
            limit = mask(r.bits)
            assert (np.all(msg <= np.uint64(limit)) if _is_array(msg) else msg <= limit), "budget overrun"
            tr = tr | _shift(msg, pos)
            pos += r.bits
        return self.final_f(x | _shift(tr, self.n)), self.final_g(y | _shift(tr, self.n)), tr

    def apply_raw(self, c):
        x, y = _split(c, self.n)
        xp, yp, _ = self._run(x, y)
        return _join(xp, yp, self.n)

    def to_json(self) -> dict:
        return {
            "family": self.family, "n": self.n, "t": self.t,
            "rounds": [r.to_json() for r in self.rounds],
            "final_f": self.final_f.to_json(), "final_g": self.final_g.to_json(),
        }


TamperSpec = SplitState | Interleaved | LinearComposed | SumForm | CommProtocol


def run_protocol(spec: CommProtocol, x: BitVector, y: BitVector) -> tuple[BitVector, BitVector, BitVector]:
    """Run the protocol on one input pair; returns ``(x', y', transcript)``."""
    if x.length != spec.n or y.length != spec.n:
        raise ValueError(f"inputs must be {spec.n} bits each")
    xp, yp, tr = spec._run(x.value, y.value)
    return BitVector(int(xp), spec.n), BitVector(int(yp), spec.n), BitVector(int(tr), spec.transcript_len)


def _perm_field(obj: dict, path: str, n: int) -> Permutation:
    mp = _need(obj, "pi", path)
    try:
        pi = Permutation(tuple(mp))
    except (TypeError, ValueError) as exc:
        raise AdversarySpecError(f"{path}.pi", str(exc)) from None
    if len(pi) != 2 * n:
        raise AdversarySpecError(f"{path}.pi", f"permutes {len(pi)} bits, block is {2 * n}")
    return pi


def spec_from_json(obj: dict, path: str = "adversary") -> TamperSpec:
    """Parse an adversary description; errors name the offending field."""
    family = _need(obj, "family", path)
    try:
        if family == "split-state":
            n = _int_field(obj, "n", path)
            return SplitState(n, BitFunction.from_json(_need(obj, "f", path), f"{path}.f"),
                              BitFunction.from_json(_need(obj, "g", path), f"{path}.g"))
        if family == "interleaved":
            n = _int_field(obj, "n", path)
            return Interleaved(n, BitFunction.from_json(_need(obj, "f", path), f"{path}.f"),
                               BitFunction.from_json(_need(obj, "g", path), f"{path}.g"), _perm_field(obj, path, n))
        if family == "linear-composed":
            inner = spec_from_json(_need(obj, "inner", path), f"{path}.inner")
            if not isinstance(inner, Interleaved):
                raise AdversarySpecError(f"{path}.inner", "inner tampering must be interleaved")
            rows = [_parse_hex(r, f"{path}.h[{i}]") for i, r in enumerate(_need(obj, "h", path))]
            try:
                h = BitMatrix(tuple(rows), inner.block)
            except ValueError as exc:
                raise AdversarySpecError(f"{path}.h", str(exc)) from None
            return LinearComposed(h, inner)
        if family == "sum-form":
            n = _int_field(obj, "n", path)
            fns = {k: BitFunction.from_json(_need(obj, k, path), f"{path}.{k}") for k in ("f1", "f2", "g1", "g2")}
            return SumForm(n, pi=_perm_field(obj, path, n), **fns)
        if family == "comm-protocol":
            n = _int_field(obj, "n", path)
            t = _int_field(obj, "t", path)
            rounds = []
            for i, r in enumerate(_need(obj, "rounds", path)):
                rp = f"{path}.rounds[{i}]"
                rounds.append(Round(_need(r, "party", rp), _int_field(r, "bits", rp),
                                    BitFunction.from_json(_need(r, "fn", rp), f"{rp}.fn")))
            return CommProtocol(n, t, tuple(rounds),
                                BitFunction.from_json(_need(obj, "final_f", path), f"{path}.final_f"),
                                BitFunction.from_json(_need(obj, "final_g", path), f"{path}.final_g"))
    except AdversarySpecError:
        raise
    except ValueError as exc:
        raise AdversarySpecError(path, str(exc)) from None
    raise AdversarySpecError(f"{path}.family", f"unknown family {family!r}")


# ---------------------------------------------------------------- decomposition


def decompose_linear_composed(spec: LinearComposed) -> SumForm:
    """Rewrite ``h((f(x) ∘ g(y))_π)`` as ``((f₁(x)+g₁(y)) ∘ (f₂(x)+g₂(y)))_π``.

    With ``K = π⁻¹ h π`` split into ``n × n`` blocks, ``f₁ = K₁₁ f``,
    ``f₂ = K₂₁ f``, ``g₁ = K₁₂ g`` and ``g₂ = K₂₂ g``.
    """
    inner = spec.inner
    n, pi = inner.n, inner.pi
    pinv = invert_perm(pi)
    # column j of K is π⁻¹ h π e_j
    cols = [pinv.apply_raw(spec.h.apply_raw(pi.apply_raw(1 << j))) for j in range(2 * n)]
    K = BitMatrix.from_columns(cols, 2 * n)

    def block(r0: int, c0: int) -> BitMatrix:
        return BitMatrix(tuple((K.rows[r0 + i] >> c0) & mask(n) for i in range(n)), n)

    lin = lambda m: Op("affine", n, n, matrix=m)  # noqa: E731
    return SumForm(
        n,
        f1=inner.f.then(lin(block(0, 0))),
        f2=inner.f.then(lin(block(n, 0))),
        g1=inner.g.then(lin(block(0, n))),
        g2=inner.g.then(lin(block(n, n))),
        pi=pi,
    )


# ---------------------------------------------------------------- distributions


@dataclass(frozen=True)
class DistributionTable:
    """A pmf over ``range(len(pmf))``; entries are floats or exact ``Fraction`` s."""

    pmf: tuple

    def __post_init__(self) -> None:
        if not self.pmf:
            raise ValueError("empty distribution")
        if any(p < 0 for p in self.pmf):
            raise ValueError("negative probability")
        if self.exact:
            if sum(self.pmf) != 1:
                raise ValueError("probabilities do not sum to 1")
        elif abs(math.fsum(self.pmf) - 1.0) > PMF_TOLERANCE:
            raise ValueError(f"probabilities sum to {math.fsum(self.pmf)!r}")

    @property
    def exact(self) -> bool:
        return all(isinstance(p, Fraction) for p in self.pmf)

    @property
    def size(self) -> int:
        return len(self.pmf)

    @classmethod
    def from_counts(cls, counts: Iterable[int], exact: bool = False) -> "DistributionTable":
        counts = [int(c) for c in counts]
        total = sum(counts)
        if total <= 0:
            raise ValueError("no mass")
        if exact:
            return cls(tuple(Fraction(c, total) for c in counts))
        return cls(tuple(c / total for c in counts))

    @classmethod
    def point(cls, size: int, at: int) -> "DistributionTable":
        return cls(tuple(1.0 if i == at else 0.0 for i in range(size)))

    @classmethod
    def uniform(cls, size: int) -> "DistributionTable":
        return cls(tuple(1.0 / size for _ in range(size)))

    def marginal(self, shape: tuple[int, int], axis: int) -> "DistributionTable":
        """Marginal of a joint table laid out as ``a * shape[1] + b``."""
        na, nb = shape
        if na * nb != self.size:
            raise ValueError("shape does not match the table size")
        if axis == 0:
            groups = [[self.pmf[a * nb + b] for b in range(nb)] for a in range(na)]
        else:
            groups = [[self.pmf[a * nb + b] for a in range(na)] for b in range(nb)]
        add = sum if self.exact else math.fsum
        return DistributionTable(tuple(add(g) for g in groups))

    def product(self, other: "DistributionTable") -> "DistributionTable":
        return DistributionTable(tuple(p * q for p in self.pmf for q in other.pmf))

    def to_json(self) -> list:
        return [float(p) for p in self.pmf]


def tv_distance(p: DistributionTable, q: DistributionTable):
    """Half the ℓ₁ distance; exact when both tables are exact."""
    if p.size != q.size:
        raise ValueError(f"domain mismatch: {p.size} vs {q.size}")
    if p.exact and q.exact:
        return sum(abs(a - b) for a, b in zip(p.pmf, q.pmf)) / 2
    return math.fsum(abs(float(a) - float(b)) for a, b in zip(p.pmf, q.pmf)) / 2


@dataclass(frozen=True, eq=False)
class EnumerableSource:
    """A finite source: support points with integer weights (uniform when omitted)."""

    points: np.ndarray
    weights: np.ndarray | None = None

    @classmethod
    def uniform(cls, bits: int) -> "EnumerableSource":
        return cls(np.arange(1 << bits, dtype=np.uint64))

    @classmethod
    def flat(cls, support: Iterable[int]) -> "EnumerableSource":
        return cls(np.unique(np.asarray(list(support), dtype=np.uint64)))

    def __len__(self) -> int:
        return len(self.points)


def _check_cap(size: int, cap: int) -> None:
    if size > cap:
        raise EnumerationCapExceeded(
            f"enumeration over {size} points exceeds the cap of {cap}; use Monte Carlo mode"
        )


def exact_joint(
    fa: Callable, fb: Callable, source: EnumerableSource, na: int, nb: int,
    cap: int = DEFAULT_CAP, exact: bool | None = None,
) -> DistributionTable:
    """Joint pmf of ``(fa(Z), fb(Z))`` on ``na × nb`` outcomes by full enumeration.

    ``fa`` and ``fb`` take a ``uint64`` array; outcome ``(a, b)`` is index
    ``a * nb + b``.  ``exact`` defaults to rational arithmetic for domains up
    to 2^16.
    """
    _check_cap(len(source), cap)
    z = source.points
    a = np.asarray(fa(z)).astype(np.int64)
    b = np.asarray(fb(z)).astype(np.int64)
    if np.any((a < 0) | (a >= na)) or np.any((b < 0) | (b >= nb)):
        raise ValueError("function output outside the declared outcome range")
    w = None if source.weights is None else np.asarray(source.weights, dtype=np.int64)
    counts = np.bincount(a * nb + b, weights=w, minlength=na * nb)
    if exact is None:
        exact = na * nb <= EXACT_RATIONAL_MAX and len(source) <= EXACT_RATIONAL_MAX
    return DistributionTable.from_counts(np.rint(counts).astype(np.int64), exact=exact)


# ---------------------------------------------------------------- simulator and experiments


@lru_cache(maxsize=4)
def decode_table(profile: ParamProfile) -> tuple[np.ndarray, np.ndarray]:
    """Decoded message and fallback flag for every codeword of the profile."""
    z = np.arange(1 << profile.block, dtype=np.uint64)
    dec, fb = ilnm_inv_batch(profile, z, with_fallback=True)
    dec.flags.writeable = False
    fb.flags.writeable = False
    return dec, fb


def _same_index(sch: CodewordScheme) -> int:
    return 1 << sch.k


def _copy(sim: DistributionTable, s: int) -> DistributionTable:
    """copy(D_f, s): the same★ mass moves onto ``s``."""
    pmf = list(sim.pmf[:-1])
    pmf[s] = pmf[s] + sim.pmf[-1]
    return DistributionTable(tuple(pmf))


def _block_ok(spec: TamperSpec, sch: CodewordScheme) -> None:
    if spec.block != sch.block:
        raise ValueError(f"adversary acts on {spec.block} bits, codewords have {sch.block}")


def _exact_simulator_counts(sch: CodewordScheme, spec: TamperSpec, cap: int):
    _check_cap(1 << sch.block, cap)
    dec, fb = decode_table(sch.profile)
    z = np.arange(1 << sch.block, dtype=np.uint64)
    zt = spec.apply_raw(z)
    out = dec[zt.astype(np.int64)].astype(np.int64)
    same = zt == z
    sim = np.bincount(out[~same], minlength=1 << sch.k).tolist() + [int(same.sum())]
    return sim, dec, fb, out


def _random_codewords(sch: CodewordScheme, count: int, rng: np.random.Generator):
    if sch.block <= 64:
        hi = rng.integers(0, 1 << 32, size=count, dtype=np.uint64)
        lo = rng.integers(0, 1 << 32, size=count, dtype=np.uint64)
        return ((hi << np.uint64(32)) | lo) & np.uint64(mask(sch.block))
    return [random_int(sch.block, rng) for _ in range(count)]


@lru_cache(maxsize=16)
def _batch_ok(profile: ParamProfile) -> bool:
    if profile.block > 64:
        return False
    try:
        ilnm_inv_batch(profile, np.zeros(1, dtype=np.uint64))
    except ValueError:
        return False
    return True


def _decode_many(sch: CodewordScheme, cs) -> np.ndarray:
    if isinstance(cs, np.ndarray) and _batch_ok(sch.profile):
        return ilnm_inv_batch(sch.profile, cs).astype(np.int64)
    return np.array([decode(sch, BitVector(int(c), sch.block)).value for c in cs], dtype=np.int64)


def _apply_many(spec: TamperSpec, cs):
    if isinstance(cs, np.ndarray):
        return spec.apply_raw(cs)
    return [int(spec.apply_raw(int(c))) for c in cs]


def _mc_simulator_counts(sch: CodewordScheme, spec: TamperSpec, trials: int, rng: np.random.Generator):
    cs = _random_codewords(sch, trials, rng)
    ct = _apply_many(spec, cs)
    if isinstance(cs, np.ndarray):
        same = ct == cs
        out = _decode_many(sch, ct[~same])
    else:
        same = np.array([a == b for a, b in zip(cs, ct)])
        out = _decode_many(sch, [c for c, s in zip(ct, same) if not s])
    return np.bincount(out, minlength=1 << sch.k).tolist() + [int(same.sum())]


def _encode_many(sch: CodewordScheme, s: int, count: int, rng: np.random.Generator):
    if _batch_ok(sch.profile):
        return encode_batch(sch, s, count, rng)
    msg = BitVector(s, sch.k)
    out = []
    for _ in range(count):
        c = encode(sch, msg, rng)
        if not c:
            raise RuntimeError(c.reason)
        out.append(c.value)
    return out


def canonical_simulator(
    sch: CodewordScheme, spec: TamperSpec, mode: str = "exact", trials: int = 0,
    rng: np.random.Generator | None = None, cap: int = DEFAULT_CAP,
) -> DistributionTable:
    """Estimate of D_f over messages plus a final same★ outcome.

    A uniform ``2n``-bit codeword ``c`` is tampered; the outcome is same★ when
    ``f(c) = c`` and ``decode(f(c))`` otherwise.  Exact mode enumerates ``c``.
    """
    _block_ok(spec, sch)
    if mode == "exact":
        counts = _exact_simulator_counts(sch, spec, cap)[0]
    elif mode == "monte-carlo":
        if trials < 1 or rng is None:
            raise ValueError("Monte Carlo mode needs trials ≥ 1 and an rng")
        counts = _mc_simulator_counts(sch, spec, trials, rng)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return DistributionTable.from_counts(counts)


_REPORT_KEYS = (
    "profile", "adversary", "family", "mode", "trials", "seed", "nm_error", "std_error",
    "worst_message", "per_message", "simulator", "same_mass", "threshold_note", "wall_time",
)


@dataclass
class ExperimentReport:
    profile: str
    adversary: str
    family: str
    mode: str
    trials: int
    seed: int | None
    nm_error: float
    std_error: float | None
    worst_message: int
    per_message: dict[int, float]
    simulator: list[float]
    same_mass: float
    wall_time: float = 0.0
    threshold_note: str = (
        "desk-scale measurement with the canonical simulator; an upper bound on the "
        "error against the best simulator"
    )

    def to_json(self, timing: bool = True) -> dict:
        d = {
            "profile": self.profile, "adversary": self.adversary, "family": self.family,
            "mode": self.mode, "trials": self.trials, "seed": self.seed, "nm_error": self.nm_error,
            "std_error": self.std_error, "worst_message": self.worst_message,
            "per_message": {str(k): v for k, v in sorted(self.per_message.items())},
            "simulator": self.simulator, "same_mass": self.same_mass,
            "threshold_note": self.threshold_note, "wall_time": self.wall_time,
        }
        if not timing:
            del d["wall_time"]
        return {k: d[k] for k in _REPORT_KEYS if k in d}

    def dumps(self, timing: bool = True) -> str:
        return json.dumps(self.to_json(timing), indent=2)


def _mc_se(p: Sequence[float], trials: int) -> float:
    return 0.5 * math.fsum(math.sqrt(max(q * (1 - q), 0.0) / trials) for q in p)


def nm_experiment(
    sch: CodewordScheme,
    spec: TamperSpec,
    mode: str = "exact",
    trials: int = 0,
    seed: int = 0,
    cap: int = DEFAULT_CAP,
    adversary: str = "adversary",
    messages: Sequence[int] | None = None,
) -> ExperimentReport:
    """Max over messages of TV(Dec(f(Enc(s))), copy(D̂_f, s)).

    Exact mode enumerates every codeword: the simulator uses all ``2^{2n}``
    codewords and ``Enc(s)`` is uniform over the non-fallback codewords that
    decode to ``s``.  Monte Carlo mode draws ``trials`` simulator codewords
    and ``trials`` encodings per message, from substreams of ``seed``.
    """
    _block_ok(spec, sch)
    t0 = time.perf_counter()
    nmsg = 1 << sch.k
    if messages is None:
        messages = range(nmsg) if nmsg <= 16 else sorted(
            {int(v) for v in named_rng(seed, "messages").integers(0, nmsg, size=8)}
        )
    per: dict[int, float] = {}
    se: dict[int, float] = {}
    if mode == "exact":
        sim_counts, dec, fb, out = _exact_simulator_counts(sch, spec, cap)
        sim = DistributionTable.from_counts(sim_counts)
        for s in messages:
            sel = (dec == s) & ~fb
            real = DistributionTable.from_counts(np.bincount(out[sel], minlength=nmsg))
            per[s] = tv_distance(real, _copy(sim, s))
    elif mode == "monte-carlo":
        if trials < 1:
            raise ValueError("Monte Carlo mode needs trials ≥ 1")
        sim = DistributionTable.from_counts(_mc_simulator_counts(sch, spec, trials, named_rng(seed, "trials")))
        enc_rng = named_rng(seed, "encode")
        for s in messages:
            cs = _encode_many(sch, s, trials, enc_rng)
            out = _decode_many(sch, _apply_many(spec, cs))
            real = DistributionTable.from_counts(np.bincount(out, minlength=nmsg))
            per[s] = tv_distance(real, _copy(sim, s))
            se[s] = _mc_se(real.pmf, trials) + _mc_se(sim.pmf, trials)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    worst = max(per, key=lambda s: (per[s], -s))
    return ExperimentReport(
        profile=sch.profile.name,
        adversary=adversary,
        family=spec.family,
        mode=mode,
        trials=(1 << sch.block) if mode == "exact" else trials,
        seed=seed,
        nm_error=float(per[worst]),
        std_error=se.get(worst) if mode == "monte-carlo" else None,
        worst_message=worst,
        per_message={s: float(v) for s, v in per.items()},
        simulator=sim.to_json(),
        same_mass=float(sim.pmf[-1]),
        wall_time=round(time.perf_counter() - t0, 3),
    )


# ---------------------------------------------------------------- adversary battery


def _random_invertible(k: int, rng: np.random.Generator) -> BitMatrix:
    while True:
        m = BitMatrix.random(k, k, rng)
        if rank(m) == k:
            return m


def random_protocol(n: int, t: int, rng: np.random.Generator) -> CommProtocol:
    """Two rounds (x then y, ``t`` bits each) followed by transcript-keyed xor masks."""
    rounds = (
        Round("x", t, BitFunction.random_table(n, t, rng)),
        Round("y", t, BitFunction.random_table(n + t, t, rng)),
    )
    T = 2 * t
    masks_f = rng.integers(0, 1 << n, size=1 << T, dtype=np.uint64)
    masks_g = rng.integers(0, 1 << n, size=1 << T, dtype=np.uint64)
    idx = np.arange(1 << (n + T), dtype=np.uint64)
    own, tr = idx & np.uint64(mask(n)), (idx >> np.uint64(n)).astype(np.int64)
    ff = BitFunction.from_table(own ^ masks_f[tr], n + T, n)
    fg = BitFunction.from_table(own ^ masks_g[tr], n + T, n)
    return CommProtocol(n, t, rounds, ff, fg)


def battery(n: int, rng: np.random.Generator, masks: int = 4, repeats: int = 2) -> list[tuple[str, TamperSpec]]:
    """The standard adversary set at half-length ``n``.

    Identity and two constants (all-zero and random); split-state bit flips (every single-bit flip plus
    random masks on both halves); interleaved split-state with random ``π``;
    a random linear map over interleaved split-state; a two-round protocol
    with a two-bit budget.
    """
    out: list[tuple[str, TamperSpec]] = []
    ident = BitFunction.identity(n)
    out.append(("identity", SplitState(n, ident, ident)))
    for j, c0 in enumerate((0, random_int(2 * n, rng))):
        out.append((f"constant-{j}", SplitState(n, BitFunction.constant(n, c0 & mask(n)),
                                                BitFunction.constant(n, c0 >> n))))
    for i in range(2 * n):
        fx = BitFunction.xor_mask(n, (1 << i) & mask(n))
        gy = BitFunction.xor_mask(n, (1 << i) >> n)
        out.append((f"bitflip-single-{i}", SplitState(n, fx, gy)))
    for j in range(masks):
        dx, dy = random_int(n, rng), random_int(n, rng)
        if dx == dy == 0:
            dx = 1
        out.append((f"bitflip-mask-{j}", SplitState(n, BitFunction.xor_mask(n, dx), BitFunction.xor_mask(n, dy))))
    for j in range(repeats):
        pi = Permutation.random(2 * n, rng)
        out.append((f"interleaved-tables-{j}", Interleaved(
            n, BitFunction.random_table(n, n, rng), BitFunction.random_table(n, n, rng), pi)))
        pi = Permutation.random(2 * n, rng)
        out.append((f"interleaved-bitflip-{j}", Interleaved(
            n, BitFunction.xor_mask(n, random_int(n, rng) | 1), BitFunction.xor_mask(n, random_int(n, rng)), pi)))
    for j in range(repeats):
        h = BitMatrix.random(2 * n, 2 * n, rng)
        inner = Interleaved(n, BitFunction.random_table(n, n, rng), BitFunction.random_table(n, n, rng),
                            Permutation.random(2 * n, rng))
        out.append((f"linear-tables-{j}", LinearComposed(h, inner)))
        h = _random_invertible(2 * n, rng)
        inner = Interleaved(n, BitFunction.xor_mask(n, random_int(n, rng)), BitFunction.xor_mask(n, random_int(n, rng)),
                            Permutation.random(2 * n, rng))
        out.append((f"linear-bitflip-{j}", LinearComposed(h, inner)))
    for j in range(repeats):
        out.append((f"protocol-{j}", random_protocol(n, 2, rng)))
    return out
