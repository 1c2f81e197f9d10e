"""``nmforge`` command line.

Exit codes: 0 success, 1 a measured property exceeded its threshold, 2 usage
or input error.  Structured output is JSON and vectors use the ``len:hex``
text form.  Profiles are found by name on ``NMFORGE_PROFILE_DIR`` and then
among the bundled profiles, or given as a path to a ``.json`` file.
"""

from __future__ import annotations

import argparse
import json
import sys
from importlib import metadata

from . import acceptance
from . import tamperlab as tl
from .bitlin import BitVector
from .nmcode import decode, encode, scheme
from .nmx import ParamProfile, ProfileError, ilext, ilnm, ilnm_inv, list_profiles, load_profile

EXIT_OK, EXIT_THRESHOLD, EXIT_USAGE = 0, 1, 2
DEFAULT_THRESHOLD = 0.25


class UsageError(Exception):
    pass


def _version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "0+unknown"


def _emit(obj, out: str | None = None) -> None:
    text = json.dumps(obj, indent=2) + "\n"
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _profile(name: str) -> ParamProfile:
    try:
        return load_profile(name)
    except ProfileError as exc:
        raise UsageError(str(exc)) from None
    except OSError as exc:
        raise UsageError(f"profile not found: {name} ({exc.strerror})") from None


def _vector(text: str | None, length: int, what: str) -> BitVector:
    if text is None:
        raise UsageError(f"--in: missing {what}")
    try:
        v = BitVector.from_text(text)
    except ValueError as exc:
        raise UsageError(f"--in: {exc}") from None
    if v.length != length:
        raise UsageError(f"--in: {what} has {v.length} bits, profile expects {length}")
    return v


def _header(args, profile: ParamProfile) -> dict:
    return {"profile": profile.name, "seed": args.seed, "version": _version()}


# ---------------------------------------------------------------- verbs


def cmd_extract(args) -> int:
    p = _profile(args.profile)
    z = _vector(args.input, p.block, "input")
    fn = {"ilnm": ilnm, "ilnm_inv": ilnm_inv, "ilext": ilext}[args.mode]
    _emit({**_header(args, p), "mode": args.mode, "input": z.to_text(), "output": fn(p, z).to_text()}, args.out)
    return EXIT_OK


def cmd_encode(args) -> int:
    p = _profile(args.profile)
    sch = scheme(p)
    s = _vector(args.input, sch.k, "message")
    c = encode(sch, s, tl.named_rng(args.seed, "encode"))
    if not c:
        raise UsageError(f"encode failed: {c.reason}")
    _emit({**_header(args, p), "message": s.to_text(), "codeword": c.to_text()}, args.out)
    return EXIT_OK


def cmd_decode(args) -> int:
    p = _profile(args.profile)
    sch = scheme(p)
    c = _vector(args.input, sch.block, "codeword")
    _emit({**_header(args, p), "codeword": c.to_text(), "message": decode(sch, c).to_text()}, args.out)
    return EXIT_OK


def _load_adversary(path: str | None):
    if path is None:
        raise UsageError("--in: missing adversary file (or pass --battery)")
    try:
        with open(path) as fh:
            obj = json.load(fh)
    except OSError as exc:
        raise UsageError(f"--in: cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"--in: invalid JSON: {exc}") from None
    try:
        return obj.get("id", path) if isinstance(obj, dict) else path, tl.spec_from_json(obj)
    except tl.AdversarySpecError as exc:
        raise UsageError(f"invalid adversary: {exc}") from None


def cmd_experiment(args) -> int:
    p = _profile(args.profile)
    sch = scheme(p)
    if args.battery:
        advs = tl.battery(p.n, tl.named_rng(args.seed, "battery"))
    else:
        advs = [_load_adversary(args.input)]
    reports = []
    for name, spec in advs:
        if spec.block != sch.block:
            raise UsageError(f"adversary {name} acts on {spec.block} bits, profile block is {sch.block}")
        try:
            r = tl.nm_experiment(sch, spec, mode=args.mode, trials=args.trials, seed=args.seed,
                                 cap=args.cap, adversary=name)
        except tl.EnumerationCapExceeded as exc:
            raise UsageError(str(exc)) from None
        reports.append(r)
    body = [r.to_json(timing=args.timing) for r in reports]
    _emit(body if args.battery else body[0], args.out)
    return EXIT_OK if all(r.nm_error <= args.threshold for r in reports) else EXIT_THRESHOLD


def cmd_verify(args) -> int:
    numbers = args.criteria or None
    for k in numbers or ():
        if k not in acceptance.CRITERIA:
            raise UsageError(f"no criterion {k}; choose from 1-{len(acceptance.CRITERIA)}")
    results = acceptance.run_all(numbers, echo=lambda line: print(line, file=sys.stderr, flush=True))
    _emit({"version": _version(), "seed": args.seed, "results": [r.to_json() for r in results]}, args.out)
    return EXIT_OK if all(r.passed for r in results) else EXIT_THRESHOLD


def cmd_profile(args) -> int:
    if args.action == "list":
        _emit(list_profiles(), args.out)
        return EXIT_OK
    if not args.name:
        raise UsageError("profile validate: missing profile name or path")
    p = _profile(args.name)
    soft = p.soft_violations()
    _emit({"profile": p.name, "valid": True, "warnings": soft, "summary": p.describe()}, args.out)
    return EXIT_OK


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nmforge", description="Interleaved non-malleable extractors and codes.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {_version()}")
    sub = ap.add_subparsers(dest="verb", required=True)

    def common(sp, profile: bool = True):
        if profile:
            sp.add_argument("--profile", default="toy20", help="profile name or path (default toy20)")
        sp.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
        sp.add_argument("--out", help="write JSON here instead of stdout")

    sp = sub.add_parser("extract", help="evaluate ilnm, ilnm_inv or ilext on one vector")
    common(sp)
    sp.add_argument("--mode", choices=["ilnm", "ilnm_inv", "ilext"], default="ilnm_inv")
    sp.add_argument("--in", dest="input", help="input vector as len:hex")
    sp.set_defaults(fn=cmd_extract)

    sp = sub.add_parser("encode", help="encode a message")
    common(sp)
    sp.add_argument("--in", dest="input", help="message as len:hex")
    sp.set_defaults(fn=cmd_encode)

    sp = sub.add_parser("decode", help="decode a codeword")
    common(sp)
    sp.add_argument("--in", dest="input", help="codeword as len:hex")
    sp.set_defaults(fn=cmd_decode)

    sp = sub.add_parser("experiment", help="measure the non-malleability error of an adversary")
    common(sp)
    sp.add_argument("--in", dest="input", help="adversary JSON file")
    sp.add_argument("--battery", action="store_true", help="run the standard adversary battery instead")
    sp.add_argument("--mode", choices=["exact", "monte-carlo"], default="exact")
    sp.add_argument("--trials", type=int, default=10_000, help="Monte Carlo trials per distribution")
    sp.add_argument("--cap", type=int, default=tl.DEFAULT_CAP, help="enumeration cap for exact mode")
    sp.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD, help="exit 1 above this error")
    sp.add_argument("--timing", action="store_true", help="include wall time in reports")
    sp.set_defaults(fn=cmd_experiment)

    sp = sub.add_parser("verify", help="run the acceptance suite")
    common(sp, profile=False)
    sp.add_argument("criteria", nargs="*", type=int, help="criterion numbers (default all)")
    sp.set_defaults(fn=cmd_verify)

    sp = sub.add_parser("profile", help="list or validate profiles")
    common(sp, profile=False)
    sp.add_argument("action", choices=["validate", "list"])
    sp.add_argument("name", nargs="?")
    sp.set_defaults(fn=cmd_profile)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except UsageError as exc:
        print(f"nmforge: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
