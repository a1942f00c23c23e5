"""Command-line front end: JSON documents in, JSON documents out.

Exit codes: 0 on success, 1 when a verification suite fails, 2 on usage or
input errors.  ``HMS_TOL`` overrides the default tolerance.
"""
from __future__ import annotations

import argparse
import os
import sys
from fractions import Fraction

import numpy as np

from . import jsonio
from .fukaya import m2
from .jsonio import DocumentError, dumps, encode_any, encode_object
from .mirror import phi_bundle_torsion_morphism, phi_morphism, phi_object
from .numerics import (DEFAULT_TOL, ThetaParams, TorusModulus, theta_eval,
                       theta_truncation)
from .sheaves import BundleDesc, SectionElement, TorsionDesc, compose
from .verification import SUITES, run_suite


class UsageError(Exception):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


def _complex_arg(text: str) -> complex:
    try:
        re_, im_ = text.split(",")
        return complex(float(re_), float(im_))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 're,im', got {text!r}") from None


def _tau_arg(text: str) -> TorusModulus:
    z = _complex_arg(text)
    if not z.imag > 0:
        raise argparse.ArgumentTypeError("tau must have positive imaginary part")
    return TorusModulus.from_complex(z)


def _real_arg(text: str):
    try:
        return Fraction(text) if "/" in text else float(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"expected a number or p/q, got {text!r}") from None


def _default_tol(fallback: float) -> float:
    env = os.environ.get("HMS_TOL")
    if env is None:
        return fallback
    try:
        return float(env)
    except ValueError:
        raise UsageError("BAD_ENV", f"HMS_TOL={env!r} is not a number") from None


def _read_doc(path: str):
    try:
        text = sys.stdin.read() if path == "-" else open(path, encoding="utf-8").read()
    except OSError as exc:
        raise UsageError("IO_ERROR", str(exc)) from exc
    try:
        return jsonio.loads(text)
    except ValueError as exc:
        raise UsageError("BAD_JSON", f"{path}: {exc}") from exc


def _decode(path: str):
    try:
        return jsonio.decode_any(_read_doc(path))
    except DocumentError as exc:
        raise UsageError("BAD_DOCUMENT", f"{path}: {exc}") from exc


# -- subcommands ------------------------------------------------------------------

def cmd_theta(args) -> tuple[object, int]:
    tol = args.tol if args.tol is not None else _default_tol(DEFAULT_TOL)
    if not tol > 0:
        raise UsageError("BAD_TOL", "tolerance must be positive")
    p = ThetaParams(args.char, shift_real=args.shift, level=args.level, freq=args.freq)
    value = theta_eval(p, args.tau, args.z, tol)
    return {"value": jsonio.enc_complex(value),
            "truncation_M": theta_truncation(p, args.tau, args.z, tol), "tol": tol}, 0


def _compose_docs(first, second, side: str, tau: TorusModulus):
    if side == "b":
        if not (isinstance(first, SectionElement) and isinstance(second, SectionElement)):
            raise UsageError("WRONG_SIDE", "side b composes two section documents")
        if first.target != second.source:
            raise UsageError("ENDPOINT_MISMATCH", "target of the first morphism differs "
                             "from the source of the second")
        return compose(first, second, tau)
    from .fukaya import PointSum
    if not (isinstance(first, PointSum) and isinstance(second, PointSum)):
        raise UsageError("WRONG_SIDE", "side a composes two pointsum documents")
    if not first.target.isclose(second.source):
        raise UsageError("ENDPOINT_MISMATCH", "target of the first morphism differs "
                         "from the source of the second")
    return m2(first, second, tau)


def cmd_compose(args):
    first, second = _decode(args.first), _decode(args.second)
    try:
        return encode_any(_compose_docs(first, second, args.side, args.tau)), 0
    except ValueError as exc:
        if isinstance(exc, DocumentError):
            raise
        raise UsageError("COMPOSE_FAILED", str(exc)) from exc


def cmd_mirror(args):
    doc = _read_doc(args.doc)
    try:
        if isinstance(doc, dict) and doc.get("kind") == "fibermap":
            src = jsonio.decode_object(doc["source"])
            dst = jsonio.decode_object(doc["target"])
            if not (isinstance(src, BundleDesc) and isinstance(dst, TorsionDesc)):
                raise DocumentError("fibermap goes from a bundle to a torsion sheaf")
            return encode_any(phi_bundle_torsion_morphism(
                jsonio.dec_matrix(doc["matrix"]), src, dst, args.tau)), 0
        obj = jsonio.decode_any(doc)
    except (DocumentError, KeyError, ValueError) as exc:
        raise UsageError("BAD_DOCUMENT", str(exc)) from exc
    if isinstance(obj, SectionElement):
        image = phi_morphism(obj, args.tau)
        if isinstance(image, np.ndarray):
            return {"side": "A", "kind": "intertwiner",
                    "source": encode_object(phi_object(obj.source)),
                    "target": encode_object(phi_object(obj.target)),
                    "matrix": jsonio.enc_matrix(image)}, 0
        return encode_any(image), 0
    if isinstance(obj, (BundleDesc, TorsionDesc, tuple)):
        return encode_any(phi_object(obj)), 0
    raise UsageError("WRONG_SIDE", "mirror maps complex-side documents")


def cmd_verify(args):
    tol = args.tol if args.tol is not None else (
        _default_tol(None) if "HMS_TOL" in os.environ else None)
    reports = run_suite(args.suite, args.tau, seed=args.seed, tol=tol)
    code = 0 if all(r.passed for r in reports) else 1
    return [r.to_dict() for r in reports], code


# -- parser ---------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ellhms", description=__doc__.splitlines()[0])
    parser.add_argument("--out", help="write JSON here instead of stdout")
    sub = parser.add_subparsers(dest="command", required=True)

    th = sub.add_parser("theta", help="evaluate a theta function with characteristics")
    th.add_argument("--tau", type=_tau_arg, required=True, metavar="RE,IM")
    th.add_argument("--z", type=_complex_arg, required=True, metavar="RE,IM")
    th.add_argument("--char", type=_real_arg, default=Fraction(0), help="characteristic a")
    th.add_argument("--shift", type=_real_arg, default=Fraction(0), help="real translation z0")
    th.add_argument("--level", type=int, default=1)
    th.add_argument("--freq", type=int, default=1)
    th.add_argument("--tol", type=float)
    th.set_defaults(func=cmd_theta)

    co = sub.add_parser("compose", help="compose two morphism documents (first, then second)")
    co.add_argument("--side", choices=("a", "b"), required=True)
    co.add_argument("--tau", type=_tau_arg, default=TorusModulus(0.0, 1.0), metavar="RE,IM")
    co.add_argument("first")
    co.add_argument("second")
    co.set_defaults(func=cmd_compose)

    mi = sub.add_parser("mirror", help="image of an object or morphism document")
    mi.add_argument("--tau", type=_tau_arg, default=TorusModulus(0.0, 1.0), metavar="RE,IM")
    mi.add_argument("doc")
    mi.set_defaults(func=cmd_mirror)

    ve = sub.add_parser("verify", help="run verification suites")
    ve.add_argument("--suite", choices=SUITES + ("all",), default="all")
    ve.add_argument("--tau", type=_tau_arg, default=TorusModulus(0.0, 1.0), metavar="RE,IM")
    ve.add_argument("--seed", type=int, default=0)
    ve.add_argument("--tol", type=float)
    ve.set_defaults(func=cmd_verify)
    return parser


def _emit(doc, out: str | None) -> None:
    text = dumps(doc)
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        doc, code = args.func(args)
    except UsageError as exc:
        _emit({"error": {"code": exc.code, "message": str(exc)}}, args.out)
        return 2
    _emit(doc, args.out)
    return code


if __name__ == "__main__":
    sys.exit(main())
