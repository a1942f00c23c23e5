"""JSON documents for objects, morphisms and reports.

Rationals are ``[num, den]``, complex numbers ``[re, im]`` and matrices lists of
rows of complex numbers.  Output is deterministic: keys keep insertion order and
floats are written with 17 significant digits, which round-trips every double.
"""
from __future__ import annotations

import json
import math
from fractions import Fraction

import numpy as np

from .fukaya import Brane, BraneTuple, PointSum
from .numerics import NilpotentMatrix
from .sheaves import BundleDesc, SectionElement, TorsionDesc


class DocumentError(ValueError):
    """Malformed or schema-invalid document."""


# -- scalar encodings ---------------------------------------------------------

def enc_real(v):
    """Exact rationals as ``[num, den]``, everything else as a float."""
    if isinstance(v, Fraction):
        return [v.numerator, v.denominator]
    if isinstance(v, (int, np.integer)):
        return [int(v), 1]
    return float(v)


def dec_real(v):
    if isinstance(v, list):
        if len(v) != 2 or not all(isinstance(x, int) for x in v) or v[1] == 0:
            raise DocumentError(f"bad rational {v!r}")
        f = Fraction(v[0], v[1])
        if (f.numerator, f.denominator) != (v[0], v[1]):
            raise DocumentError(f"rational {v!r} is not reduced")
        return f
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        return float(v)
    raise DocumentError(f"expected a real number, got {v!r}")


def enc_complex(z) -> list:
    z = complex(z)
    return [z.real, z.imag]


def dec_complex(v) -> complex:
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        return complex(v)
    if not (isinstance(v, list) and len(v) == 2):
        raise DocumentError(f"expected [re, im], got {v!r}")
    return complex(float(v[0]), float(v[1]))


def enc_matrix(m) -> list:
    m = np.atleast_2d(np.asarray(m, dtype=complex))
    return [[enc_complex(x) for x in row] for row in m]


def dec_matrix(v) -> np.ndarray:
    if not isinstance(v, list) or not v or not all(isinstance(r, list) for r in v):
        raise DocumentError("matrix must be a non-empty list of rows")
    if len({len(r) for r in v}) != 1:
        raise DocumentError("matrix rows have different lengths")
    return np.array([[dec_complex(x) for x in row] for row in v], dtype=complex)


# -- objects ------------------------------------------------------------------

def encode_object(o) -> dict:
    if isinstance(o, BundleDesc):
        return {"side": "B", "kind": "bundle", "degree": o.degree, "a": enc_real(o.a),
                "b": enc_real(o.b), "nil": enc_matrix(o.nil.entries), "level": o.level}
    if isinstance(o, TorsionDesc):
        return {"side": "B", "kind": "torsion", "a": enc_real(o.a), "b": enc_real(o.b),
                "nil": enc_matrix(o.nil.entries)}
    if isinstance(o, Brane):
        return {"side": "A", "kind": "brane", "slope": [o.p, o.q], "offset": enc_real(o.offset),
                "alpha": o.alpha, "monodromy": enc_matrix(o.monodromy),
                "log_monodromy": enc_matrix(o.log_monodromy)}
    if isinstance(o, BraneTuple):
        return {"side": "A", "kind": "tuple", "items": [encode_object(b) for b in o]}
    if isinstance(o, tuple):
        return {"side": "B", "kind": "tuple", "items": [encode_object(b) for b in o]}
    raise TypeError(f"cannot encode {type(o).__name__}")


def _field(doc: dict, key: str):
    if key not in doc:
        raise DocumentError(f"missing field {key!r}")
    return doc[key]


def decode_object(doc: dict):
    """Parse an object document; every constructor invariant is re-checked."""
    if not isinstance(doc, dict):
        raise DocumentError("object document must be a JSON object")
    kind, side = _field(doc, "kind"), _field(doc, "side")
    try:
        if kind == "bundle" and side == "B":
            return BundleDesc(int(_field(doc, "degree")), dec_real(_field(doc, "a")),
                              dec_real(_field(doc, "b")),
                              NilpotentMatrix(dec_matrix(doc.get("nil", [[0]]))),
                              int(doc.get("level", 1)))
        if kind == "torsion" and side == "B":
            return TorsionDesc(dec_real(_field(doc, "a")), dec_real(_field(doc, "b")),
                               NilpotentMatrix(dec_matrix(doc.get("nil", [[0]]))))
        if kind == "brane" and side == "A":
            p, q = _field(doc, "slope")
            log = doc.get("log_monodromy")
            return Brane(int(p), int(q), dec_real(_field(doc, "offset")),
                         float(_field(doc, "alpha")), dec_matrix(_field(doc, "monodromy")),
                         None if log is None else dec_matrix(log))
        if kind == "tuple":
            items = tuple(decode_object(d) for d in _field(doc, "items"))
            if side == "A":
                return BraneTuple(items)
            if side == "B":
                return items
    except DocumentError:
        raise
    except (ValueError, TypeError) as exc:
        raise DocumentError(str(exc)) from exc
    raise DocumentError(f"unknown object kind {kind!r} on side {side!r}")


# -- morphisms ----------------------------------------------------------------

def encode_morphism(m) -> dict:
    if isinstance(m, SectionElement):
        return {"side": "B", "kind": "section", "source": encode_object(m.source),
                "target": encode_object(m.target),
                "coeffs": [{"j": j, "matrix": enc_matrix(c)} for j, c in sorted(m.coeffs.items())]}
    if isinstance(m, PointSum):
        terms = sorted(m.terms.items(), key=lambda kv: (float(kv[0][0]), float(kv[0][1])))
        return {"side": "A", "kind": "pointsum", "source": encode_object(m.source),
                "target": encode_object(m.target), "degree": m.degree,
                "terms": [{"point": [enc_real(p[0]), enc_real(p[1])], "matrix": enc_matrix(c)}
                          for p, c in terms]}
    raise TypeError(f"cannot encode {type(m).__name__}")


def decode_morphism(doc: dict):
    if not isinstance(doc, dict):
        raise DocumentError("morphism document must be a JSON object")
    kind = _field(doc, "kind")
    src, dst = decode_object(_field(doc, "source")), decode_object(_field(doc, "target"))
    try:
        if kind == "section":
            coeffs = {}
            for t in _field(doc, "coeffs"):
                j = int(_field(t, "j"))
                coeffs[j] = coeffs.get(j, 0) + dec_matrix(_field(t, "matrix"))
            return SectionElement(src, dst, coeffs)
        if kind == "pointsum":
            terms = {}
            for t in _field(doc, "terms"):
                x, y = _field(t, "point")
                terms[(dec_real(x), dec_real(y))] = dec_matrix(_field(t, "matrix"))
            return PointSum(src, dst, terms)
    except DocumentError:
        raise
    except (ValueError, TypeError) as exc:
        raise DocumentError(str(exc)) from exc
    raise DocumentError(f"unknown morphism kind {kind!r}")


def decode_any(doc: dict):
    """Object or morphism, decided by the ``kind`` field."""
    if isinstance(doc, dict) and doc.get("kind") in ("section", "pointsum"):
        return decode_morphism(doc)
    return decode_object(doc)


def encode_any(x) -> dict:
    if isinstance(x, (SectionElement, PointSum)):
        return encode_morphism(x)
    return encode_object(x)


# -- text -------------------------------------------------------------------------

def _float_text(x: float) -> str:
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    if x == 0:
        return "0.0"
    s = format(x, ".17g")
    if "e" not in s and "." not in s and "n" not in s:
        s += ".0"
    return s


def _is_num(x) -> bool:
    return isinstance(x, (int, float, np.number)) and not isinstance(x, bool)


def _write(v, indent: int, level: int, out: list) -> None:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(v, bool) or v is None or isinstance(v, str):
        out.append(json.dumps(v))
    elif isinstance(v, (int, np.integer)):
        out.append(str(int(v)))
    elif isinstance(v, (float, np.floating)):
        out.append(_float_text(float(v)))
    elif isinstance(v, dict):
        if not v:
            out.append("{}")
            return
        out.append("{\n")
        for i, (k, x) in enumerate(v.items()):
            out.append(pad + json.dumps(str(k)) + ": ")
            _write(x, indent, level + 1, out)
            out.append(",\n" if i < len(v) - 1 else "\n")
        out.append(end + "}")
    elif isinstance(v, (list, tuple)):
        if not v:
            out.append("[]")
            return
        if all(_is_num(x) or (isinstance(x, list) and all(map(_is_num, x))) for x in v):
            out.append("[")
            for i, x in enumerate(v):
                _write(x, indent, level + 1, out)
                if i < len(v) - 1:
                    out.append(", ")
            out.append("]")
            return
        out.append("[\n")
        for i, x in enumerate(v):
            out.append(pad)
            _write(x, indent, level + 1, out)
            out.append(",\n" if i < len(v) - 1 else "\n")
        out.append(end + "]")
    else:
        raise TypeError(f"cannot serialise {type(v).__name__}")


def dumps(doc, indent: int = 2) -> str:
    """Deterministic JSON text (17 significant digits for floats)."""
    out: list[str] = []
    _write(doc, indent, 0, out)
    return "".join(out) + "\n"


def loads(text: str):
    return json.loads(text)
