"""Self-describing JSON documents for operators, matrices and presentations.

Complex arrays are stored row-major as lists of ``[re, im]`` pairs.  Reports
are written with sorted keys and 17 significant digits so that equal inputs
give byte-identical output.
"""

from __future__ import annotations

import hashlib
import json
import math

import numpy as np

from .builder import WhaPresentation
from .errors import WeakHopfError


class FormatError(WeakHopfError):
    """Unreadable, truncated or inconsistent input document."""


# --------------------------------------------------------------------------
# complex arrays


def encode_array(a) -> list:
    """Nested ``[re, im]`` lists with the shape of ``a``."""
    a = np.asarray(a, dtype=complex)
    if a.ndim == 0:
        return [float(a.real), float(a.imag)]
    return [encode_array(x) for x in a]


def encode_flat(a) -> list:
    return [[float(z.real), float(z.imag)] for z in np.asarray(a, dtype=complex).ravel()]


def _pairs(data, count: int, what: str) -> np.ndarray:
    if not isinstance(data, list):
        raise FormatError(f"{what}: data must be a list of [re, im] pairs")
    if len(data) != count:
        raise FormatError(f"{what}: expected {count} entries, found {len(data)}")
    try:
        arr = np.array(data, dtype=float)
    except (TypeError, ValueError) as exc:
        raise FormatError(f"{what}: entries must be numeric [re, im] pairs") from exc
    if arr.shape != (count, 2):
        raise FormatError(f"{what}: entries must be [re, im] pairs")
    if not np.all(np.isfinite(arr)):
        raise FormatError(f"{what}: non-finite number")
    return arr[:, 0] + 1j * arr[:, 1]


def decode_array(data, shape: tuple, what: str) -> np.ndarray:
    """Inverse of :func:`encode_array` with shape validation."""
    try:
        arr = np.array(data, dtype=float)
    except (TypeError, ValueError) as exc:
        raise FormatError(f"{what}: expected nested numeric [re, im] pairs") from exc
    if arr.shape != tuple(shape) + (2,):
        raise FormatError(f"{what}: expected nested shape {tuple(shape)} of [re, im] pairs")
    if not np.all(np.isfinite(arr)):
        raise FormatError(f"{what}: non-finite number")
    return arr[..., 0] + 1j * arr[..., 1]


# --------------------------------------------------------------------------
# documents


def operator2_doc(v, d: int) -> dict:
    return {"kind": "operator2", "dim": int(d), "data": encode_flat(v)}


def matrix_doc(m) -> dict:
    m = np.asarray(m, dtype=complex)
    return {"kind": "matrix", "rows": m.shape[0], "cols": m.shape[1], "data": encode_flat(m)}


PRESENTATION_FIELDS = ("mult", "delta", "counit", "antipode", "star", "unit", "haar")


def presentation_doc(p: WhaPresentation) -> dict:
    doc = {"kind": "presentation", "n": p.n, "labels": list(p.labels)}
    for name in PRESENTATION_FIELDS:
        doc[name] = encode_array(getattr(p, name))
    return doc


def _int_field(doc: dict, key: str, what: str) -> int:
    value = doc.get(key)
    if not isinstance(value, int) or isinstance(value, bool) or value < 1:
        raise FormatError(f"{what}: field {key!r} must be a positive integer")
    return value


def parse_document(doc) -> tuple[str, object]:
    """Validate a decoded document; returns ``(kind, payload)``.

    The payload is ``(d, V)`` for ``operator2``, an ndarray for ``matrix``
    and a :class:`WhaPresentation` for ``presentation``.
    """
    if not isinstance(doc, dict):
        raise FormatError("document must be a JSON object")
    kind = doc.get("kind")
    if kind == "operator2":
        d = _int_field(doc, "dim", kind)
        n = d * d
        v = _pairs(doc.get("data"), n * n, f"operator2 of dim {d}").reshape(n, n)
        return kind, (d, v)
    if kind == "matrix":
        r, c = _int_field(doc, "rows", kind), _int_field(doc, "cols", kind)
        return kind, _pairs(doc.get("data"), r * c, f"matrix {r}x{c}").reshape(r, c)
    if kind == "presentation":
        n = _int_field(doc, "n", kind)
        labels = doc.get("labels", [f"b{i}" for i in range(n)])
        if not isinstance(labels, list) or len(labels) != n:
            raise FormatError("presentation: one label per basis element required")
        shapes = {
            "mult": (n, n, n), "delta": (n, n, n), "counit": (n,), "antipode": (n, n),
            "star": (n, n), "unit": (n,), "haar": (n,),
        }
        fields = {}
        for name, shape in shapes.items():
            if name not in doc:
                raise FormatError(f"presentation: missing field {name!r}")
            fields[name] = decode_array(doc[name], shape, f"presentation.{name}")
        return kind, WhaPresentation(n=n, labels=[str(x) for x in labels], **fields)
    raise FormatError(f"unknown document kind {kind!r}")


def read_document(path: str) -> tuple[str, object, str]:
    """Read and validate a file; returns ``(kind, payload, sha256 of the bytes)``."""
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc.strerror}") from exc
    digest = hashlib.sha256(raw).hexdigest()
    try:
        doc = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"{path}: not valid JSON ({exc})") from exc
    kind, payload = parse_document(doc)
    return kind, payload, digest


# --------------------------------------------------------------------------
# canonical serialisation


def format_float(x: float) -> str:
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    if x == 0.0:
        return "0.0"
    s = format(x, ".17g")
    # keep floats recognisable as floats
    if all(ch not in s for ch in ".en"):
        s += ".0"
    return s


def canonical_dumps(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON with sorted keys and 17-significant-digit floats."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {canonical_dumps(obj[k], indent, _level + 1)}"
                 for k in sorted(obj, key=str)]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(x, (dict, list, tuple)) for x in obj):
            return "[" + ", ".join(canonical_dumps(x, indent, _level + 1) for x in obj) + "]"
        items = [pad + canonical_dumps(x, indent, _level + 1) for x in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return format_float(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def flatten(obj, prefix: str = "") -> list[tuple[str, object]]:
    """``(dotted.key, leaf)`` pairs in sorted key order."""
    if isinstance(obj, dict):
        out = []
        for k in sorted(obj, key=str):
            out.extend(flatten(obj[k], f"{prefix}.{k}" if prefix else str(k)))
        return out
    return [(prefix, obj)]


def text_dumps(obj) -> str:
    lines = []
    for key, value in flatten(obj):
        if isinstance(value, (list, tuple)):
            value = "[" + ", ".join(canonical_dumps(x) for x in value) + "]"
        elif isinstance(value, str):
            pass
        else:
            value = canonical_dumps(value)
        lines.append(f"{key}: {value}")
    return "\n".join(lines)
