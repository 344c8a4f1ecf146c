"""JSON encoding of complex matrices and the on-disk document shapes.

A matrix is a row-major list of rows and every entry is ``[re, im]``.
Python's float repr round-trips doubles exactly, so encode/decode is
bit-identical.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .errors import ParseError


def encode_matrix(a) -> list:
    a = np.asarray(a, dtype=np.complex128)
    return [[[float(z.real), float(z.imag)] for z in row] for row in a]


def decode_matrix(obj, location: str = "", shape: tuple[int | None, int | None] = (None, None)) -> np.ndarray:
    """Decode a matrix, checking it is rectangular and matches ``shape``.

    A ``None`` in ``shape`` leaves that extent free; with the default the
    matrix must be square.  Row and entry numbers in messages count from 1.
    """
    if not isinstance(obj, list) or not obj:
        raise ParseError("matrix must be a non-empty list of rows", location)
    rows, cols = shape
    if rows is not None and len(obj) != rows:
        raise ParseError(f"{len(obj)} rows ≠ expected {rows}", location)
    if cols is None:
        cols = len(obj) if shape == (None, None) else None
    out = []
    for r, row in enumerate(obj, start=1):
        if not isinstance(row, list):
            raise ParseError(f"row {r} is not a list", location)
        if cols is None:
            cols = len(row)
        if len(row) != cols:
            raise ParseError(f"row {r} length {len(row)} ≠ dim {cols}", location)
        decoded = []
        for c, entry in enumerate(row, start=1):
            if (
                not isinstance(entry, list)
                or len(entry) != 2
                or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in entry)
            ):
                raise ParseError(f"entry ({r}, {c}) must be [re, im]", location)
            if not all(math.isfinite(x) for x in entry):
                raise ParseError(f"entry ({r}, {c}) is not finite", location)
            decoded.append(complex(entry[0], entry[1]))
        out.append(decoded)
    return np.array(out, dtype=np.complex128)


def loads(text: str, location: str = "") -> dict:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}", location) from exc
    if not isinstance(doc, dict):
        raise ParseError("top-level value must be an object", location)
    return doc


def require(doc: dict, key: str, kind, location: str = ""):
    if key not in doc:
        raise ParseError(f"missing key {key!r}", location)
    value = doc[key]
    if kind is int:
        ok = isinstance(value, int) and not isinstance(value, bool)
    else:
        ok = isinstance(value, kind)
    if not ok:
        raise ParseError(f"{key!r} has wrong type {type(value).__name__}", location)
    return value


def number_list(values, location: str) -> list[float]:
    if not isinstance(values, list):
        raise ParseError("expected a list of numbers", location)
    out = []
    for k, x in enumerate(values):
        if not isinstance(x, (int, float)) or isinstance(x, bool) or not math.isfinite(x):
            raise ParseError(f"entry {k} is not a finite number", location)
        out.append(float(x))
    return out


def read_text(path) -> str:
    return Path(path).read_text(encoding="utf-8")


def write_json(path, doc) -> None:
    Path(path).write_text(json.dumps(doc, indent=1) + "\n", encoding="utf-8")


def dumps(doc) -> str:
    return json.dumps(doc, indent=1)
