"""Reading and writing matrices and triangles as JSON or CSV.

A complex matrix is ``{"n": n, "re": [[...]], "im": [[...]]}`` with row-major
nested lists; a triangle is ``{"n": n, "rows": [[R11], [R12, R22], ...]}``.
A sample file wraps a list of either under ``"samples"``. CSV output has one
sample per line with columns ``re_i_j``/``im_i_j`` (matrices) or ``R_i_j``
(triangles), 1-based, written with 17 significant digits.
"""

import csv
import io as _io
import json

import numpy as np

from .polytope import RayleighTriangle, _infer_n

_NUMBER_MATRIX = {"type": "array", "items": {"type": "array", "items": {"type": "number"}}}

MATRIX_SCHEMA = {
    "type": "object",
    "required": ["n", "re", "im"],
    "properties": {"n": {"type": "integer", "minimum": 1}, "re": _NUMBER_MATRIX, "im": _NUMBER_MATRIX},
}

TRIANGLE_SCHEMA = {
    "type": "object",
    "required": ["n", "rows"],
    "properties": {"n": {"type": "integer", "minimum": 1}, "rows": _NUMBER_MATRIX},
}

SAMPLES_SCHEMA = {
    "type": "object",
    "required": ["kind", "samples"],
    "properties": {
        "kind": {"enum": ["matrix", "triangle"]},
        "samples": {"type": "array"},
        "meta": {"type": "object"},
    },
}


class ParseError(ValueError):
    """Malformed input file; the message names the file and the offending location."""


def matrix_to_dict(M):
    M = np.asarray(M, dtype=complex)
    return {"n": int(M.shape[0]), "re": M.real.tolist(), "im": M.imag.tolist()}


def triangle_to_dict(P):
    if not isinstance(P, RayleighTriangle):
        flat = np.asarray(P, dtype=float).reshape(-1)
        P = RayleighTriangle(_infer_n(flat.size), flat)
    return {"n": P.n, "rows": [row.tolist() for row in P.rows]}


def _square(value, n, where):
    arr = np.asarray(value, dtype=float) if isinstance(value, list) else None
    if arr is None or arr.shape != (n, n):
        raise ParseError(f"{where}: expected an {n}x{n} array of numbers")
    return arr


def matrix_from_dict(data, where="<input>"):
    if not isinstance(data, dict):
        raise ParseError(f"{where}: expected an object with keys n, re, im")
    for key in ("n", "re"):
        if key not in data:
            raise ParseError(f"{where}: missing key {key!r}")
    n = data["n"]
    if not isinstance(n, int) or n < 1:
        raise ParseError(f"{where}.n: expected a positive integer")
    try:
        re = _square(data["re"], n, f"{where}.re")
        im = _square(data["im"], n, f"{where}.im") if "im" in data else np.zeros((n, n))
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ParseError):
            raise
        raise ParseError(f"{where}: non-numeric entry") from exc
    return re + 1j * im


def triangle_from_dict(data, where="<input>"):
    if not isinstance(data, dict) or "n" not in data or "rows" not in data:
        raise ParseError(f"{where}: expected an object with keys n, rows")
    n, rows = data["n"], data["rows"]
    if not isinstance(n, int) or n < 1 or not isinstance(rows, list) or len(rows) != n:
        raise ParseError(f"{where}: expected n rows")
    for j, row in enumerate(rows, start=1):
        if not isinstance(row, list) or len(row) != j:
            raise ParseError(f"{where}.rows[{j - 1}]: expected {j} entries")
    try:
        return RayleighTriangle.from_rows([[float(v) for v in row] for row in rows])
    except (TypeError, ValueError) as exc:
        raise ParseError(f"{where}.rows: non-numeric entry") from exc


def _load_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    except OSError as exc:
        raise ParseError(f"{path}: {exc.strerror}") from exc


def load_matrix(path):
    """Read one complex matrix (or the first entry of a sample file)."""
    data = _load_json(path)
    if isinstance(data, dict) and "samples" in data:
        if not data["samples"]:
            raise ParseError(f"{path}: empty sample list")
        return matrix_from_dict(data["samples"][0], f"{path}:samples[0]")
    return matrix_from_dict(data, path)


def load_triangles(path):
    """Read a triangle or a sample file of triangles; returns a list of :class:`RayleighTriangle`."""
    data = _load_json(path)
    if isinstance(data, dict) and "samples" in data:
        return [triangle_from_dict(t, f"{path}:samples[{i}]") for i, t in enumerate(data["samples"])]
    return [triangle_from_dict(data, path)]


def _fmt(x):
    return "%.17g" % x


def matrices_to_json(Ms, meta=None):
    doc = {"kind": "matrix", "samples": [matrix_to_dict(M) for M in Ms]}
    if meta:
        doc["meta"] = meta
    return json.dumps(doc)


def triangles_to_json(Ps, meta=None):
    doc = {"kind": "triangle", "samples": [triangle_to_dict(P) for P in Ps]}
    if meta:
        doc["meta"] = meta
    return json.dumps(doc)


def matrices_to_csv(Ms):
    Ms = np.asarray(Ms, dtype=complex)
    n = Ms.shape[-1]
    idx = [(i, j) for i in range(1, n + 1) for j in range(1, n + 1)]
    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([f"re_{i}_{j}" for i, j in idx] + [f"im_{i}_{j}" for i, j in idx])
    for M in Ms:
        writer.writerow([_fmt(v) for v in M.real.reshape(-1)] + [_fmt(v) for v in M.imag.reshape(-1)])
    return buf.getvalue()


def matrices_from_csv(text):
    rows = list(csv.reader(_io.StringIO(text)))
    header, body = rows[0], rows[1:]
    n = int(round(np.sqrt(len(header) / 2)))
    if 2 * n * n != len(header):
        raise ParseError("csv header does not describe square matrices")
    data = np.array(body, dtype=float).reshape(len(body), 2, n, n)
    return data[:, 0] + 1j * data[:, 1]


def triangles_to_csv(flat):
    flat = np.atleast_2d(np.asarray(flat, dtype=float))
    n = _infer_n(flat.shape[1])
    names = [f"R_{i}_{j}" for j in range(1, n + 1) for i in range(1, j + 1)]
    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(names)
    for row in flat:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def series_to_csv(columns):
    """CSV text for a dict of equal-length 1-D series (plotting output)."""
    names = list(columns)
    data = np.column_stack([np.asarray(columns[k], dtype=float) for k in names])
    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(names)
    for row in data:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()
