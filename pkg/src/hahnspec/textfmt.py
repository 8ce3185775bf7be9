"""Textual formats for series, vectors, matrices and operators.

Series grammar (whitespace insignificant)::

    series := ["-"] term (("+" | "-") term)* ["(prec" INT ")"]
    term   := rational ["*t" ["^" INT]]  |  "t" ["^" INT]
    rational := INT ["/" INT]

A series without the ``(prec N)`` suffix is exact.  Examples:
``1 + 1/2*t - 1/8*t^2 (prec 32)``, ``t^-1``, ``0 (prec 7)``.

Vectors are ``{1: 1, 2: 1/2*t}`` (1-based index -> series).  Matrices and
operators are JSON objects whose scalars are series strings::

    {"block": [["1", "t"], ["t", "2"]], "tail": [[3, "t^3"]]}
"""

from __future__ import annotations

import json
import re

from gmpy2 import mpq

from .errors import ParseError
from .scalars import INFINITE, LaurentSeries, ONE

_PREC = re.compile(r"\(\s*prec\s+(-?\d+)\s*\)\s*$")
_TERM = re.compile(
    r"""\s*(?P<sign>[+-])?\s*
        (?:
          (?P<coef>\d+(?:\s*/\s*\d+)?)(?:\s*\*\s*t(?:\s*\^\s*(?P<e1>-?\d+))?)?
          |
          (?P<tonly>t)(?:\s*\^\s*(?P<e2>-?\d+))?
        )\s*""",
    re.VERBOSE,
)


def parse_series(text: str) -> LaurentSeries:
    s = text.strip()
    prec = INFINITE
    m = _PREC.search(s)
    if m:
        prec = int(m.group(1))
        s = s[: m.start()].strip()
    if not s:
        raise ParseError(f"empty series in {text!r}")
    coeffs = {}
    pos = 0
    first = True
    while pos < len(s):
        m = _TERM.match(s, pos)
        if not m or m.end() == pos:
            raise ParseError(f"cannot parse series {text!r} at offset {pos}")
        sign = m.group("sign")
        if sign is None and not first:
            raise ParseError(f"missing operator in {text!r} at offset {pos}")
        if m.group("coef") is not None:
            num, _, den = m.group("coef").replace(" ", "").partition("/")
            if den and int(den) == 0:
                raise ParseError(f"zero denominator in {text!r}")
            coef = mpq(int(num), int(den) if den else 1)
            if "t" in m.group(0):
                exp = int(m.group("e1")) if m.group("e1") is not None else 1
            else:
                exp = 0
        elif m.group("tonly"):
            coef = ONE
            exp = int(m.group("e2")) if m.group("e2") is not None else 1
        else:
            raise ParseError(f"cannot parse series {text!r} at offset {pos}")
        if sign == "-":
            coef = -coef
        coeffs[exp] = coeffs.get(exp, 0) + coef
        pos = m.end()
        first = False
    return LaurentSeries(coeffs, prec)


def _fmt_q(q) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def format_series(f: LaurentSeries) -> str:
    parts = []
    for e, q in f.terms():
        mag = abs(q)
        if e == 0:
            body = _fmt_q(mag)
        else:
            power = "t" if e == 1 else f"t^{e}"
            body = power if mag == 1 else f"{_fmt_q(mag)}*{power}"
        if not parts:
            parts.append(("-" if q < 0 else "") + body)
        else:
            parts.append(("- " if q < 0 else "+ ") + body)
    out = " ".join(parts) if parts else "0"
    if f.prec != INFINITE:
        out += f" (prec {f.prec})"
    return out


def parse_vector(text: str):
    from .linalg import VectorC0

    s = text.strip()
    if not (s.startswith("{") and s.endswith("}")):
        raise ParseError(f"vector must be enclosed in braces: {text!r}")
    body = s[1:-1].strip()
    entries = {}
    if body:
        for item in _split_top(body):
            idx, sep, val = item.partition(":")
            if not sep:
                raise ParseError(f"bad vector entry {item!r}")
            try:
                i = int(idx)
            except ValueError as exc:
                raise ParseError(f"bad index {idx!r}") from exc
            if i < 1:
                raise ParseError("indices are 1-based")
            entries[i] = parse_series(val)
    return VectorC0(entries)


def _split_top(body: str):
    # commas inside "(prec N)" never occur, so a plain split is enough
    return [p for p in (x.strip() for x in body.split(",")) if p]


def format_vector(x) -> str:
    inner = ", ".join(f"{i}: {format_series(s)}" for i, s in sorted(x.entries.items()))
    return "{" + inner + "}"


def _series_cell(v) -> LaurentSeries:
    if isinstance(v, int):
        return LaurentSeries.const(v)
    if isinstance(v, str):
        return parse_series(v)
    raise ParseError(f"matrix entries must be series strings, got {v!r}")


def parse_matrix_json(text: str):
    """Square matrix of series from ``{"block": [[...], ...]}`` (or ``"matrix"``)."""
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise ParseError("expected a JSON object")
    rows = obj.get("block", obj.get("matrix"))
    if not isinstance(rows, list) or not all(isinstance(r, list) for r in rows):
        raise ParseError("missing 'block' list of rows")
    n = len(rows)
    if any(len(r) != n for r in rows):
        raise ParseError("matrix must be square")
    return [[_series_cell(v) for v in r] for r in rows]


def parse_operator_json(text: str):
    from .operators import OperatorC0

    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise ParseError("expected a JSON object")
    rows = obj.get("block", [])
    if not isinstance(rows, list) or any(not isinstance(r, list) or len(r) != len(rows) for r in rows):
        raise ParseError("'block' must be a square list of rows")
    block = [[_series_cell(v) for v in r] for r in rows]
    tail = []
    for item in obj.get("tail", []):
        if not (isinstance(item, list) and len(item) == 2 and isinstance(item[0], int)):
            raise ParseError(f"bad tail item {item!r}")
        tail.append((item[0], _series_cell(item[1])))
    shift = _series_cell(obj["shift"]) if "shift" in obj else None
    try:
        return OperatorC0(block, tail, shift)
    except ValueError as exc:
        raise ParseError(str(exc)) from exc


def format_matrix_json(rows) -> str:
    return json.dumps({"block": [[format_series(v) for v in r] for r in rows]})


def format_operator_json(op) -> str:
    obj = {"block": [[format_series(v) for v in r] for r in op.block]}
    if op.tail:
        obj["tail"] = [[i, format_series(s)] for i, s in op.tail]
    if not op.shift.is_zero() or not op.shift.is_exact:
        obj["shift"] = format_series(op.shift)
    return json.dumps(obj)
