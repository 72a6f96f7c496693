"""CSV codec for sweep rows and small JSON helpers."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import fields
from pathlib import Path

from .errors import MalformedRowError
from .resonance import STATUSES
from .sweep import FitResult, SweepRow

HEADER = ("F", "B", "b", "Nx", "Ny", "e_alpha", "re_E", "im_E", "Gamma", "tau",
          "delta_b", "delta_N", "continuum_gap", "status")
_INT_FIELDS = {"Nx", "Ny"}

assert HEADER == tuple(f.name for f in fields(SweepRow))


def _fmt(name: str, v) -> str:
    if name == "status":
        return v
    if name in _INT_FIELDS:
        return str(int(v))
    return "%.17g" % float(v)


def format_results(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(HEADER)
    for r in rows:
        w.writerow([_fmt(n, getattr(r, n)) for n in HEADER])
    return buf.getvalue()


def write_results(rows, path) -> None:
    """Write rows as CSV with the fixed header; floats keep 17 significant digits."""
    Path(path).write_text(format_results(rows), encoding="utf-8")


def parse_results(text: str) -> list[SweepRow]:
    """Inverse of :func:`format_results`.

    Raises
    ------
    MalformedRowError
        With the 1-based line number of the first bad line.
    """
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise MalformedRowError("empty file, header missing", 1) from None
    if tuple(header) != HEADER:
        raise MalformedRowError(f"unexpected header {header!r}", 1)
    rows = []
    for line_no, rec in enumerate(reader, start=2):
        if not rec:
            continue
        if len(rec) != len(HEADER):
            raise MalformedRowError(f"expected {len(HEADER)} fields, got {len(rec)}", line_no)
        vals = {}
        for name, raw in zip(HEADER, rec):
            try:
                if name == "status":
                    if raw not in STATUSES:
                        raise ValueError(f"unknown status {raw!r}")
                    vals[name] = raw
                elif name in _INT_FIELDS:
                    vals[name] = int(raw)
                else:
                    vals[name] = float(raw)
            except ValueError as exc:
                raise MalformedRowError(f"field {name}: {exc}", line_no) from None
        rows.append(SweepRow(**vals))
    return rows


def read_results(path) -> list[SweepRow]:
    return parse_results(Path(path).read_text(encoding="utf-8"))


def plot_data(rows, fit: FitResult) -> str:
    """``(F^-p, ln Gamma)`` pairs of the rows used by ``fit`` as CSV text."""
    lines = ["B,F,inv_F_p,ln_gamma"]
    for r in rows:
        if r.status == "ok" and r.Gamma > 0 and (fit.B is None or r.B == fit.B):
            lines.append("%.17g,%.17g,%.17g,%.17g" % (r.B, r.F, r.F ** -fit.p, math.log(r.Gamma)))
    return "\n".join(lines) + "\n"


def _json_default(o):
    if isinstance(o, complex):
        return [o.real, o.imag]
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def _clean(o):
    if isinstance(o, float) and not math.isfinite(o):
        return repr(o)  # "inf", "nan"
    if isinstance(o, dict):
        return {k: _clean(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_clean(v) for v in o]
    return o


def dumps(obj) -> str:
    """JSON text with non-finite floats spelled as strings (strict JSON)."""
    return json.dumps(_clean(obj), indent=2, default=_json_default) + "\n"
