"""CSV / JSON / SVG serialization with atomic writes.

Floats are written with 17 significant digits, which round-trips every
double exactly.  CSV metadata (when present) precedes the header as
``# key=value`` lines.
"""

from __future__ import annotations

import csv
import io as _io
import json
import math
import os
import tempfile
from collections.abc import Iterable, Sequence
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from .errors import DomainError
from .geometry import GraphPatch, PlaneCurve

__all__ = [
    "fmt",
    "write_atomic",
    "csv_text",
    "write_csv",
    "read_csv",
    "json_text",
    "write_json",
    "curve_to_dict",
    "curve_from_dict",
    "svg_text",
    "emit_svg",
]


def fmt(x) -> str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


def write_atomic(path: str | os.PathLike, data: str | bytes) -> Path:
    """Write to a temporary file in the target directory, then rename over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    mode = "wb" if isinstance(data, bytes) else "w"
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, mode, **({} if mode == "wb" else {"encoding": "utf-8", "newline": ""})) as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def csv_text(header: Sequence[str], rows: Iterable[Sequence], meta: dict | None = None) -> str:
    buf = _io.StringIO(newline="")
    for key in sorted(meta or {}):
        buf.write(f"# {key}={meta[key]}\r\n")
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) if isinstance(v, (float, int, np.floating, np.integer)) and not isinstance(v, bool)
                    else v for v in row])
    return buf.getvalue()


def write_csv(path, header, rows, meta=None) -> Path:
    return write_atomic(path, csv_text(header, rows, meta))


def read_csv(path) -> tuple[dict, list[str], np.ndarray]:
    """Return ``(meta, header, data)``; data is a float array of shape (rows, columns)."""
    meta: dict = {}
    lines = []
    with open(path, encoding="utf-8", newline="") as fh:
        for line in fh:
            if line.startswith("#"):
                key, _, val = line[1:].strip().partition("=")
                meta[key.strip()] = val
            elif line.strip():
                lines.append(line)
    if not lines:
        raise DomainError(f"{path}: no header row", "CSV header present")
    reader = csv.reader(lines)
    header = next(reader)
    try:
        data = np.array([[float(v) for v in row] for row in reader], dtype=float)
    except ValueError as exc:
        raise DomainError(f"{path}: non-numeric value ({exc})", "numeric CSV body") from exc
    if data.size == 0:
        data = np.zeros((0, len(header)))
    return meta, header, data


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else fmt(x)
    return obj


def json_text(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"


def write_json(path, obj) -> Path:
    return write_atomic(path, json_text(obj))


def curve_to_dict(curve: PlaneCurve | GraphPatch) -> dict:
    if isinstance(curve, GraphPatch):
        return {"xs": curve.xs, "ys": curve.ys, "time_stamp": curve.time_stamp}
    return {"vertices": curve.vertices, "closed": curve.closed, "time_stamp": curve.time_stamp}


def curve_from_dict(d: dict) -> PlaneCurve | GraphPatch:
    if "xs" in d:
        return GraphPatch(np.array(d["xs"], dtype=float), np.array(d["ys"], dtype=float), float(d["time_stamp"]))
    return PlaneCurve(np.array(d["vertices"], dtype=float), bool(d["closed"]), float(d["time_stamp"]))


# ---------------------------------------------------------------------------
# SVG


def _points(item) -> tuple[np.ndarray, bool]:
    if isinstance(item, GraphPatch):
        return np.column_stack([item.xs, item.ys]), False
    if isinstance(item, PlaneCurve):
        return np.asarray(item.vertices, dtype=float), item.closed
    pts = np.asarray(item, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise DomainError("snapshot must be an (N, 2) array of points", "shape (N, 2)")
    return pts, False


def _colour(i: int, k: int) -> str:
    # early snapshots blue, late ones red
    f = 0.0 if k == 1 else i / (k - 1)
    r, g, b = int(round(30 + 200 * f)), int(round(60 + 20 * (1 - abs(2 * f - 1)))), int(round(200 - 170 * f))
    return f"#{r:02x}{g:02x}{b:02x}"


def _g(x: float) -> str:
    return format(float(x), ".8g")


def svg_text(snapshots: Sequence, bounds: Sequence[Sequence[float]] = (), width: int = 640,
             stroke_width: float | None = None, title: str | None = None) -> str:
    """Standalone SVG: one polyline per snapshot, plus dashed ``bounds`` segments.

    ``bounds`` are ``(x0, y0, x1, y1)`` segments drawn dashed.  The viewBox
    covers all data with a 5% margin; y points up.
    """
    if not snapshots:
        raise DomainError("nothing to draw: no snapshots", "at least one snapshot")
    polys = [_points(s) for s in snapshots]
    allpts = np.vstack([p for p, _ in polys] + [np.reshape(b, (2, 2)) for b in bounds] if bounds else
                       [p for p, _ in polys])
    finite = allpts[np.all(np.isfinite(allpts), axis=1)]
    lo, hi = finite.min(axis=0), finite.max(axis=0)
    span = np.maximum(hi - lo, 1e-12)
    lo, hi = lo - 0.05 * span, hi + 0.05 * span
    w, h = hi - lo
    height = max(1, int(round(width * h / w)))
    sw = stroke_width if stroke_width is not None else 0.004 * max(w, h)
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="{_g(lo[0])} {_g(-hi[1])} {_g(w)} {_g(h)}">',
    ]
    if title:
        out.append(f"<title>{escape(title)}</title>")
    out.append(f'<g fill="none" stroke-width="{_g(sw)}" stroke-linejoin="round">')
    for b in bounds:
        x0, y0, x1, y1 = b
        out.append(f'<line x1="{_g(x0)}" y1="{_g(-y0)}" x2="{_g(x1)}" y2="{_g(-y1)}" stroke="#555555" '
                   f'stroke-dasharray="{_g(4 * sw)} {_g(3 * sw)}"/>')
    for i, (pts, closed) in enumerate(polys):
        tag = "polygon" if closed else "polyline"
        coords = " ".join(f"{_g(x)},{_g(-y)}" for x, y in pts if math.isfinite(x) and math.isfinite(y))
        out.append(f'<{tag} points="{coords}" stroke="{_colour(i, len(polys))}"/>')
    out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_svg(path, snapshots, bounds=(), **kwargs) -> Path:
    return write_atomic(path, svg_text(snapshots, bounds, **kwargs))
