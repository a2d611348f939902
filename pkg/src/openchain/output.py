"""CSV trajectories, summary tables, run manifests and SVG line charts."""

from __future__ import annotations

import csv
import json
import math
import os
from pathlib import Path
from typing import Sequence

import numpy as np

from .dynamics import COLUMNS, TrajectoryRecord
from .errors import InputError, OutputError


def fmt(x) -> str:
    """Shortest round-trip decimal (``repr``), independent of locale."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(x)


def write_text(path: Path, text: str) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc.strerror or exc}") from exc


def write_csv(record: TrajectoryRecord, path) -> None:
    if len(record) == 0:
        raise InputError("refusing to write an empty trajectory")
    lines = [",".join(COLUMNS)]
    lines += [",".join(fmt(v) for v in row) for row in record.rows()]
    write_text(Path(path), "\n".join(lines) + "\n")


def read_csv(path) -> dict[str, np.ndarray]:
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror or exc}") from exc
    if len(rows) < 2:
        raise InputError(f"{path}: no data rows")
    header, body = rows[0], rows[1:]
    try:
        data = np.array([[float(v) for v in r] for r in body])
    except ValueError as exc:
        raise InputError(f"{path}: non-numeric entry ({exc})") from exc
    return {name: data[:, i] for i, name in enumerate(header)}


def write_table(rows: Sequence[dict], columns: Sequence[str], path) -> None:
    lines = [",".join(columns)]
    for r in rows:
        lines.append(",".join(fmt(r[c]) if not isinstance(r[c], str) else r[c] for c in columns))
    write_text(Path(path), "\n".join(lines) + "\n")


def write_manifest(manifest: dict, path) -> None:
    write_text(Path(path), json.dumps(manifest, indent=2, sort_keys=True, default=_json_default) + "\n")


def _json_default(x):
    if isinstance(x, float) and math.isinf(x):
        return "inf"
    if isinstance(x, (np.integer, np.floating)):
        return x.item()
    raise TypeError(f"not serializable: {type(x).__name__}")


def jsonable_config(d: dict) -> dict:
    return {k: ("inf" if isinstance(v, float) and math.isinf(v) else v) for k, v in d.items()}


# -- SVG -----------------------------------------------------------------------

_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#7f7f7f")
_W, _H = 640, 400
_ML, _MR, _MT, _MB = 70, 20, 20, 50


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    span = hi - lo
    raw = span / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=raw)
    first = math.ceil(lo / step) * step
    out, v = [], first
    while v <= hi + 1e-12 * span:
        out.append(0.0 if abs(v) < 1e-12 * span else v)
        v += step
    return out


def emit_plot(record_paths: Sequence, out, quantity: str = "TMI", labels: Sequence[str] | None = None) -> None:
    """Standalone SVG line chart of ``quantity`` against ``t``, one line per CSV."""
    if not record_paths:
        raise InputError("no CSV files given")
    series = []
    for p in record_paths:
        data = read_csv(p)
        if quantity not in data:
            raise InputError(f"{p}: no column {quantity!r}")
        series.append((data["t"], data[quantity]))
    t0 = series[0][0]
    for p, (t, _) in zip(record_paths, series):
        if t.shape != t0.shape or np.max(np.abs(t - t0)) > 1e-12:
            raise InputError(f"{p}: time grid differs from {record_paths[0]}")
    names = list(labels) if labels else [Path(p).stem for p in record_paths]

    ys = np.concatenate([y for _, y in series])
    ylo, yhi = float(min(ys.min(), 0.0)), float(max(ys.max(), 0.0))
    if yhi - ylo < 1e-12:
        ylo, yhi = ylo - 1.0, yhi + 1.0
    pad = 0.05 * (yhi - ylo)
    ylo, yhi = ylo - pad, yhi + pad
    xlo, xhi = float(t0[0]), float(t0[-1]) if t0[-1] > t0[0] else float(t0[0]) + 1.0
    pw, ph = _W - _ML - _MR, _H - _MT - _MB

    def X(t):
        return _ML + (t - xlo) / (xhi - xlo) * pw

    def Y(v):
        return _MT + (yhi - v) / (yhi - ylo) * ph

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" viewBox="0 0 {_W} {_H}">',
        f'<rect x="0" y="0" width="{_W}" height="{_H}" fill="white"/>',
        f'<rect x="{_ML}" y="{_MT}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    for tv in _ticks(xlo, xhi):
        x = X(tv)
        parts.append(f'<line x1="{x:.2f}" y1="{_MT + ph}" x2="{x:.2f}" y2="{_MT + ph + 5}" stroke="black"/>')
        parts.append(f'<text x="{x:.2f}" y="{_MT + ph + 18}" font-size="11" text-anchor="middle">{tv:g}</text>')
    for yv in _ticks(ylo, yhi):
        y = Y(yv)
        parts.append(f'<line x1="{_ML - 5}" y1="{y:.2f}" x2="{_ML}" y2="{y:.2f}" stroke="black"/>')
        parts.append(f'<text x="{_ML - 8}" y="{y + 4:.2f}" font-size="11" text-anchor="end">{yv:g}</text>')
    parts.append(
        f'<line class="zero" x1="{_ML}" y1="{Y(0.0):.2f}" x2="{_ML + pw}" y2="{Y(0.0):.2f}" '
        'stroke="gray" stroke-dasharray="4 3"/>'
    )
    parts.append(f'<text x="{_ML + pw / 2}" y="{_H - 10}" font-size="13" text-anchor="middle">t</text>')
    parts.append(
        f'<text x="16" y="{_MT + ph / 2}" font-size="13" text-anchor="middle" '
        f'transform="rotate(-90 16 {_MT + ph / 2})">{_escape(quantity)}</text>'
    )
    for i, ((t, y), name) in enumerate(zip(series, names)):
        color = _PALETTE[i % len(_PALETTE)]
        pts = " ".join(f"{X(a):.2f},{Y(b):.2f}" for a, b in zip(t, y))
        parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        ly = _MT + 16 + 16 * i
        parts.append(f'<line x1="{_ML + pw - 150}" y1="{ly - 4}" x2="{_ML + pw - 130}" y2="{ly - 4}" stroke="{color}" stroke-width="2"/>')
        parts.append(f'<text x="{_ML + pw - 125}" y="{ly}" font-size="11">{_escape(name)}</text>')
    parts.append("</svg>")
    write_text(Path(out), "\n".join(parts) + "\n")


def _escape(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def ensure_dir(path) -> Path:
    p = Path(path)
    try:
        p.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OutputError(f"cannot create {p}: {exc.strerror or exc}") from exc
    if not os.access(p, os.W_OK):
        raise OutputError(f"{p} is not writable")
    return p
