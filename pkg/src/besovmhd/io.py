"""Snapshot files, JSON/CSV output and a minimal SVG line chart."""

from __future__ import annotations

import json
import math
import os
from pathlib import Path
from typing import Mapping, Sequence
from xml.sax.saxutils import escape

import numpy as np

from .fields import Grid, SpectralField

__all__ = [
    "MAGIC",
    "SCHEMA_VERSION",
    "write_snapshot",
    "read_snapshot",
    "write_json",
    "write_text",
    "svg_line_chart",
]

MAGIC = b"BESOVMHD-SNAPSHOT 1\n"
SCHEMA_VERSION = "1.0"


def write_snapshot(path, fields: Mapping[str, SpectralField]) -> None:
    """Write named fields to one file.

    Layout: the magic line, then per record a one-line JSON header
    ``{name, d, n, L, components, zero_mean}`` followed by the coefficients as
    little-endian float64 ``(re, im)`` pairs in row-major FFT index order.
    """
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        for name, f in fields.items():
            g = f.grid
            header = {"name": name, "d": g.d, "n": g.n, "L": g.L, "components": f.components,
                      "zero_mean": f.zero_mean}
            fh.write(json.dumps(header, sort_keys=True).encode() + b"\n")
            data = np.ascontiguousarray(f.coeffs, dtype="<c16")
            fh.write(data.tobytes(order="C"))


def read_snapshot(path) -> dict[str, SpectralField]:
    with open(path, "rb") as fh:
        if fh.readline() != MAGIC:
            raise ValueError(f"{path}: not a field snapshot")
        out = {}
        while True:
            line = fh.readline()
            if not line:
                return out
            h = json.loads(line)
            grid = Grid(h["d"], h["n"], h["L"])
            shape = (h["components"],) + grid.shape
            nbytes = 16 * int(np.prod(shape))
            raw = fh.read(nbytes)
            if len(raw) != nbytes:
                raise ValueError(f"{path}: truncated record {h['name']!r}")
            coeffs = np.frombuffer(raw, dtype="<c16").reshape(shape)
            out[h["name"]] = SpectralField(grid, coeffs, zero_mean=h["zero_mean"])


def _clean(obj):
    """JSON-safe copy: infinities become the string ``"inf"``, numpy scalars become Python ones."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        if math.isnan(v):
            return "nan"
        return v
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    return obj


def write_json(path, payload: dict) -> str:
    text = json.dumps(_clean(payload), indent=2, sort_keys=True) + "\n"
    write_text(path, text)
    return text


def write_text(path, text: str) -> None:
    """Write through a temporary file so a failed run never leaves a partial output."""
    path = Path(path)
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def svg_line_chart(series: Mapping[str, tuple[Sequence[float], Sequence[float]]], title: str = "",
                   width: int = 640, height: int = 400, logy: bool = False) -> str:
    """Standalone SVG with one polyline per series; data also embedded as ``<desc>`` JSON."""
    pad = 50
    xs = [float(x) for xv, _ in series.values() for x in xv]
    ys = [float(y) for _, yv in series.values() for y in yv]
    tf = (lambda y: math.log10(y) if y > 0 else -300.0) if logy else (lambda y: y)
    ys_t = [tf(y) for y in ys] or [0.0]
    x0, x1 = (min(xs), max(xs)) if xs else (0.0, 1.0)
    y0, y1 = min(ys_t), max(ys_t)
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y1 = y0 + 1.0

    def px(x):
        return pad + (x - x0) / (x1 - x0) * (width - 2 * pad)

    def py(y):
        return height - pad - (tf(y) - y0) / (y1 - y0) * (height - 2 * pad)

    colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
        f"<title>{escape(title)}</title>",
        f"<desc>{escape(json.dumps(_clean({k: [list(v[0]), list(v[1])] for k, v in series.items()})))}</desc>",
        f'<rect x="{pad}" y="{pad}" width="{width - 2 * pad}" height="{height - 2 * pad}" fill="none" stroke="#444"/>',
        f'<text x="{width / 2}" y="{pad / 2}" text-anchor="middle" font-size="14">{escape(title)}</text>',
        f'<text x="{pad}" y="{height - pad / 3}" font-size="11">{x0:.4g}</text>',
        f'<text x="{width - pad}" y="{height - pad / 3}" text-anchor="end" font-size="11">{x1:.4g}</text>',
    ]
    for i, (name, (xv, yv)) in enumerate(series.items()):
        col = colors[i % len(colors)]
        pts = " ".join(f"{px(float(x)):.2f},{py(float(y)):.2f}" for x, y in zip(xv, yv))
        parts.append(f'<polyline fill="none" stroke="{col}" stroke-width="1.5" points="{pts}"/>')
        parts.append(f'<text x="{width - pad + 4}" y="{pad + 14 * (i + 1)}" font-size="11" fill="{col}">{escape(name)}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
