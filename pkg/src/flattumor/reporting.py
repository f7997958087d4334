"""Delimited, JSON and SVG output for the command-line front end."""
from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Iterable, Sequence
from xml.sax.saxutils import escape

import numpy as np

__all__ = ["fmt", "write_csv", "to_jsonable", "dump_json", "write_json", "orbit_svg"]


def fmt(x: float) -> str:
    """17 significant digits: enough to round-trip any double."""
    return format(float(x), ".17g")


def write_csv(path: Path, header: Sequence[str], columns: Iterable[Sequence[float]]) -> None:
    cols = [np.asarray(c, dtype=float) for c in columns]
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in zip(*cols):
            fh.write(",".join(fmt(v) for v in row) + "\n")


def to_jsonable(obj):
    """Plain JSON types; non-finite floats become ``null``."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj


def dump_json(obj) -> str:
    return json.dumps(to_jsonable(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_json(path: Path, obj) -> None:
    Path(path).write_text(dump_json(obj))


def _points(xs, ys, x0, x1, y0, y1, box) -> str:
    left, top, width, height = box
    span_x = (x1 - x0) or 1.0
    span_y = (y1 - y0) or 1.0
    out = []
    for x, y in zip(xs, ys):
        px = left + width * (x - x0) / span_x
        py = top + height * (1.0 - (y - y0) / span_y)
        out.append(f"{px:.2f},{py:.2f}")
    return " ".join(out)


def _padded(values) -> tuple[float, float]:
    lo, hi = float(np.min(values)), float(np.max(values))
    pad = 0.05 * (hi - lo) if hi > lo else 0.05 * max(abs(hi), 1.0)
    return lo - pad, hi + pad


def orbit_svg(t, rho, phi, title: str = "periodic orbit") -> str:
    """Line chart of the orbit (left axis) and the forcing (right axis) over one period.

    The document is self-contained: inline styles, no scripts or external
    references, fixed coordinate precision so identical input gives
    identical bytes.
    """
    W, H = 640, 400
    box = (70.0, 40.0, 500.0, 300.0)
    left, top, width, height = box
    t0, t1 = float(t[0]), float(t[-1])
    r0, r1 = _padded(rho)
    f0, f1 = _padded(phi)
    rho_pts = _points(t, rho, t0, t1, r0, r1, box)
    phi_pts = _points(t, phi, t0, t1, f0, f1, box)

    ticks = []
    for i in range(5):
        frac = i / 4
        y = top + height * (1.0 - frac)
        x = left + width * frac
        ticks.append(
            f'<text x="{left - 6:.2f}" y="{y + 4:.2f}" text-anchor="end" '
            f'style="font:11px sans-serif;fill:#1f4e9c">{r0 + frac * (r1 - r0):.4g}</text>'
        )
        ticks.append(
            f'<text x="{left + width + 6:.2f}" y="{y + 4:.2f}" text-anchor="start" '
            f'style="font:11px sans-serif;fill:#b5432a">{f0 + frac * (f1 - f0):.4g}</text>'
        )
        ticks.append(
            f'<text x="{x:.2f}" y="{top + height + 16:.2f}" text-anchor="middle" '
            f'style="font:11px sans-serif">{t0 + frac * (t1 - t0):.4g}</text>'
        )
    return "\n".join(
        [
            '<?xml version="1.0" encoding="UTF-8"?>',
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
            f'viewBox="0 0 {W} {H}">',
            f'<rect x="0" y="0" width="{W}" height="{H}" style="fill:#ffffff"/>',
            f'<text x="{W / 2:.2f}" y="22" text-anchor="middle" '
            f'style="font:bold 14px sans-serif">{escape(title)}</text>',
            f'<rect x="{left:.2f}" y="{top:.2f}" width="{width:.2f}" height="{height:.2f}" '
            'style="fill:none;stroke:#444444;stroke-width:1"/>',
            f'<polyline id="rho" points="{rho_pts}" '
            'style="fill:none;stroke:#1f4e9c;stroke-width:2"/>',
            f'<polyline id="phi" points="{phi_pts}" '
            'style="fill:none;stroke:#b5432a;stroke-width:1.5;stroke-dasharray:6 3"/>',
            *ticks,
            f'<text x="{left + width / 2:.2f}" y="{H - 14}" text-anchor="middle" '
            'style="font:13px sans-serif">t</text>',
            f'<text x="18" y="{top + height / 2:.2f}" text-anchor="middle" '
            f'transform="rotate(-90 18 {top + height / 2:.2f})" '
            'style="font:13px sans-serif;fill:#1f4e9c">rho*(t)</text>',
            f'<text x="{W - 14}" y="{top + height / 2:.2f}" text-anchor="middle" '
            f'transform="rotate(90 {W - 14} {top + height / 2:.2f})" '
            'style="font:13px sans-serif;fill:#b5432a">Phi(t)</text>',
            "</svg>",
            "",
        ]
    )
