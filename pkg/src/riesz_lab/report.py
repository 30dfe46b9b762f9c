"""Deterministic serialisation of verification reports: JSON, CSV summary, SVG plots."""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

SVG_W, SVG_H, PAD = 640, 420, 60


def to_jsonable(obj):
    """Plain JSON types; non-finite floats become the strings "inf", "-inf", "nan"."""
    if isinstance(obj, Mapping):
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
        v = float(obj)
        if math.isfinite(v):
            return v
        return "nan" if math.isnan(v) else ("inf" if v > 0 else "-inf")
    return obj


def dumps(data) -> str:
    return json.dumps(to_jsonable(data), indent=2, sort_keys=True) + "\n"


def _write(path: Path, text: str) -> Path:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc
    return path


def _sensitivity(entry: Mapping) -> float | None:
    sens = entry.get("sensitivity")
    if not isinstance(sens, Mapping) or not sens:
        return None
    vals = [float(v) for v in sens.values() if isinstance(v, (int, float))]
    return max(vals) if vals else None


def summary_csv(report: Mapping) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["check", "status", "constant", "max_sensitivity"])
    for name, entry in sorted(report.get("checks", {}).items()):
        const = entry.get("constant")
        sens = _sensitivity(entry)
        writer.writerow(
            [name, entry.get("status"), "" if const is None else repr(float(const)), "" if sens is None else repr(sens)]
        )
    return buf.getvalue()


def _scale(vals: list[float], log: bool, lo_px: float, hi_px: float):
    v = np.log10(vals) if log else np.asarray(vals, dtype=float)
    a, b = float(np.min(v)), float(np.max(v))
    if b <= a:
        a, b = a - 0.5, b + 0.5

    def tx(x):
        xv = math.log10(x) if log else x
        return lo_px + (xv - a) / (b - a) * (hi_px - lo_px)

    return tx, (a, b)


def figure_svg(fig: Mapping) -> str:
    """One data polyline (log-log when the data are positive) plus, if ``slope`` is
    set, one guide line of that slope through the first data point."""
    x = [float(v) for v in fig.get("x", [])]
    y = [float(v) for v in fig.get("y", [])]
    pts = [(a, b) for a, b in zip(x, y) if math.isfinite(a) and math.isfinite(b)]
    log = bool(pts) and all(a > 0 and b > 0 for a, b in pts)
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{SVG_W}" height="{SVG_H}" viewBox="0 0 {SVG_W} {SVG_H}">',
        f'<rect x="0" y="0" width="{SVG_W}" height="{SVG_H}" fill="white"/>',
        f'<text x="{SVG_W / 2:.1f}" y="24" text-anchor="middle" font-size="14">{_esc(fig.get("title", ""))}</text>',
        f'<line class="axis" x1="{PAD}" y1="{SVG_H - PAD}" x2="{SVG_W - PAD / 2}" y2="{SVG_H - PAD}" stroke="black"/>',
        f'<line class="axis" x1="{PAD}" y1="{SVG_H - PAD}" x2="{PAD}" y2="{PAD / 2}" stroke="black"/>',
        f'<text x="{SVG_W / 2:.1f}" y="{SVG_H - 18}" text-anchor="middle" font-size="12">'
        f'{_esc(fig.get("xlabel", ""))}{" (log)" if log else ""}</text>',
        f'<text x="16" y="{SVG_H / 2:.1f}" font-size="12" transform="rotate(-90 16 {SVG_H / 2:.1f})" '
        f'text-anchor="middle">{_esc(fig.get("ylabel", ""))}{" (log)" if log else ""}</text>',
    ]
    if pts:
        tx, xr = _scale([a for a, _ in pts], log, PAD, SVG_W - PAD / 2)
        ty, yr = _scale([b for _, b in pts], log, SVG_H - PAD, PAD / 2)
        coords = " ".join(f"{tx(a):.2f},{ty(b):.2f}" for a, b in pts)
        out.append(f'<polyline class="data" fill="none" stroke="steelblue" stroke-width="1.5" points="{coords}"/>')
        slope = fig.get("slope")
        if slope is not None and log:
            x0, y0 = pts[0]
            x1 = pts[-1][0]
            y1 = y0 * (x1 / x0) ** float(slope)
            out.append(
                f'<line class="guide" x1="{tx(x0):.2f}" y1="{ty(y0):.2f}" x2="{tx(x1):.2f}" y2="{ty(y1):.2f}" '
                f'stroke="firebrick" stroke-dasharray="6 4"/>'
            )
        out.append(
            f'<text x="{PAD}" y="{SVG_H - PAD + 16}" font-size="10">{_tick(xr[0], log)}</text>'
            f'<text x="{SVG_W - PAD / 2}" y="{SVG_H - PAD + 16}" font-size="10" text-anchor="end">{_tick(xr[1], log)}</text>'
            f'<text x="{PAD - 4}" y="{SVG_H - PAD}" font-size="10" text-anchor="end">{_tick(yr[0], log)}</text>'
            f'<text x="{PAD - 4}" y="{PAD / 2 + 4}" font-size="10" text-anchor="end">{_tick(yr[1], log)}</text>'
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _tick(v: float, log: bool) -> str:
    return f"1e{v:.2f}" if log else f"{v:.3g}"


def _esc(s: str) -> str:
    return str(s).replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def emit_report(
    report, out_dir: str | Path, formats: Iterable[str] = ("json", "csv", "svg"), timing: bool = True
) -> list[Path]:
    """Write report.json, summary.csv and plots/<figure>.svg under out_dir.

    Wall-clock figures go to timing.json so that report.json is byte-identical
    across reruns of the same configuration.
    """
    out_dir = Path(out_dir)
    data = report.to_dict() if hasattr(report, "to_dict") else dict(report)
    formats = set(formats)
    unknown = formats - {"json", "csv", "svg"}
    if unknown:
        raise ValueError(f"unknown report formats: {sorted(unknown)}")
    written = []
    if "json" in formats:
        written.append(_write(out_dir / "report.json", dumps(data)))
        if timing and getattr(report, "timing", None):
            written.append(_write(out_dir / "timing.json", dumps(report.timing)))
    if "csv" in formats:
        written.append(_write(out_dir / "summary.csv", summary_csv(data)))
    if "svg" in formats:
        for name, fig in sorted(data.get("figures", {}).items()):
            written.append(_write(out_dir / "plots" / f"{name}.svg", figure_svg(fig)))
    return written
