"""Estimated-vs-reference figures for sweep tables, one line per SNR level."""

from __future__ import annotations

import io
import math
import re
import xml.etree.ElementTree as ET
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .harness import AXIS_LABELS, SweepTable, reference_value  # noqa: E402
from .noise import format_snr  # noqa: E402


def snr_label(snr: float) -> str:
    return "noiseless" if math.isinf(snr) else f"{snr:g} dB"


def plot_sweep(table: SweepTable, ax=None):
    if ax is None:
        _, ax = plt.subplots(figsize=(6.4, 4.8))
    levels = table.snr_levels
    cmap = plt.get_cmap("viridis")
    for i, snr in enumerate(levels):
        values, metric = table.series(snr)
        pts = [(reference_value(table.parameter, v), m) for v, m in zip(values, metric) if m is not None]
        if not pts:
            continue
        xs, ys = zip(*pts)
        color = "k" if math.isinf(snr) else cmap(i / max(1, len(levels) - 1))
        (line,) = ax.plot(xs, ys, marker="o", ms=3, lw=1.2, color=color, label=snr_label(snr))
        line.set_gid(f"series-snr-{format_snr(snr)}")
    xlabel, ylabel = AXIS_LABELS[table.parameter]
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.legend(fontsize=8, title="SNR", title_fontsize=8)
    ax.grid(alpha=0.3)
    return ax


def render_plot_svg(table: SweepTable, path: str | Path) -> None:
    """Save the sweep figure; the format follows the file extension (SVG by default)."""
    if not table.rows:
        raise ValueError("empty table")
    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    plot_sweep(table, ax)
    fig.tight_layout()
    path = Path(path)
    fmt = path.suffix.lstrip(".").lower() or "svg"
    if fmt != "svg":
        fig.savefig(path, format=fmt)
        plt.close(fig)
        return
    buf = io.BytesIO()
    with plt.rc_context({"svg.fonttype": "none", "svg.hashsalt": "difx"}):
        fig.savefig(buf, format="svg", metadata={"Date": None})
    plt.close(fig)
    path.write_bytes(series_as_polylines(buf.getvalue()))


_SVG = "http://www.w3.org/2000/svg"


def series_as_polylines(svg: bytes) -> bytes:
    """Turn each tagged series path (straight segments only) into an SVG ``<polyline>``."""
    ET.register_namespace("", _SVG)
    ET.register_namespace("xlink", "http://www.w3.org/1999/xlink")
    root = ET.fromstring(svg)
    for group in root.iter(f"{{{_SVG}}}g"):
        if not group.get("id", "").startswith("series-snr-"):
            continue
        for i, child in enumerate(list(group)):
            if child.tag != f"{{{_SVG}}}path":
                continue
            d = child.get("d", "")
            if re.search(r"[^MLml0-9eE.+\-\s]", d):
                continue
            nums = re.findall(r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?", d)
            points = " ".join(f"{x},{y}" for x, y in zip(nums[::2], nums[1::2]))
            attrs = {k: v for k, v in child.attrib.items() if k != "d"}
            attrs["points"] = points
            attrs.setdefault("fill", "none")
            group.remove(child)
            group.insert(i, ET.Element(f"{{{_SVG}}}polyline", attrs))
            break
    return b'<?xml version="1.0" encoding="utf-8" standalone="no"?>\n' + ET.tostring(root)
