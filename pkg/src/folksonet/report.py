"""Report artifacts: community tag-clouds, heatmaps and a static HTML page."""
from __future__ import annotations

import base64
import csv
import html
import io
import math
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from PIL import Image

from .clustering import CommunityAssignment
from .errors import ConfigError, ParseError
from .ingest import Corpus
from .similarity import HistogramBin, SimilarityMatrix

DEFAULT_TOP_N = 30
MIN_FONT = 10.0
MAX_FONT = 40.0


@dataclass(frozen=True)
class CloudEntry:
    tag: str
    frequency: int
    display_weight: float


@dataclass(frozen=True)
class CommunityTagCloud:
    community: int
    size: int
    entries: tuple[CloudEntry, ...]


def font_sizes(freqs: Sequence[int], min_font: float = MIN_FONT,
               max_font: float = MAX_FONT) -> list[float]:
    """Font size proportional to log(frequency), the largest at ``max_font``.

    log(1) = 0, so small frequencies are clamped to ``min_font``.
    """
    top = max(freqs, default=1)
    if top <= 1:
        return [min_font] * len(freqs)
    scale = max_font / math.log(top)
    return [max(min_font, scale * math.log(f)) for f in freqs]


def community_tagclouds(corpus: Corpus, a: CommunityAssignment, resource_order: Sequence[str],
                        top_n: int = DEFAULT_TOP_N, min_font: float = MIN_FONT,
                        max_font: float = MAX_FONT) -> list[CommunityTagCloud]:
    """Sum member tag-clouds per community and keep the ``top_n`` most frequent tags."""
    if top_n < 1:
        raise ConfigError("top_n must be at least 1")
    if len(resource_order) != len(a.labels):
        raise ConfigError("resource order does not match the assignment")
    totals = [Counter() for _ in range(a.k)]
    sizes = [0] * a.k
    for rid, lab in zip(resource_order, a.labels):
        totals[lab].update(corpus.clouds[rid].freqs)
        sizes[lab] += 1
    out = []
    for lab in sorted(range(a.k), key=lambda j: (-sizes[j], j)):
        top = sorted(totals[lab].items(), key=lambda kv: (-kv[1], kv[0]))[:top_n]
        weights = font_sizes([f for _, f in top], min_font, max_font)
        entries = tuple(CloudEntry(t, f, w) for (t, f), w in zip(top, weights))
        out.append(CommunityTagCloud(lab, sizes[lab], entries))
    return out


def write_tagclouds_csv(clouds: Sequence[CommunityTagCloud], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["community", "size", "rank", "tag", "frequency", "display_weight"])
        for c in clouds:
            for rank, e in enumerate(c.entries, start=1):
                w.writerow([c.community, c.size, rank, e.tag, e.frequency,
                            format(e.display_weight, ".6g")])


def read_tagclouds_csv(path) -> list[CommunityTagCloud]:
    groups: dict[int, list] = {}
    sizes: dict[int, int] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            lab = int(row["community"])
            sizes[lab] = int(row["size"])
            groups.setdefault(lab, []).append(
                CloudEntry(row["tag"], int(row["frequency"]), float(row["display_weight"])))
    return [CommunityTagCloud(lab, sizes[lab], tuple(groups[lab])) for lab in groups]


# --- heatmaps -----------------------------------------------------------------

def heatmap_pixels(m: SimilarityMatrix | np.ndarray) -> np.ndarray:
    values = m.values if isinstance(m, SimilarityMatrix) else np.asarray(m, dtype=np.float64)
    return np.rint(255.0 * np.clip(values, 0.0, 1.0)).astype(np.uint8)


def render_heatmap(m: SimilarityMatrix | np.ndarray, path) -> None:
    """Binary PGM (P5, maxval 255), one pixel per cell, row 0 on top."""
    pixels = heatmap_pixels(m)
    if pixels.size == 0:
        raise ConfigError("cannot render an empty matrix")
    h, w = pixels.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(pixels.tobytes())


def read_pgm(path) -> np.ndarray:
    with open(path, "rb") as fh:
        data = fh.read()
    fields, pos = [], 0
    while len(fields) < 4:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            pos = data.index(b"\n", pos)
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        fields.append(data[start:pos])
    if fields[0] != b"P5" or int(fields[3]) != 255:
        raise ParseError(f"{path}: not an 8-bit P5 PGM")
    w, h = int(fields[1]), int(fields[2])
    body = data[pos + 1:pos + 1 + w * h]
    if len(body) != w * h:
        raise ParseError(f"{path}: truncated PGM")
    return np.frombuffer(body, dtype=np.uint8).reshape(h, w)


def _png_data_uri(pixels: np.ndarray, min_size: int = 400) -> str:
    img = Image.fromarray(pixels)
    if pixels.shape[0] < min_size:
        factor = max(1, min_size // max(pixels.shape[0], 1))
        img = img.resize((pixels.shape[1] * factor, pixels.shape[0] * factor), Image.NEAREST)
    buf = io.BytesIO()
    img.save(buf, format="PNG", optimize=False)
    return "data:image/png;base64," + base64.b64encode(buf.getvalue()).decode("ascii")


# --- HTML -------------------------------------------------------------------

_CSS = """
body { font-family: sans-serif; margin: 2em; color: #222; }
.cloud { border: 1px solid #ccc; padding: 1em; margin-bottom: 1em; line-height: 1.6; }
.cloud span { margin-right: 0.5em; }
table { border-collapse: collapse; }
td, th { border: 1px solid #ccc; padding: 2px 8px; text-align: right; }
.heatmaps img { image-rendering: pixelated; margin-right: 1em; max-width: 45%; }
"""


def render_report(path, clouds: Sequence[CommunityTagCloud] = (),
                  eigenvalues: Sequence[float] = (), histogram: Sequence[HistogramBin] = (),
                  heatmaps: Sequence[tuple[str, np.ndarray]] = (), summary: dict | None = None,
                  spectrum_rows: int = 30) -> None:
    """Write one self-contained HTML page (images inlined as data URIs)."""
    esc = html.escape
    parts = ['<?xml version="1.0" encoding="utf-8"?>',
             "<!DOCTYPE html>",
             '<html xmlns="http://www.w3.org/1999/xhtml">',
             '<head><meta charset="utf-8" /><title>Resource communities</title>',
             f"<style>{_CSS}</style></head>",
             "<body>", "<h1>Resource communities</h1>"]

    if summary:
        parts.append("<h2>Run summary</h2><table>")
        for key, val in summary.items():
            parts.append(f"<tr><th>{esc(str(key))}</th><td>{esc(str(val))}</td></tr>")
        parts.append("</table>")

    parts.append("<h2>Community tag-clouds</h2>")
    if not clouds:
        parts.append('<p class="notice">No communities.</p>')
    for rank, c in enumerate(clouds, start=1):
        parts.append(f'<div class="cloud" id="community-{c.community}">')
        parts.append(f"<h3>Community {rank} ({c.size} resources)</h3><p>")
        for e in sorted(c.entries, key=lambda e: e.tag):
            parts.append(f'<span style="font-size: {e.display_weight:.1f}px" '
                         f'title="{e.frequency}">{esc(e.tag)}</span>')
        parts.append("</p></div>")

    if heatmaps:
        parts.append('<h2>Similarity matrices</h2><div class="heatmaps">')
        for title, pixels in heatmaps:
            parts.append(f'<figure><img alt="{esc(title)}" src="{_png_data_uri(pixels)}" />'
                         f"<figcaption>{esc(title)}</figcaption></figure>")
        parts.append("</div>")

    parts.append("<h2>Lowest eigenvalues</h2>")
    if len(eigenvalues):
        parts.append("<table><tr><th>index</th><th>eigenvalue</th></tr>")
        for i, lam in enumerate(list(eigenvalues)[:spectrum_rows], start=1):
            parts.append(f"<tr><td>{i}</td><td>{float(lam):.6g}</td></tr>")
        parts.append("</table>")
    else:
        parts.append("<p>No spectrum.</p>")

    parts.append("<h2>Link strength histogram</h2>")
    if histogram:
        parts.append("<table><tr><th>lower</th><th>upper</th><th>count</th><th>density</th></tr>")
        for b in histogram:
            parts.append(f"<tr><td>{b.lower:.4g}</td><td>{b.upper:.4g}</td>"
                         f"<td>{b.count}</td><td>{b.density:.4g}</td></tr>")
        parts.append("</table>")
    else:
        parts.append("<p>No positive link strengths.</p>")

    parts.append("</body></html>")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(parts) + "\n")
