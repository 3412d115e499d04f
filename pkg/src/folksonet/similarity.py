"""Tag-cloud overlap similarity and the resource similarity matrix.

Two resources are similar when their tag-clouds overlap. Each tag's local
frequency is divided by its global frequency (TF-IDF style), shared tags
count with the smaller of the two local frequencies in the intersection and
with the larger one in the union; the similarity is intersection / union.
"""
from __future__ import annotations

import csv
import io
import math
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import ConfigError, ParseError
from .ingest import Corpus, TagCloud

RAW = "raw"
TRANSFORMED = "transformed"
DEFAULT_GAMMA = 0.1
BINARY_MAGIC = b"FSM1"


@dataclass(frozen=True, eq=False)
class SimilarityMatrix:
    resources: tuple[str, ...]
    values: np.ndarray
    kind: str = RAW
    gamma: float | None = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        n = len(self.resources)
        if values.shape != (n, n):
            raise ConfigError(f"matrix shape {values.shape} does not match {n} resources")
        if self.kind not in (RAW, TRANSFORMED):
            raise ConfigError(f"unknown matrix kind {self.kind!r}")
        if (self.kind == TRANSFORMED) != (self.gamma is not None):
            raise ConfigError("gamma must be set exactly when kind is 'transformed'")
        values.setflags(write=False)
        object.__setattr__(self, "resources", tuple(self.resources))
        object.__setattr__(self, "values", values)

    @property
    def n(self) -> int:
        return len(self.resources)


def pair_similarity(c1: TagCloud | Mapping[str, int], c2: TagCloud | Mapping[str, int],
                    global_freqs: Mapping[str, int]) -> float:
    f1 = c1.freqs if isinstance(c1, TagCloud) else c1
    f2 = c2.freqs if isinstance(c2, TagCloud) else c2
    if not f1 and not f2:
        raise ConfigError("similarity of two empty tag-clouds is undefined")

    inter: list[float] = []
    union: list[float] = []
    for tag, a in f1.items():
        g = global_freqs.get(tag)
        if g is None:
            raise ConfigError(f"tag {tag!r} missing from global frequencies")
        b = f2.get(tag)
        if b is None:
            union.append(a / g)
        else:
            inter.append(min(a, b) / g)
            union.append(max(a, b) / g)
    for tag, b in f2.items():
        if tag in f1:
            continue
        g = global_freqs.get(tag)
        if g is None:
            raise ConfigError(f"tag {tag!r} missing from global frequencies")
        union.append(b / g)

    if not inter:
        return 0.0
    # fsum: exactly rounded, so large clouds do not drift
    return math.fsum(inter) / math.fsum(union)


def _check_order(corpus: Corpus, order: Sequence[str]) -> tuple[str, ...]:
    order = tuple(order)
    if len(set(order)) != len(order):
        raise ConfigError("duplicate resource in resource order")
    missing = [r for r in order if r not in corpus.clouds]
    if missing:
        raise ConfigError(f"resources not in corpus: {missing[:5]}")
    return order


def build_matrix(corpus: Corpus, resource_order: Sequence[str] | None = None,
                 workers: int = 1) -> SimilarityMatrix:
    """Raw similarity matrix over ``resource_order`` (sorted ids by default).

    Each unordered pair is computed once; rows of the upper triangle are
    split across ``workers`` threads writing disjoint cells, so the result
    does not depend on the schedule.
    """
    order = _check_order(corpus, corpus.resources if resource_order is None else resource_order)
    n = len(order)
    clouds = [corpus.clouds[r].freqs for r in order]
    g = corpus.global_freqs
    values = np.eye(n)

    def fill_row(i: int):
        ci = clouds[i]
        for j in range(i + 1, n):
            values[i, j] = values[j, i] = pair_similarity(ci, clouds[j], g)

    if workers > 1 and n > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(fill_row, range(n)))
    else:
        for i in range(n):
            fill_row(i)
    return SimilarityMatrix(order, values, RAW)


def power_transform(m: SimilarityMatrix, gamma: float = DEFAULT_GAMMA) -> SimilarityMatrix:
    """Element-wise ``w ** gamma`` with ``0 ** gamma = 0``."""
    if m.kind != RAW:
        raise ConfigError("power transform expects a raw similarity matrix")
    if not (isinstance(gamma, (int, float)) and 0 < gamma <= 1):
        raise ConfigError(f"gamma must lie in (0, 1], got {gamma!r}")
    values = np.power(m.values, float(gamma))
    values[m.values == 0] = 0.0
    return SimilarityMatrix(m.resources, values, TRANSFORMED, float(gamma))


@dataclass(frozen=True)
class HistogramBin:
    lower: float
    upper: float
    count: int
    density: float


@dataclass(frozen=True)
class StrengthHistogram:
    bins: tuple[HistogramBin, ...]
    zero_count: int
    bins_per_decade: int

    @property
    def total(self) -> int:
        return self.zero_count + sum(b.count for b in self.bins)


def log_bin_edges(lo: float, hi: float, bins_per_decade: int) -> np.ndarray:
    """Edges ``10**(j / bins_per_decade)`` covering ``[lo, hi]`` with ``hi`` strictly inside."""
    j0 = math.floor(math.log10(lo) * bins_per_decade)
    j1 = math.floor(math.log10(hi) * bins_per_decade) + 1
    # log10 rounding can misplace values sitting on an edge
    while 10.0 ** (j0 / bins_per_decade) > lo:
        j0 -= 1
    while 10.0 ** (j1 / bins_per_decade) <= hi:
        j1 += 1
    return np.array([10.0 ** (j / bins_per_decade) for j in range(j0, j1 + 1)])


def strength_histogram(m: SimilarityMatrix, bins_per_decade: int = 5) -> StrengthHistogram:
    """Logarithmically binned histogram of off-diagonal link strengths.

    Bins are half-open ``[lower, upper)``. Pairs with strength 0 cannot be
    placed on a log axis and are reported in ``zero_count``. ``density`` is
    the count divided by the number of positive pairs and by the bin width.
    """
    if m.n < 2:
        raise ConfigError("histogram needs at least 2 resources")
    if not (isinstance(bins_per_decade, int) and bins_per_decade > 0):
        raise ConfigError("bins_per_decade must be a positive integer")
    upper = m.values[np.triu_indices(m.n, k=1)]
    positive = upper[upper > 0]
    zero_count = int(upper.size - positive.size)
    if positive.size == 0:
        return StrengthHistogram((), zero_count, bins_per_decade)
    edges = log_bin_edges(float(positive.min()), float(positive.max()), bins_per_decade)
    idx = np.searchsorted(edges, positive, side="right") - 1
    counts = np.bincount(idx, minlength=len(edges) - 1)
    bins = tuple(
        HistogramBin(float(edges[j]), float(edges[j + 1]), int(counts[j]),
                     float(counts[j] / (positive.size * (edges[j + 1] - edges[j]))))
        for j in range(len(edges) - 1)
    )
    return StrengthHistogram(bins, zero_count, bins_per_decade)


# --- file formats -----------------------------------------------------------

def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_matrix_csv(m: SimilarityMatrix, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(m.resources)
        for row in m.values:
            w.writerow([_fmt(x) for x in row])


def read_matrix_csv(path, kind: str = RAW, gamma: float | None = None) -> SimilarityMatrix:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ParseError(f"{path}: empty matrix file")
    header, body = rows[0], rows[1:]
    try:
        values = np.array([[float(x) for x in row] for row in body], dtype=np.float64)
    except ValueError as exc:
        raise ParseError(f"{path}: {exc}") from None
    if values.shape != (len(header), len(header)):
        raise ParseError(f"{path}: expected {len(header)}x{len(header)} values")
    return SimilarityMatrix(tuple(header), values, kind, gamma)


def matrix_to_bytes(m: SimilarityMatrix) -> bytes:
    """``FSM1``, u32 n, n x (u32 length + UTF-8 id), row-major little-endian f64."""
    buf = io.BytesIO()
    buf.write(BINARY_MAGIC)
    buf.write(struct.pack("<I", m.n))
    for r in m.resources:
        b = r.encode("utf-8")
        buf.write(struct.pack("<I", len(b)))
        buf.write(b)
    buf.write(np.ascontiguousarray(m.values, dtype="<f8").tobytes())
    return buf.getvalue()


def matrix_from_bytes(data: bytes, kind: str = RAW, gamma: float | None = None) -> SimilarityMatrix:
    if data[:4] != BINARY_MAGIC:
        raise ParseError("not an FSM1 matrix (bad magic)")
    try:
        (n,) = struct.unpack_from("<I", data, 4)
        pos = 8
        ids = []
        for _ in range(n):
            (length,) = struct.unpack_from("<I", data, pos)
            pos += 4
            ids.append(data[pos:pos + length].decode("utf-8"))
            pos += length
    except (struct.error, UnicodeDecodeError) as exc:
        raise ParseError(f"corrupt FSM1 header: {exc}") from None
    if len(data) - pos != 8 * n * n:
        raise ParseError("FSM1 payload size does not match n")
    values = np.frombuffer(data, dtype="<f8", offset=pos).reshape(n, n).astype(np.float64)
    return SimilarityMatrix(tuple(ids), values, kind, gamma)


def write_matrix_binary(m: SimilarityMatrix, path) -> None:
    with open(path, "wb") as fh:
        fh.write(matrix_to_bytes(m))


def read_matrix_binary(path, kind: str = RAW, gamma: float | None = None) -> SimilarityMatrix:
    with open(path, "rb") as fh:
        return matrix_from_bytes(fh.read(), kind, gamma)


def read_matrix(path, kind: str = RAW, gamma: float | None = None) -> SimilarityMatrix:
    with open(path, "rb") as fh:
        head = fh.read(4)
    if head == BINARY_MAGIC:
        return read_matrix_binary(path, kind, gamma)
    return read_matrix_csv(path, kind, gamma)


def write_histogram_csv(h: StrengthHistogram, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["lower", "upper", "count", "density"])
        for b in h.bins:
            w.writerow([_fmt(b.lower), _fmt(b.upper), b.count, _fmt(b.density)])


def read_histogram_csv(path) -> list[HistogramBin]:
    with open(path, newline="", encoding="utf-8") as fh:
        return [HistogramBin(float(r["lower"]), float(r["upper"]), int(r["count"]), float(r["density"]))
                for r in csv.DictReader(fh)]
