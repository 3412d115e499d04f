"""End-to-end run: posts -> similarity -> spectrum -> communities -> reports."""
from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import clustering, report, similarity, spectral, synth
from .errors import ConfigError
from .ingest import Corpus, Post, build_corpus, merge_posts, read_posts

log = logging.getLogger(__name__)


@dataclass
class RunConfig:
    inputs: list[str] = field(default_factory=list)
    format: str | None = None  # None: infer from suffix
    gamma: float = similarity.DEFAULT_GAMMA
    k: int | None = None  # None: eigengap selection
    d: int | None = None  # None: k minus the number of zero eigenvalues
    zero_tol: float = spectral.DEFAULT_ZERO_TOL
    top_n: int = report.DEFAULT_TOP_N
    seed: int = 0
    out_dir: str = "out"
    normalize_rows: bool = False
    max_k: int = 10
    bins_per_decade: int = 5
    workers: int = 1
    truth: str | None = None

    def validate(self) -> None:
        if not (isinstance(self.gamma, (int, float)) and 0 < self.gamma <= 1):
            raise ConfigError(f"gamma must lie in (0, 1], got {self.gamma}")
        if self.k is not None and self.k < 1:
            raise ConfigError("k must be at least 1")
        if self.d is not None and self.d < 1:
            raise ConfigError("d must be at least 1")
        if self.zero_tol <= 0:
            raise ConfigError("zero_tol must be positive")
        if self.top_n < 1:
            raise ConfigError("top_n must be at least 1")
        if self.max_k < 1:
            raise ConfigError("max_k must be at least 1")
        if self.bins_per_decade < 1:
            raise ConfigError("bins_per_decade must be positive")


@dataclass
class RunResult:
    corpus: Corpus
    raw: similarity.SimilarityMatrix
    transformed: similarity.SimilarityMatrix
    spectrum: spectral.SpectralResult
    assignment: clustering.CommunityAssignment
    embedding: clustering.Embedding | None
    clouds: list[report.CommunityTagCloud]
    summary: dict

    @property
    def labels(self) -> np.ndarray:
        return self.assignment.labels


def load_posts(inputs, fmt: str | None = None) -> tuple[list[Post], int]:
    if not inputs:
        raise ConfigError("no input files given")
    batches, rejected = [], 0
    for path in inputs:
        posts, bad = read_posts(path, fmt)
        batches.append(posts)
        rejected += bad
    return merge_posts(*batches), rejected


def choose_dimensions(r: spectral.SpectralResult, k: int | None, d: int | None,
                      max_k: int, zero_tol: float) -> tuple[int, int, bool]:
    """Resolve automatic ``k`` and ``d``; returns ``(k, d, degenerate)``."""
    degenerate = False
    if k is None:
        k, degenerate = spectral.select_k(r, max_k, zero_tol)
    if k > r.n:
        raise ConfigError(f"k={k} exceeds the number of resources ({r.n})")
    zeros = spectral.count_zero_eigenvalues(r, zero_tol)
    available = r.n - zeros
    if d is None:
        d = max(k - zeros, 1)
    d = min(d, available)
    return k, d, degenerate


def analyse(corpus: Corpus, config: RunConfig, order: list[str] | None = None) -> RunResult:
    """Run every numerical stage on an in-memory corpus (no files written)."""
    config.validate()
    order = corpus.resources if order is None else list(order)
    if len(order) < 2:
        raise ConfigError("at least 2 resources are needed")

    log.info("similarity: %d resources, %d tags", len(order), len(corpus.global_freqs))
    raw = similarity.build_matrix(corpus, order, workers=config.workers)
    transformed = similarity.power_transform(raw, config.gamma)

    log.info("spectrum: Jacobi on %dx%d", len(order), len(order))
    q = spectral.build_q(transformed)
    r = spectral.eigendecompose(q)
    zeros = spectral.count_zero_eigenvalues(r, config.zero_tol)
    k, d, degenerate = choose_dimensions(r, config.k, config.d, config.max_k, config.zero_tol)
    log.info("communities: k=%d d=%d (zero eigenvalues: %d, sweeps: %d)", k, d, zeros, r.sweeps)

    embedding = clustering.embed(r, d, config.zero_tol) if d >= 1 else None
    if k == 1:
        labels = np.zeros(len(order), dtype=int)
    else:
        labels = clustering.spectral_labels(r, k, d, config.seed, config.zero_tol,
                                            config.normalize_rows)
    assignment = clustering.make_assignment(labels)
    clouds = report.community_tagclouds(corpus, assignment, order, config.top_n)

    summary = {
        "resources": len(order),
        "tags": len(corpus.global_freqs),
        "gamma": config.gamma,
        "k": assignment.k,
        "k_requested": config.k if config.k is not None else "auto",
        "k_degenerate": degenerate,
        "d": d,
        "zero_eigenvalues": zeros,
        "jacobi_sweeps": r.sweeps,
        "community_sizes": assignment.sizes(),
        "seed": config.seed,
    }
    if assignment.k >= 2 and max(assignment.sizes()) >= 2:
        w_in, w_out = clustering.block_contrast(raw, assignment)
        t_in, t_out = clustering.block_contrast(transformed, assignment)
        summary.update(within_mean_raw=w_in, between_mean_raw=w_out,
                       within_mean=t_in, between_mean=t_out)
    return RunResult(corpus, raw, transformed, r, assignment, embedding, clouds, summary)


def _dump_json(obj, path: Path) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def write_artifacts(result: RunResult, out_dir, bins_per_decade: int = 5) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    raw, w = result.raw, result.transformed
    ordered = clustering.reorder_matrix(w, result.assignment)
    similarity.write_matrix_csv(raw, out / "similarity_raw.csv")
    similarity.write_matrix_csv(w, out / "similarity.csv")
    similarity.write_matrix_binary(w, out / "similarity.fsm")
    similarity.write_matrix_csv(ordered, out / "similarity_ordered.csv")
    hist = similarity.strength_histogram(raw, bins_per_decade)
    similarity.write_histogram_csv(hist, out / "histogram.csv")
    spectral.write_spectrum_csv(result.spectrum, out / "spectrum.csv")
    spectral.write_eigenvectors_csv(result.spectrum, out / "eigenvectors.csv")
    if result.embedding is not None:
        clustering.write_embedding_csv(raw.resources, result.embedding, out / "embedding.csv")
    clustering.write_assignment_csv(raw.resources, result.assignment, out / "assignment.csv")
    report.write_tagclouds_csv(result.clouds, out / "tagclouds.csv")
    report.render_heatmap(w, out / "heatmap.pgm")
    report.render_heatmap(ordered, out / "heatmap_ordered.pgm")
    result.summary["zero_strength_pairs"] = hist.zero_count
    _dump_json(result.summary, out / "summary.json")
    render_from_artifacts(out)


def render_from_artifacts(out_dir) -> Path:
    """(Re)build heatmaps and report.html from the CSVs of a finished run."""
    out = Path(out_dir)
    summary = json.loads((out / "summary.json").read_text(encoding="utf-8"))
    clouds = report.read_tagclouds_csv(out / "tagclouds.csv")
    eigenvalues = spectral.read_spectrum_csv(out / "spectrum.csv")
    hist = similarity.read_histogram_csv(out / "histogram.csv")
    heatmaps = []
    for name, title in (("similarity.csv", "Transformed similarity, input order"),
                        ("similarity_ordered.csv", "Transformed similarity, ordered by community")):
        m = similarity.read_matrix_csv(out / name)
        pixels = report.heatmap_pixels(m)
        pgm = out / ("heatmap.pgm" if name == "similarity.csv" else "heatmap_ordered.pgm")
        if not pgm.exists():
            report.render_heatmap(m, pgm)
        heatmaps.append((title, pixels))
    path = out / "report.html"
    report.render_report(path, clouds, eigenvalues, hist, heatmaps, summary)
    return path


def run(config: RunConfig) -> RunResult:
    config.validate()
    posts, rejected = load_posts(config.inputs, config.format)
    log.info("ingest: %d posts (%d rejected records)", len(posts), rejected)
    corpus = build_corpus(posts)
    result = analyse(corpus, config)
    result.summary.update(posts=len(posts), rejected_records=rejected)
    if config.truth:
        truth = synth.read_truth_csv(config.truth)
        missing = [r for r in result.raw.resources if r not in truth]
        if missing:
            raise ConfigError(f"ground truth lacks {len(missing)} resources")
        result.summary["ari"] = synth.ari(result.labels, [truth[r] for r in result.raw.resources])
    result.summary["config"] = {k: v for k, v in asdict(config).items()
                                if k not in ("inputs", "out_dir", "truth")}
    write_artifacts(result, config.out_dir, config.bins_per_decade)
    log.info("report: wrote artifacts to %s", config.out_dir)
    return result
