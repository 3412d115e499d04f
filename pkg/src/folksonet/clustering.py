"""From eigenvectors to communities.

Resources are embedded by the components of the lowest non-trivial
eigenvectors of Q; seeded k-means groups the embedded points, and the
resulting labels define a permutation that brings each community into a
contiguous block of the similarity matrix.
"""
from __future__ import annotations

import csv
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ConfigError
from .similarity import SimilarityMatrix
from .spectral import DEFAULT_ZERO_TOL, SpectralResult, count_zero_eigenvalues

KMEANS_MAX_ITER = 500
KMEANS_RESTARTS = 10


@dataclass(frozen=True, eq=False)
class Embedding:
    points: np.ndarray  # n x d
    eigen_indices: tuple[int, ...]  # 0-based indices into the ascending spectrum

    @property
    def d(self) -> int:
        return self.points.shape[1]

    @property
    def n(self) -> int:
        return self.points.shape[0]


@dataclass(frozen=True, eq=False)
class CommunityAssignment:
    labels: np.ndarray
    k: int
    permutation: np.ndarray

    def sizes(self) -> list[int]:
        return np.bincount(self.labels, minlength=self.k).tolist()


def embed(r: SpectralResult, d: int, zero_tol: float = DEFAULT_ZERO_TOL) -> Embedding:
    """Rows of the ``d`` eigenvectors just above the zero-eigenspace."""
    if d < 1:
        raise ConfigError("embedding dimension must be at least 1")
    first = count_zero_eigenvalues(r, zero_tol)
    if first + d > r.n:
        raise ConfigError(
            f"only {r.n - first} non-trivial eigenvectors available, {d} requested")
    idx = tuple(range(first, first + d))
    return Embedding(r.eigenvectors[:, list(idx)].copy(), idx)


def _sq_dists(x: np.ndarray, centers: np.ndarray) -> np.ndarray:
    diff = x[:, None, :] - centers[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def _kmeanspp(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = x.shape[0]
    centers = [x[rng.integers(n)]]
    closest = _sq_dists(x, np.array(centers))[:, 0]
    for _ in range(1, k):
        total = closest.sum()
        if total <= 0:
            break
        i = int(np.searchsorted(np.cumsum(closest), rng.random() * total, side="right"))
        i = min(i, n - 1)
        centers.append(x[i])
        closest = np.minimum(closest, _sq_dists(x, x[i:i + 1])[:, 0])
    return np.array(centers)


def _lloyd(x: np.ndarray, centers: np.ndarray, k: int,
           max_iter: int) -> tuple[np.ndarray, float]:
    labels = None
    for _ in range(max_iter):
        # argmin picks the lowest-index centroid on ties
        new = np.argmin(_sq_dists(x, centers), axis=1)
        counts = np.bincount(new, minlength=k)
        while (counts == 0).any():
            # split the largest cluster at its point farthest from the centroid
            empty = int(np.flatnonzero(counts == 0)[0])
            big = int(np.argmax(counts))
            members = np.flatnonzero(new == big)
            spread = ((x[members] - x[members].mean(axis=0)) ** 2).sum(axis=1)
            far = int(members[np.argmax(spread)])
            new[far] = empty
            counts = np.bincount(new, minlength=k)
        if labels is not None and np.array_equal(new, labels):
            break
        labels = new
        centers = np.array([x[labels == j].mean(axis=0) for j in range(k)])
    inertia = float(((x - centers[labels]) ** 2).sum())
    return labels, inertia


def kmeans(points: np.ndarray, k: int, seed: int = 0, restarts: int = KMEANS_RESTARTS,
           max_iter: int = KMEANS_MAX_ITER) -> np.ndarray:
    """Seeded k-means++ initialisation followed by Lloyd iterations.

    The best of ``restarts`` runs (lowest inertia, earliest on ties) wins.
    Only distances enter the procedure, so labels do not change under a
    rotation of the points.
    """
    x = np.asarray(points, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    n = x.shape[0]
    if k < 1:
        raise ConfigError("k must be at least 1")
    if k > n:
        raise ConfigError(f"k={k} exceeds the number of points ({n})")
    if k == 1:
        return np.zeros(n, dtype=int)
    distinct = np.unique(x, axis=0).shape[0]
    if k > distinct:
        raise ConfigError(f"k={k} exceeds the number of distinct points ({distinct})")
    rng = np.random.default_rng(seed)
    best_labels, best_inertia = None, np.inf
    for _ in range(restarts):
        centers = _kmeanspp(x, k, rng)
        if len(centers) < k:
            continue
        labels, inertia = _lloyd(x, centers, k, max_iter)
        if inertia < best_inertia:
            best_labels, best_inertia = labels, inertia
    if best_labels is None:
        raise ConfigError("k-means initialisation failed to find distinct centers")
    return best_labels


def cluster(e: Embedding | np.ndarray, k: int, seed: int = 0,
            normalize_rows: bool = False) -> np.ndarray:
    x = e.points if isinstance(e, Embedding) else np.asarray(e, dtype=np.float64)
    if normalize_rows:
        x = _unit_rows(x)
    return kmeans(x, k, seed)


def _unit_rows(x: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(x, axis=1, keepdims=True)
    return x / np.where(norms > 0, norms, 1.0)


def spectral_labels(r: SpectralResult, k: int, d: int, seed: int = 0,
                    zero_tol: float = DEFAULT_ZERO_TOL,
                    normalize_rows: bool = False) -> np.ndarray:
    """Community labels from a decomposition of Q.

    For a connected graph this is k-means on :func:`embed`. When the graph
    has several components the zero-eigenspace vectors (constant on each
    component) are put in front of the embedding, scaled so that no cluster
    can straddle two components; with ``k`` at most the number of
    components, those vectors alone are clustered.
    """
    zeros = count_zero_eigenvalues(r, zero_tol)
    if zeros <= 1:
        return cluster(embed(r, d, zero_tol), k, seed, normalize_rows)
    null = r.eigenvectors[:, :zeros]
    d = min(d, r.n - zeros)
    if k <= zeros or d == 0:
        if k > zeros:
            raise ConfigError(f"k={k} exceeds the {zeros} isolated components")
        return kmeans(null, k, seed)
    rest = embed(r, d, zero_tol).points
    if normalize_rows:
        rest = _unit_rows(rest)
    scale = 10.0 * np.sqrt(r.n) * (np.abs(rest).max() + 1.0) * np.sqrt(d)
    return kmeans(np.hstack([scale * null, rest]), k, seed)


def make_assignment(labels: Sequence[int]) -> CommunityAssignment:
    """Relabel communities by decreasing size and build the grouping permutation.

    Equal sizes are ordered by each community's smallest member index, which
    makes the result independent of the original label names.
    """
    labels = np.asarray(labels)
    if labels.size == 0:
        raise ConfigError("labels must be non-empty")
    sizes = Counter(labels.tolist())
    first = {}
    for i, lab in enumerate(labels.tolist()):
        first.setdefault(lab, i)
    ranked = sorted(sizes, key=lambda lab: (-sizes[lab], first[lab]))
    rename = {lab: new for new, lab in enumerate(ranked)}
    relabeled = np.array([rename[lab] for lab in labels.tolist()], dtype=int)
    permutation = np.lexsort((np.arange(labels.size), relabeled))
    return CommunityAssignment(relabeled, len(ranked), permutation)


def reorder_matrix(m: SimilarityMatrix, a: CommunityAssignment) -> SimilarityMatrix:
    p = np.asarray(a.permutation)
    if p.shape != (m.n,):
        raise ConfigError(f"permutation of length {p.size} does not fit a {m.n}x{m.n} matrix")
    values = m.values[np.ix_(p, p)]
    return SimilarityMatrix(tuple(m.resources[i] for i in p), values, m.kind, m.gamma)


def block_contrast(m: SimilarityMatrix, a: CommunityAssignment,
                   reordered: bool = False) -> tuple[float, float]:
    """Mean off-diagonal strength within and between communities.

    ``reordered`` says that ``m`` already went through :func:`reorder_matrix`
    with ``a``; the labels are permuted to match.
    """
    labels = np.asarray(a.labels)
    if reordered:
        labels = labels[a.permutation]
    if labels.shape != (m.n,):
        raise ConfigError("assignment does not match the matrix size")
    if a.k < 2:
        raise ConfigError("block contrast needs at least 2 communities")
    same = labels[:, None] == labels[None, :]
    off = ~np.eye(m.n, dtype=bool)
    within = same & off
    if not within.any():
        raise ConfigError("all communities are singletons")
    between = ~same
    return float(m.values[within].mean()), float(m.values[between].mean())


def write_assignment_csv(resources: Sequence[str], a: CommunityAssignment, path) -> None:
    """Rows in original order; ``permuted_index`` is the row's position after reordering."""
    position = np.empty_like(a.permutation)
    position[a.permutation] = np.arange(a.permutation.size)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["resource_id", "community", "permuted_index"])
        for rid, lab, pos in zip(resources, a.labels, position):
            w.writerow([rid, int(lab), int(pos)])


def read_assignment_csv(path) -> tuple[list[str], CommunityAssignment]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    resources = [r["resource_id"] for r in rows]
    labels = np.array([int(r["community"]) for r in rows], dtype=int)
    position = np.array([int(r["permuted_index"]) for r in rows], dtype=int)
    permutation = np.empty_like(position)
    permutation[position] = np.arange(position.size)
    k = int(labels.max()) + 1 if labels.size else 0
    return resources, CommunityAssignment(labels, k, permutation)


def write_embedding_csv(resources: Sequence[str], e: Embedding, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["resource_id"] + [f"v{j + 1}" for j in e.eigen_indices])
        for rid, row in zip(resources, e.points):
            w.writerow([rid] + [format(float(x), ".17g") for x in row])
