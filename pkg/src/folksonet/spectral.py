"""Laplacian-like operator of the similarity network and its spectrum.

``Q = S - W`` where ``W`` is the transformed similarity matrix with its
diagonal zeroed and ``S`` holds the row sums of ``W``. Small eigenvalues of
``Q`` and their eigenvectors carry the community structure.
"""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .errors import ConfigError, ConvergenceError, ParseError
from .similarity import SimilarityMatrix

log = logging.getLogger(__name__)

DEFAULT_ZERO_TOL = 1e-8
JACOBI_TOL = 1e-12
JACOBI_MAX_SWEEPS = 100


@dataclass(frozen=True, eq=False)
class LaplacianMatrix:
    values: np.ndarray
    resources: tuple[str, ...] = ()

    @property
    def n(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True, eq=False)
class SpectralResult:
    eigenvalues: np.ndarray  # ascending
    eigenvectors: np.ndarray  # column j pairs with eigenvalues[j]
    sweeps: int = 0

    @property
    def n(self) -> int:
        return self.eigenvalues.shape[0]


def build_q(m: SimilarityMatrix | np.ndarray) -> LaplacianMatrix:
    values = m.values if isinstance(m, SimilarityMatrix) else np.asarray(m, dtype=np.float64)
    if values.ndim != 2 or values.shape[0] != values.shape[1]:
        raise ConfigError("similarity matrix must be square")
    if not np.array_equal(values, values.T):
        raise ConfigError("similarity matrix must be symmetric")
    if values.size and (values.min() < 0 or values.max() > 1):
        raise ConfigError("similarity values must lie in [0, 1]")
    w = values.copy()
    np.fill_diagonal(w, 0.0)
    q = -w
    np.fill_diagonal(q, w.sum(axis=1))
    resources = m.resources if isinstance(m, SimilarityMatrix) else ()
    return LaplacianMatrix(q, resources)


@lru_cache(maxsize=16)
def _round_robin(n: int) -> tuple[np.ndarray, ...]:
    """Circle-method tournament over ``n`` indices.

    Each round is returned as an ordering in which positions ``2i`` and
    ``2i + 1`` form a pair; with odd ``n`` the last position sits out.
    Across all rounds every unordered pair appears exactly once.
    """
    m = n + (n % 2)
    players = list(range(m))
    rounds = []
    for _ in range(m - 1):
        order, bye = [], []
        for i in range(m // 2):
            a, b = players[i], players[m - 1 - i]
            if a < n and b < n:
                order += [min(a, b), max(a, b)]
            else:
                bye.append(min(a, b))
        rounds.append(np.array(order + bye, dtype=np.intp))
        players = [players[0], players[-1]] + players[1:-1]
    return tuple(rounds)


def _off_norm(a: np.ndarray) -> float:
    # direct sum: ||a||^2 - ||diag||^2 cancels catastrophically near convergence
    off = a.copy()
    np.fill_diagonal(off, 0.0)
    return float(np.linalg.norm(off))


def _rotate_pairs(x: np.ndarray, c: np.ndarray, s: np.ndarray, h: int, axis: int) -> None:
    """In place: (x_p, x_q) <- (c x_p - s x_q, s x_p + c x_q) for pairs (2i, 2i+1) along ``axis``."""
    if axis == 1:
        xp, xq = x[:, 0:2 * h:2], x[:, 1:2 * h:2]
    else:
        xp, xq = x[0:2 * h:2, :], x[1:2 * h:2, :]
        c, s = c[:, None], s[:, None]
    saved = xp.copy()
    xp *= c
    xp -= s * xq
    xq *= c
    xq += s * saved


def jacobi_eigh(a: np.ndarray, tol: float = JACOBI_TOL,
                max_sweeps: int = JACOBI_MAX_SWEEPS) -> tuple[np.ndarray, np.ndarray, int]:
    """Cyclic Jacobi eigenvalue iteration for a dense symmetric matrix.

    Each sweep visits every off-diagonal pair once, in round-robin order so
    that every round is a batch of disjoint plane rotations applied at once.
    Before a round the working matrix is permuted so that its pairs occupy
    adjacent indices. Stops when the off-diagonal Frobenius norm is at most
    ``tol * ||a||_F``. Returns unsorted eigenvalues, eigenvectors (columns)
    and the number of sweeps used.
    """
    a = np.array(a, dtype=np.float64)
    n = a.shape[0]
    if n < 2:
        return np.diag(a).copy(), np.eye(n), 0
    target = tol * float(np.linalg.norm(a))
    rounds = _round_robin(n)
    h = n // 2
    v = np.eye(n)
    layout = np.arange(n)  # layout[pos] = original index held at pos
    where = np.arange(n)  # inverse of layout
    pos = np.arange(h)
    off = _off_norm(a)
    sweeps = 0
    while off > target:
        if sweeps == max_sweeps:
            raise ConvergenceError(f"Jacobi did not converge in {max_sweeps} sweeps", off)
        sweeps += 1
        for order in rounds:
            sel = where[order]
            a = a.take(sel, axis=0).take(sel, axis=1)
            v = v.take(sel, axis=1)
            layout = order
            where[order] = np.arange(n)

            apq = a[2 * pos, 2 * pos + 1]
            if not apq.any():
                continue
            app, aqq = a[2 * pos, 2 * pos], a[2 * pos + 1, 2 * pos + 1]
            rot = apq != 0
            theta = np.zeros_like(apq)
            # a subnormal apq can overflow theta to inf, giving t = 0 as it should
            with np.errstate(over="ignore"):
                theta[rot] = (aqq[rot] - app[rot]) / (2.0 * apq[rot])
                t = np.where(theta >= 0, 1.0, -1.0) / (np.abs(theta) + np.hypot(theta, 1.0))
            t[~rot] = 0.0
            c = 1.0 / np.sqrt(1.0 + t * t)
            s = t * c

            _rotate_pairs(a, c, s, h, axis=1)
            _rotate_pairs(a, c, s, h, axis=0)
            a[2 * pos, 2 * pos + 1] = 0.0
            a[2 * pos + 1, 2 * pos] = 0.0
            a[2 * pos, 2 * pos] = app - t * apq
            a[2 * pos + 1, 2 * pos + 1] = aqq + t * apq
            _rotate_pairs(v, c, s, h, axis=1)
        a = 0.5 * (a + a.T)
        off = _off_norm(a)
        log.debug("jacobi sweep %d: off-norm %.3e (target %.3e)", sweeps, off, target)
    # undo the working layout
    back = where
    return np.diag(a)[back].copy(), v[:, back], sweeps


def fix_signs(vectors: np.ndarray) -> np.ndarray:
    """Flip each column so that its largest-magnitude entry is positive."""
    vectors = np.array(vectors, dtype=np.float64)
    if vectors.size == 0:
        return vectors
    idx = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[idx, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def eigendecompose(q: LaplacianMatrix | np.ndarray) -> SpectralResult:
    values = q.values if isinstance(q, LaplacianMatrix) else np.asarray(q, dtype=np.float64)
    evals, evecs, sweeps = jacobi_eigh(values)
    order = np.argsort(evals, kind="stable")
    return SpectralResult(evals[order], fix_signs(evecs[:, order]), sweeps)


def count_zero_eigenvalues(r: SpectralResult, zero_tol: float = DEFAULT_ZERO_TOL) -> int:
    if zero_tol <= 0:
        raise ConfigError("zero_tol must be positive")
    return int(np.count_nonzero(np.abs(r.eigenvalues) <= zero_tol))


def select_k(r: SpectralResult | Sequence[float], max_k: int = 10,
             zero_tol: float = DEFAULT_ZERO_TOL) -> tuple[int, bool]:
    """Choose the community count from the largest eigengap.

    Candidate ``k`` (1-based count of eigenvalues below the gap) scores the
    ratio ``lam[k] / lam[k-1]``. The trivial zero eigenvalue of a connected
    graph is never a candidate; when several eigenvalues are zero (several
    components) the step out of the zero-eigenspace is scored by its
    additive gap. Ties go to the smaller ``k``. Returns ``(k, degenerate)``;
    ``degenerate`` is set, with ``k = 1``, when no candidate shows any gap.
    """
    lam = np.asarray(r.eigenvalues if isinstance(r, SpectralResult) else r, dtype=np.float64)
    n = lam.shape[0]
    if n < 2:
        raise ConfigError("select_k needs at least 2 eigenvalues")
    if max_k < 1:
        raise ConfigError("max_k must be at least 1")
    zeros = int(np.count_nonzero(np.abs(lam) <= zero_tol))
    best_k, best_score = 1, 0.0
    for k in range(1, min(max_k, n - 1) + 1):
        lo, hi = lam[k - 1], lam[k]
        if abs(lo) <= zero_tol:
            if k != zeros or zeros < 2:
                continue
            score = hi - lo
        else:
            ratio = hi / lo
            score = ratio if ratio > 1.0 + 1e-9 else 0.0
        if score > best_score:
            best_k, best_score = k, score
    if best_score == 0.0:
        return 1, True
    return best_k, False


# --- file formats -----------------------------------------------------------

def write_spectrum_csv(r: SpectralResult, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "eigenvalue"])
        for i, lam in enumerate(r.eigenvalues, start=1):
            w.writerow([i, format(float(lam), ".17g")])


def read_spectrum_csv(path) -> np.ndarray:
    with open(path, newline="", encoding="utf-8") as fh:
        try:
            return np.array([float(row["eigenvalue"]) for row in csv.DictReader(fh)])
        except (KeyError, ValueError) as exc:
            raise ParseError(f"{path}: bad spectrum file: {exc}") from None


def write_eigenvectors_csv(r: SpectralResult, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"v{j}" for j in range(1, r.n + 1)])
        for row in r.eigenvectors:
            w.writerow([format(float(x), ".17g") for x in row])
