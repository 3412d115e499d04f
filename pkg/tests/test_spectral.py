import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from folksonet.clustering import make_assignment, reorder_matrix, spectral_labels
from folksonet.errors import ConfigError, ConvergenceError, ParseError
from folksonet.similarity import TRANSFORMED, SimilarityMatrix
from folksonet.spectral import (SpectralResult, _round_robin, build_q, count_zero_eigenvalues,
                                eigendecompose, fix_signs, jacobi_eigh, read_spectrum_csv,
                                select_k, write_eigenvectors_csv, write_spectrum_csv)
from folksonet.synth import ari
from oracles import components, laplacian, random_sparse_graph


def random_w(rng, n, density=1.0):
    v = rng.random((n, n)) * (rng.random((n, n)) < density)
    v = np.triu(v, 1)
    v = v + v.T
    np.fill_diagonal(v, 1.0)
    return v


def check_result(q, r, tol=1e-8):
    qinf = max(np.abs(q).sum(axis=1).max(), 1e-300)
    resid = q @ r.eigenvectors - r.eigenvectors * r.eigenvalues
    assert np.abs(resid).max() <= tol * qinf
    gram = r.eigenvectors.T @ r.eigenvectors
    assert np.abs(gram - np.eye(r.n)).max() <= 1e-8
    assert np.all(np.diff(r.eigenvalues) >= 0)
    assert r.eigenvalues[0] >= -1e-8


def test_build_q_examples():
    assert build_q(np.eye(2)).values.tolist() == [[0.0, 0.0], [0.0, 0.0]]
    assert build_q(np.ones((2, 2))).values.tolist() == [[1.0, -1.0], [-1.0, 1.0]]


@pytest.mark.parametrize("seed", range(5))
def test_build_q_random(seed):
    w = random_w(np.random.default_rng(seed), 8)
    q = build_q(SimilarityMatrix(tuple("abcdefgh"), w)).values
    assert np.abs(q.sum(axis=1)).max() < 1e-12
    assert np.array_equal(q, laplacian(w))
    off = q[~np.eye(8, dtype=bool)]
    assert np.all(off <= 0) and np.all(np.diag(q) >= 0)


@pytest.mark.parametrize("bad", [np.ones((2, 3)), np.array([[1, 0.2], [0.3, 1]]),
                                 np.array([[1, 1.5], [1.5, 1]]), np.array([[1, -0.1], [-0.1, 1]])])
def test_build_q_rejects(bad):
    with pytest.raises(ConfigError):
        build_q(bad)


def test_round_robin_covers_every_pair_once():
    for n in range(2, 12):
        seen = []
        for order in _round_robin(n):
            assert sorted(order.tolist()) == list(range(n))
            seen += [tuple(sorted(order[2 * i:2 * i + 2].tolist())) for i in range(n // 2)]
        assert len(seen) == len(set(seen)) == n * (n - 1) // 2


def test_path_graph_p3():
    # characteristic polynomial of [[1,-1,0],[-1,2,-1],[0,-1,1]] is l(l-1)(l-3)
    w = np.array([[1, 1, 0], [1, 1, 1], [0, 1, 1.0]])
    r = eigendecompose(build_q(w))
    assert np.abs(r.eigenvalues - [0.0, 1.0, 3.0]).max() < 1e-9


def test_constant_eigenvector_and_signs():
    w = random_w(np.random.default_rng(2), 12)
    r = eigendecompose(build_q(w))
    assert abs(r.eigenvalues[0]) < 1e-10
    assert np.abs(r.eigenvectors[:, 0] - 1 / np.sqrt(12)).max() < 1e-6
    big = np.argmax(np.abs(r.eigenvectors), axis=0)
    assert np.all(r.eigenvectors[big, np.arange(12)] > 0)


def test_two_blocks_have_two_zeros():
    w = np.zeros((6, 6))
    w[:3, :3] = 0.7
    w[3:, 3:] = 0.4
    np.fill_diagonal(w, 1)
    r = eigendecompose(build_q(w))
    assert count_zero_eigenvalues(r) == 2
    assert np.abs(r.eigenvalues[:2]).max() < 1e-8


def test_three_cliques():
    w = np.kron(np.eye(3), np.ones((4, 4)))
    assert count_zero_eigenvalues(eigendecompose(build_q(w))) == 3


@pytest.mark.parametrize("n", [2, 3, 5, 17, 40, 100])
def test_jacobi_matches_numpy_eigh(n):
    rng = np.random.default_rng(n)
    q = build_q(random_w(rng, n, 0.5)).values
    r = eigendecompose(q)
    check_result(q, r)
    assert np.abs(r.eigenvalues - np.linalg.eigvalsh(q)).max() < 1e-9 * max(1, np.abs(q).max())
    recon = r.eigenvectors @ np.diag(r.eigenvalues) @ r.eigenvectors.T
    assert np.abs(recon - q).max() <= 1e-7 * np.abs(q).sum(axis=1).max()
    assert abs(r.eigenvalues.sum() - np.trace(q)) <= 1e-8 * np.trace(q)


def test_jacobi_general_symmetric():
    rng = np.random.default_rng(9)
    a = rng.normal(size=(31, 31))
    a = a + a.T
    evals, evecs, _ = jacobi_eigh(a)
    assert np.abs(np.sort(evals) - np.linalg.eigvalsh(a)).max() < 1e-10
    assert np.abs(a @ evecs - evecs * evals).max() < 1e-10


def test_jacobi_trivial_sizes():
    assert eigendecompose(np.zeros((0, 0))).n == 0
    r = eigendecompose(np.zeros((1, 1)))
    assert r.eigenvalues.tolist() == [0.0] and r.eigenvectors.tolist() == [[1.0]]
    r = eigendecompose(np.diag([3.0, 1.0]))
    assert r.eigenvalues.tolist() == [1.0, 3.0] and r.sweeps == 0


def test_jacobi_convergence_error():
    rng = np.random.default_rng(0)
    q = build_q(random_w(rng, 20)).values
    with pytest.raises(ConvergenceError) as exc:
        jacobi_eigh(q, max_sweeps=1)
    assert exc.value.off_norm > 0


def test_eigendecompose_deterministic():
    q = build_q(random_w(np.random.default_rng(4), 30)).values
    a, b = eigendecompose(q), eigendecompose(q.copy())
    assert np.array_equal(a.eigenvalues, b.eigenvalues)
    assert np.array_equal(a.eigenvectors, b.eigenvectors)


@given(st.integers(0, 10 ** 6), st.integers(2, 25))
def test_spectrum_permutation_invariant(seed, n):
    rng = np.random.default_rng(seed)
    w = random_w(rng, n, 0.6)
    p = rng.permutation(n)
    a = eigendecompose(build_q(w)).eigenvalues
    b = eigendecompose(build_q(w[np.ix_(p, p)])).eigenvalues
    assert np.abs(a - b).max() < 1e-8


@pytest.mark.parametrize("seed", range(25))
def test_zero_count_matches_union_find(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 40))
    w = random_sparse_graph(rng, n, float(rng.uniform(0.01, 0.15)))
    assert count_zero_eigenvalues(eigendecompose(build_q(w)), 1e-8) == components(w)


def test_count_zero_bad_tol():
    with pytest.raises(ConfigError):
        count_zero_eigenvalues(SpectralResult(np.zeros(2), np.eye(2)), 0)


def test_fix_signs():
    v = np.array([[0.6, -0.8], [-0.8, 0.6]])
    assert fix_signs(v).tolist() == [[-0.6, 0.8], [0.8, -0.6]]


# --- select_k -----------------------------------------------------------------

def test_select_k_disconnected_case():
    eps = 1e-12
    assert select_k([0, eps, eps, 5, 5.1, 5.2, 5.3]) == (3, False)


def test_select_k_six_communities():
    lam = sorted([0, 0.01, 0.012, 0.011, 0.013, 0.02, 0.9, 0.95, 1.0])
    assert select_k(lam) == (6, False)


def test_select_k_degenerate():
    assert select_k([0, 1, 1, 1]) == (1, True)


def test_select_k_respects_max_k():
    lam = [0, 0.01, 0.012, 0.011, 0.013, 0.02, 0.9, 0.95]
    k, _ = select_k(sorted(lam), max_k=3)
    assert 1 <= k <= 3


def test_select_k_tie_prefers_smaller():
    assert select_k([0, 1, 2, 4]) == (2, False)


def test_select_k_errors():
    with pytest.raises(ConfigError):
        select_k([0.0])
    with pytest.raises(ConfigError):
        select_k([0, 1, 2], max_k=0)


# --- degenerate eigenspaces ---------------------------------------------------

def remix_degenerate(r, rng, tol=1e-9):
    """Replace each repeated-eigenvalue block of eigenvectors by a random orthonormal basis of it."""
    v = r.eigenvectors.copy()
    lam = r.eigenvalues
    i = 0
    while i < r.n:
        j = i + 1
        while j < r.n and abs(lam[j] - lam[i]) <= tol * max(1.0, abs(lam[i])):
            j += 1
        if j - i > 1:
            rot, _ = np.linalg.qr(rng.normal(size=(j - i, j - i)))
            v[:, i:j] = v[:, i:j] @ rot
        i = j
    return SpectralResult(lam, v, r.sweeps)


def test_clustering_independent_of_degenerate_basis():
    # three identical cliques joined by identical weak links: lambda_2 = lambda_3
    block = 8
    n = 3 * block
    w = np.full((n, n), 0.02)
    for b in range(3):
        w[b * block:(b + 1) * block, b * block:(b + 1) * block] = 0.9
    np.fill_diagonal(w, 1.0)
    r = eigendecompose(build_q(w))
    assert abs(r.eigenvalues[1] - r.eigenvalues[2]) < 1e-9
    truth = np.repeat(np.arange(3), block)
    base = spectral_labels(r, 3, 2, seed=0)
    assert ari(base, truth) == 1.0
    rng = np.random.default_rng(0)
    for _ in range(5):
        mixed = remix_degenerate(r, rng)
        assert ari(spectral_labels(mixed, 3, 2, seed=0), base) == 1.0


def test_disconnected_clustering_independent_of_null_basis():
    w = np.kron(np.eye(3), np.full((5, 5), 0.8))
    np.fill_diagonal(w, 1)
    r = eigendecompose(build_q(w))
    truth = np.repeat(np.arange(3), 5)
    rng = np.random.default_rng(1)
    for _ in range(5):
        assert ari(spectral_labels(remix_degenerate(r, rng, tol=1e-7), 3, 1), truth) == 1.0


def test_reorder_preserves_spectrum():
    rng = np.random.default_rng(6)
    w = random_w(rng, 20)
    m = SimilarityMatrix(tuple(f"r{i}" for i in range(20)), w, TRANSFORMED, 0.1)
    a = make_assignment(rng.integers(0, 4, size=20))
    before = eigendecompose(build_q(m)).eigenvalues
    after = eigendecompose(build_q(reorder_matrix(m, a))).eigenvalues
    assert np.abs(before - after).max() < 1e-8


# --- file formats -------------------------------------------------------------

def test_spectrum_csv_round_trip(tmp_path):
    r = eigendecompose(build_q(random_w(np.random.default_rng(0), 6)))
    write_spectrum_csv(r, tmp_path / "s.csv")
    lines = (tmp_path / "s.csv").read_text().splitlines()
    assert lines[0] == "index,eigenvalue" and lines[1].startswith("1,")
    assert np.array_equal(read_spectrum_csv(tmp_path / "s.csv"), r.eigenvalues)
    write_eigenvectors_csv(r, tmp_path / "v.csv")
    rows = (tmp_path / "v.csv").read_text().splitlines()
    assert rows[0].split(",") == [f"v{j}" for j in range(1, 7)]
    back = np.array([[float(x) for x in row.split(",")] for row in rows[1:]])
    assert np.array_equal(back, r.eigenvectors)


def test_spectrum_csv_bad(tmp_path):
    (tmp_path / "s.csv").write_text("index,value\n1,2\n")
    with pytest.raises(ParseError):
        read_spectrum_csv(tmp_path / "s.csv")
