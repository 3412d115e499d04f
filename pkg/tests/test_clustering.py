import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from sklearn.metrics import adjusted_rand_score

from folksonet.clustering import (Embedding, block_contrast, cluster, embed, kmeans,
                                  make_assignment, read_assignment_csv, reorder_matrix,
                                  spectral_labels, write_assignment_csv, write_embedding_csv)
from folksonet.errors import ConfigError
from folksonet.similarity import SimilarityMatrix
from folksonet.spectral import build_q, eigendecompose


def blobs(rng, centers, per, sigma):
    pts = np.vstack([c + sigma * rng.normal(size=(per, len(c))) for c in centers])
    return pts, np.repeat(np.arange(len(centers)), per)


def ids(n):
    return tuple(f"r{i}" for i in range(n))


def test_two_separated_groups():
    x = np.array([[0.0], [0.1], [0.05], [10.0], [10.2]])
    labels = cluster(x, 2)
    assert labels[0] == labels[1] == labels[2] != labels[3] == labels[4]


def test_k1_all_zero():
    assert cluster(np.random.default_rng(0).random((7, 2)), 1).tolist() == [0] * 7


def test_three_gaussian_blobs():
    rng = np.random.default_rng(0)
    pts, truth = blobs(rng, np.array([[0, 0], [1, 0], [0, 1.0]]), 20, 0.01)
    assert adjusted_rand_score(truth, cluster(pts, 3, seed=0)) == 1.0


def test_kmeans_errors():
    with pytest.raises(ConfigError):
        kmeans(np.zeros((3, 2)), 2)
    with pytest.raises(ConfigError):
        kmeans(np.zeros((3, 2)), 4)
    with pytest.raises(ConfigError):
        kmeans(np.zeros((3, 2)), 0)


def test_kmeans_deterministic():
    x = np.random.default_rng(3).random((50, 3))
    assert np.array_equal(kmeans(x, 4, seed=7), kmeans(x.copy(), 4, seed=7))


def test_kmeans_uses_all_clusters():
    # duplicated points invite empty clusters; every label must still appear
    x = np.array([[0.0]] * 10 + [[1.0]] * 10 + [[2.0]])
    assert sorted(set(kmeans(x, 3).tolist())) == [0, 1, 2]


@given(st.integers(0, 10 ** 6))
def test_rotation_invariance(seed):
    rng = np.random.default_rng(seed)
    pts, _ = blobs(rng, rng.uniform(-5, 5, size=(3, 3)), 10, 0.3)
    rot, _ = np.linalg.qr(rng.normal(size=(3, 3)))
    a = cluster(pts, 3, seed=1)
    b = cluster(pts @ rot, 3, seed=1)
    assert adjusted_rand_score(a, b) == 1.0


def test_normalize_rows_flag():
    # points along two rays: the direction separates them, not the distance from the origin
    t = np.linspace(0.1, 5, 10)[:, None]
    pts = np.vstack([t * [1.0, 0.05], t * [0.05, 1.0]])
    truth = np.repeat([0, 1], 10)
    assert adjusted_rand_score(truth, cluster(pts, 2, normalize_rows=True)) == 1.0


# --- embedding ----------------------------------------------------------------

def planted_w(rng, sizes, p_in=0.8, p_out=0.05):
    n = sum(sizes)
    truth = np.repeat(np.arange(len(sizes)), sizes)
    same = truth[:, None] == truth[None, :]
    v = rng.random((n, n)) * np.where(same, p_in, p_out)
    v = np.triu(v, 1)
    v = v + v.T
    np.fill_diagonal(v, 1)
    return v, truth


def test_embed_connected_columns():
    w, _ = planted_w(np.random.default_rng(0), [10, 10, 10])
    r = eigendecompose(build_q(w))
    e = embed(r, 3)
    assert e.eigen_indices == (1, 2, 3)
    assert np.array_equal(e.points, r.eigenvectors[:, 1:4])
    assert np.abs(e.points.mean(axis=0)).max() < 1e-8


def test_embed_two_components():
    w = np.kron(np.eye(2), np.full((4, 4), 0.5))
    w[0, 1] = w[1, 0] = 0.9
    np.fill_diagonal(w, 1)
    r = eigendecompose(build_q(w))
    e = embed(r, 1)
    assert e.eigen_indices == (2,)
    assert r.eigenvalues[2] > 1e-8


def test_embed_errors():
    r = eigendecompose(build_q(np.ones((3, 3))))
    with pytest.raises(ConfigError):
        embed(r, 0)
    with pytest.raises(ConfigError):
        embed(r, 3)


@pytest.mark.parametrize("seed", range(4))
def test_spectral_labels_recover_planted(seed):
    w, truth = planted_w(np.random.default_rng(seed), [15, 12, 9])
    r = eigendecompose(build_q(w))
    assert adjusted_rand_score(truth, spectral_labels(r, 3, 2)) == 1.0


def test_spectral_labels_components_split_further():
    # two components, one of which holds two planted blocks
    w1, t1 = planted_w(np.random.default_rng(1), [10, 10], p_in=0.9, p_out=0.02)
    w = np.zeros((28, 28))
    w[:20, :20] = w1
    w[20:, 20:] = 0.7
    np.fill_diagonal(w, 1)
    truth = np.concatenate([t1, [2] * 8])
    r = eigendecompose(build_q(w))
    assert adjusted_rand_score(truth, spectral_labels(r, 3, 1)) == 1.0
    assert adjusted_rand_score(truth >= 2, spectral_labels(r, 2, 1)) == 1.0


# --- assignment ---------------------------------------------------------------

def test_make_assignment_size_order():
    a = make_assignment([1, 1, 0])
    assert a.labels.tolist() == [0, 0, 1]
    assert a.permutation.tolist() == [0, 1, 2]
    assert a.k == 2 and a.sizes() == [2, 1]


def test_make_assignment_tie():
    a = make_assignment([0, 1, 0, 1])
    assert a.labels.tolist() == [0, 1, 0, 1]
    assert a.permutation.tolist() == [0, 2, 1, 3]
    assert make_assignment([1, 0, 1, 0]).permutation.tolist() == [0, 2, 1, 3]


def test_make_assignment_empty():
    with pytest.raises(ConfigError):
        make_assignment([])


label_lists = st.lists(st.integers(0, 6), min_size=1, max_size=40)


@given(label_lists)
def test_permutation_groups_blocks(labels):
    a = make_assignment(labels)
    grouped = a.labels[a.permutation]
    assert np.all(np.diff(grouped) >= 0)
    assert sorted(a.permutation.tolist()) == list(range(len(labels)))
    sizes = a.sizes()
    assert sizes == sorted(sizes, reverse=True) and min(sizes) >= 1
    for lab in range(a.k):
        members = a.permutation[grouped == lab]
        assert np.all(np.diff(members) > 0)


@given(label_lists, st.permutations(list(range(7))))
def test_assignment_rename_invariant(labels, rename):
    a = make_assignment(labels)
    b = make_assignment([rename[x] for x in labels])
    assert np.array_equal(a.permutation, b.permutation)
    assert np.array_equal(a.labels, b.labels)


def test_reorder_identity_and_reversal():
    m = SimilarityMatrix(("a", "b"), np.array([[1, 0.3], [0.3, 1.0]]))
    same = reorder_matrix(m, make_assignment([0, 1]))
    assert np.array_equal(same.values, m.values) and same.resources == ("a", "b")
    v = np.array([[1, 0.3], [0.3, 0.5]])
    m = SimilarityMatrix(("a", "b"), v)
    a = make_assignment([1, 0])
    a = type(a)(a.labels, a.k, np.array([1, 0]))
    flipped = reorder_matrix(m, a)
    assert flipped.values.tolist() == [[0.5, 0.3], [0.3, 1.0]] and flipped.resources == ("b", "a")


def test_reorder_size_mismatch():
    m = SimilarityMatrix(("a", "b"), np.eye(2))
    with pytest.raises(ConfigError):
        reorder_matrix(m, make_assignment([0, 1, 1]))


@given(st.integers(0, 10 ** 6), st.integers(1, 20))
def test_reorder_entries_preserved(seed, n):
    rng = np.random.default_rng(seed)
    v = rng.random((n, n))
    v = (v + v.T) / 2
    np.fill_diagonal(v, 1)
    m = SimilarityMatrix(ids(n), v)
    a = make_assignment(rng.integers(0, 3, size=n))
    out = reorder_matrix(m, a)
    p = a.permutation
    assert np.array_equal(np.sort(out.values, axis=None), np.sort(v, axis=None))
    assert np.array_equal(out.values, out.values.T)
    # P M P^T with P[i, p[i]] = 1
    perm = np.zeros((n, n))
    perm[np.arange(n), p] = 1
    assert np.array_equal(out.values, perm @ v @ perm.T)


def test_block_contrast_examples():
    labels = [0, 0, 1, 1]
    v = np.kron(np.eye(2), np.ones((2, 2)))
    a = make_assignment(labels)
    assert block_contrast(SimilarityMatrix(ids(4), v), a) == (1.0, 0.0)
    u = np.full((4, 4), 0.4)
    np.fill_diagonal(u, 1)
    w_in, w_out = block_contrast(SimilarityMatrix(ids(4), u), a)
    assert w_in == pytest.approx(w_out)


def test_block_contrast_reordered_flag():
    labels = [0, 1, 0, 1, 1]
    v = np.where(np.equal.outer(labels, labels), 0.9, 0.1)
    np.fill_diagonal(v, 1)
    m = SimilarityMatrix(ids(5), v)
    a = make_assignment(labels)
    assert block_contrast(m, a) == block_contrast(reorder_matrix(m, a), a, reordered=True)
    assert block_contrast(m, a) == pytest.approx((0.9, 0.1))


def test_block_contrast_errors():
    m = SimilarityMatrix(ids(3), np.eye(3))
    with pytest.raises(ConfigError):
        block_contrast(m, make_assignment([0, 0, 0]))
    with pytest.raises(ConfigError):
        block_contrast(m, make_assignment([0, 1, 2]))


def test_assignment_csv_round_trip(tmp_path):
    a = make_assignment([2, 0, 2, 1, 0, 2])
    res = [f"r{i}" for i in range(6)]
    write_assignment_csv(res, a, tmp_path / "a.csv")
    lines = (tmp_path / "a.csv").read_text().splitlines()
    assert lines[0] == "resource_id,community,permuted_index"
    assert lines[1] == "r0,0,0"
    back_res, back = read_assignment_csv(tmp_path / "a.csv")
    assert back_res == res
    assert np.array_equal(back.labels, a.labels) and np.array_equal(back.permutation, a.permutation)


def test_embedding_csv(tmp_path):
    e = Embedding(np.array([[0.5, -0.25], [0.1, 0.2]]), (1, 2))
    write_embedding_csv(["a", "b"], e, tmp_path / "e.csv")
    assert (tmp_path / "e.csv").read_text().splitlines() == ["resource_id,v2,v3", "a,0.5,-0.25",
                                                             "b,0.10000000000000001,0.20000000000000001"]
