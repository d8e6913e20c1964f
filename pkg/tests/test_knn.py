import numpy as np
import pytest

import oracles
from sartail.embeddings import EmbeddingSet
from sartail.errors import DegenerateError, DimensionError, FormatError, ValidationError
from sartail.knn import (
    build_index,
    load_index,
    predict_proba,
    predict_proba_batch,
    query_knn,
    save_index,
)


def make_set(vectors, labels, n_classes):
    return EmbeddingSet(np.asarray(vectors, dtype=np.float32), np.asarray(labels), n_classes)


def random_set(n, dim, n_classes, seed):
    rng = np.random.default_rng(seed)
    return make_set(rng.normal(size=(n, dim)), rng.integers(0, n_classes, size=n), n_classes)


def test_single_point_index_answers_everything():
    emb = make_set([[1.0, 2.0]], [0], 1)
    index = build_index(emb, [0])
    for q in ([0.0, 0.0], [5.0, 5.0]):
        nb = query_knn(index, q, 3)
        assert nb.indices.tolist() == [0]


def test_matches_bruteforce_on_random_data():
    emb = random_set(1000, 16, 5, seed=4)
    index = build_index(emb)
    rng = np.random.default_rng(5)
    queries = rng.normal(size=(40, 16))
    want_d, want_i = oracles.brute_knn(emb.vectors, queries, 1)
    got_d2, got_i = index.raw_query(queries, 1)
    assert np.array_equal(got_i, want_i)
    assert np.allclose(np.sqrt(got_d2), want_d, atol=1e-9)


@pytest.mark.parametrize("metric", ["euclidean", "cosine"])
def test_matches_bruteforce_k3(metric):
    emb = random_set(200, 8, 4, seed=6)
    index = build_index(emb, metric=metric)
    rng = np.random.default_rng(7)
    queries = rng.normal(size=(50, 8))
    want_d, want_i = oracles.brute_knn(emb.vectors, queries, 3, metric)
    for r, q in enumerate(queries):
        nb = query_knn(index, q, 3)
        assert np.array_equal(nb.indices, want_i[r])
        assert np.allclose(nb.distances, want_d[r], atol=1e-9)


def test_stored_point_comes_back_first():
    emb = random_set(50, 4, 3, seed=8)
    index = build_index(emb)
    nb = query_knn(index, emb.vectors[17], 3)
    assert nb.indices[0] == 17
    assert nb.distances[0] == 0.0


def test_k_larger_than_subset_is_capped():
    emb = random_set(5, 3, 2, seed=9)
    index = build_index(emb)
    nb = query_knn(index, np.zeros(3), 20)
    assert nb.indices.shape == (5,)
    assert np.array_equal(np.sort(nb.indices), np.arange(5))


def test_distances_sorted_with_index_tiebreak():
    emb = make_set([[0.0], [1.0], [0.0], [1.0], [0.0]], [0, 1, 0, 1, 0], 2)
    index = build_index(emb)
    nb = query_knn(index, [0.0], 5)
    assert nb.indices.tolist() == [0, 2, 4, 1, 3]
    assert np.all(np.diff(nb.distances) >= 0)


def test_dimension_mismatch():
    index = build_index(random_set(10, 4, 2, seed=1))
    with pytest.raises(DimensionError):
        query_knn(index, np.zeros(5), 1)


def test_empty_subset_rejected():
    emb = random_set(10, 4, 2, seed=2)
    with pytest.raises(DegenerateError):
        build_index(emb, [])


def test_subset_out_of_range_rejected():
    emb = random_set(10, 4, 2, seed=2)
    with pytest.raises(ValidationError):
        build_index(emb, [0, 10])


def test_zero_vector_rejected_under_cosine():
    emb = make_set([[0.0, 0.0], [1.0, 0.0]], [0, 1], 2)
    with pytest.raises(ValidationError):
        build_index(emb, metric="cosine")


# ---------------------------------------------------------------------------
# predict_proba
# ---------------------------------------------------------------------------


def test_predict_proba_counts_neighbours():
    # neighbours of the origin carry labels [2, 2, 5] out of 10 classes
    vectors = [[0.1], [0.2], [0.3], [50.0], [60.0]]
    labels = [2, 2, 5, 1, 0]
    index = build_index(make_set(vectors, labels, 10))
    proba = predict_proba(index, [0.0], 3)
    want = np.zeros(10)
    want[2] = 2 / 3
    want[5] = 1 / 3
    assert np.allclose(proba, want)
    assert proba.sum() == pytest.approx(1.0, abs=1e-9)


def test_predict_proba_k1_is_one_hot():
    emb = random_set(30, 4, 6, seed=3)
    index = build_index(emb)
    q = emb.vectors[11]
    proba = predict_proba(index, q, 1)
    assert proba[emb.labels[11]] == 1.0
    assert proba.sum() == 1.0


def test_predict_proba_matches_bruteforce_counting():
    emb = random_set(300, 6, 5, seed=10)
    index = build_index(emb)
    rng = np.random.default_rng(11)
    queries = rng.normal(size=(100, 6))
    _, nn = oracles.brute_knn(emb.vectors, queries, 4)
    batch = predict_proba_batch(index, queries, 4)
    for r in range(queries.shape[0]):
        counts = np.bincount(emb.labels[nn[r]], minlength=5)
        assert np.allclose(batch[r], counts / 4.0)
        assert batch[r].sum() == pytest.approx(1.0, abs=1e-9)


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("metric", ["euclidean", "cosine"])
def test_save_load_roundtrip(tmp_path, metric):
    emb = random_set(80, 5, 4, seed=12)
    index = build_index(emb, metric=metric)
    path = tmp_path / "i.ltix"
    save_index(index, path)
    back = load_index(path)
    assert back.metric == metric
    assert np.array_equal(back.vectors, index.vectors)
    assert np.array_equal(back.labels, index.labels)
    rng = np.random.default_rng(13)
    queries = rng.normal(size=(20, 5))
    d1, i1 = index.raw_query(queries, 3)
    d2, i2 = back.raw_query(queries, 3)
    assert np.array_equal(i1, i2) and np.array_equal(d1, d2)


def test_load_rejects_bad_magic(tmp_path):
    p = tmp_path / "bad.ltix"
    p.write_bytes(b"XXXXX" + b"\x00" * 30)
    with pytest.raises(FormatError):
        load_index(p)


def test_load_rejects_truncation(tmp_path):
    emb = random_set(10, 3, 2, seed=14)
    index = build_index(emb)
    p = tmp_path / "t.ltix"
    save_index(index, p)
    p.write_bytes(p.read_bytes()[:-5])
    with pytest.raises(FormatError):
        load_index(p)
