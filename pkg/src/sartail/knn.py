"""Exact K-nearest-neighbour index and per-subset classifier.

The index is an accelerator, never an approximation: whichever backend is
active (compiled kd-tree, or brute force for high dimensionality / the pure
lane), query results are identical to an exhaustive scan, with ties broken
by ascending sample index.

Distances are computed as squared euclidean internally. For the cosine
metric, vectors are L2-normalized up front; the reported distance
``|u - v|^2 / 2`` then equals ``1 - cos(u, v)``.
"""

import struct
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import DegenerateError, DimensionError, FormatError, ValidationError

INDEX_MAGIC = b"LTIX1"
_METRICS = ("euclidean", "cosine")
_IDX_HEADER = struct.Struct("<BBIII")  # metric, normalize, n, dim, n_classes


def as_metric_space(vectors, metric, normalize=False):
    """Map vectors into the space where squared euclidean realizes the metric."""
    if metric not in _METRICS:
        raise ValidationError(f"unknown metric: {metric!r}")
    out = np.ascontiguousarray(vectors, dtype=np.float64)
    if metric == "cosine" or normalize:
        norms = np.sqrt(np.einsum("nd,nd->n", out, out))
        if np.any(norms == 0.0):
            raise ValidationError("zero vector is undefined under the cosine metric")
        out = out / norms[:, None]
    return out


def report_distance(d2, metric):
    """Convert internal squared distances to the metric's reported values."""
    if metric == "cosine":
        return d2 / 2.0
    return np.sqrt(d2)


@dataclass(frozen=True)
class Neighborhood:
    """min(K, n) neighbours: ascending distances, index tie-break."""

    indices: np.ndarray
    distances: np.ndarray


class NeighborIndex:
    """Queryable exact-KNN structure over one subset's vectors."""

    def __init__(self, vectors, labels, n_classes, metric="euclidean", normalize=False):
        vectors = np.asarray(vectors, dtype=np.float32)
        labels = np.asarray(labels, dtype=np.int64)
        if vectors.ndim != 2 or vectors.shape[0] == 0:
            raise DegenerateError("cannot build an index over an empty subset")
        if labels.shape[0] != vectors.shape[0]:
            raise ValidationError("labels must align with vectors")
        self.vectors = vectors
        self.labels = labels
        self.n_classes = int(n_classes)
        self.metric = metric
        self.normalize = bool(normalize)
        self._space = as_metric_space(vectors, metric, normalize)
        self._backend = kernels.make_index(self._space)

    @property
    def n(self):
        return self.vectors.shape[0]

    @property
    def dim(self):
        return self.vectors.shape[1]

    @property
    def backend_kind(self):
        return self._backend.kind

    def _prepare_queries(self, queries):
        q = np.atleast_2d(np.asarray(queries, dtype=np.float64))
        if q.shape[1] != self.dim:
            raise DimensionError(f"query dim {q.shape[1]} != index dim {self.dim}")
        return as_metric_space(q, self.metric, self.normalize)

    def raw_query(self, queries, k):
        """(squared distances, indices) for a batch; k capped at n."""
        if k < 1:
            raise ValidationError("k must be >= 1")
        return self._backend.query(self._prepare_queries(queries), int(k))


def build_index(emb, subset=None, metric="euclidean", normalize=False):
    """Index over the given subset rows of an EmbeddingSet (all rows if None)."""
    if subset is None:
        vectors, labels = emb.vectors, emb.labels
    else:
        subset = np.asarray(subset, dtype=np.int64)
        if subset.size == 0:
            raise DegenerateError("cannot build an index over an empty subset")
        if subset.min() < 0 or subset.max() >= emb.n:
            raise ValidationError("subset indices out of range")
        vectors, labels = emb.vectors[subset], emb.labels[subset]
    return NeighborIndex(vectors, labels, emb.n_classes, metric, normalize)


def query_knn(index, q, k):
    """The exact k nearest stored points for a single query vector."""
    d2, idx = index.raw_query(np.asarray(q, dtype=np.float64).reshape(1, -1), k)
    return Neighborhood(indices=idx[0], distances=report_distance(d2[0], index.metric))


def predict_proba(index, q, k):
    """Neighbour-vote class distribution for one query."""
    nb = query_knn(index, q, k)
    counts = np.bincount(index.labels[nb.indices], minlength=index.n_classes)
    return counts / float(nb.indices.shape[0])


def predict_proba_batch(index, queries, k):
    """Row-wise predict_proba over a query matrix; returns (m, n_classes)."""
    _, idx = index.raw_query(queries, k)
    m, kk = idx.shape
    votes = index.labels[idx]
    proba = np.zeros((m, index.n_classes), dtype=np.float64)
    rows = np.repeat(np.arange(m), kk)
    np.add.at(proba, (rows, votes.ravel()), 1.0)
    return proba / float(kk)


# ---------------------------------------------------------------------------
# Persistence: magic "LTIX1"; metric and normalize bytes; u32 n, dim,
# n_classes; float32 vectors; u32 labels. The tree is rebuilt on load.
# ---------------------------------------------------------------------------


def save_index(index, path):
    with open(path, "wb") as fh:
        fh.write(INDEX_MAGIC)
        fh.write(
            _IDX_HEADER.pack(
                _METRICS.index(index.metric),
                int(index.normalize),
                index.n,
                index.dim,
                index.n_classes,
            )
        )
        fh.write(index.vectors.astype("<f4").tobytes())
        fh.write(index.labels.astype("<u4").tobytes())


def load_index(path):
    with open(path, "rb") as fh:
        raw = fh.read()
    if not raw.startswith(INDEX_MAGIC):
        raise FormatError("bad index magic")
    if len(raw) < len(INDEX_MAGIC) + _IDX_HEADER.size:
        raise FormatError("truncated index header")
    metric_b, normalize_b, n, dim, n_classes = _IDX_HEADER.unpack_from(raw, len(INDEX_MAGIC))
    if metric_b >= len(_METRICS):
        raise FormatError(f"unknown metric byte {metric_b}")
    off = len(INDEX_MAGIC) + _IDX_HEADER.size
    expected = off + n * dim * 4 + n * 4
    if len(raw) != expected:
        raise FormatError("index payload size mismatch")
    if n < 1 or dim < 1:
        raise ValidationError("index must contain at least one vector")
    vectors = np.frombuffer(raw, dtype="<f4", count=n * dim, offset=off).reshape(n, dim)
    labels = np.frombuffer(raw, dtype="<u4", count=n, offset=off + n * dim * 4).astype(np.int64)
    if labels.max() >= n_classes:
        raise ValidationError("index labels exceed n_classes")
    return NeighborIndex(vectors, labels, n_classes, _METRICS[metric_b], bool(normalize_b))
