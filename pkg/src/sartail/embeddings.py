"""Labeled feature-vector sets and their binary interchange format.

This is the boundary between deep feature extraction (external) and the
balancing/classification pipeline. File layout, little-endian throughout:

    magic  "LTEB1"            (5 bytes)
    u32    n                  number of records
    u32    dim                vector dimensionality
    u32    n_classes          class vocabulary size
    n x { u32 label; dim x float32 }   records, no padding

Validation is total: a file that violates any invariant (bad magic,
truncation, trailing bytes, label out of range, non-finite component,
zero n/dim) never yields an EmbeddingSet.
"""

import struct
from dataclasses import dataclass

import numpy as np

from .errors import FormatError, ValidationError

MAGIC = b"LTEB1"
_HEADER = struct.Struct("<III")


@dataclass(frozen=True)
class EmbeddingSet:
    """n labeled float32 vectors with a class vocabulary of size n_classes."""

    vectors: np.ndarray
    labels: np.ndarray
    n_classes: int

    def __post_init__(self):
        vec = np.ascontiguousarray(self.vectors, dtype=np.float32)
        lab = np.ascontiguousarray(self.labels, dtype=np.int64)
        if vec.ndim != 2 or vec.shape[0] < 1 or vec.shape[1] < 1:
            raise ValidationError("vectors must be a non-empty (n, dim) matrix")
        if lab.ndim != 1 or lab.shape[0] != vec.shape[0]:
            raise ValidationError("labels length must equal the number of vectors")
        if self.n_classes < 1:
            raise ValidationError("n_classes must be >= 1")
        if lab.min() < 0 or lab.max() >= self.n_classes:
            raise ValidationError("labels must lie in [0, n_classes)")
        if not np.all(np.isfinite(vec)):
            raise ValidationError("vectors contain non-finite components")
        object.__setattr__(self, "vectors", vec)
        object.__setattr__(self, "labels", lab)

    @property
    def n(self):
        return self.vectors.shape[0]

    @property
    def dim(self):
        return self.vectors.shape[1]

    def take(self, indices):
        """Row subset as a new EmbeddingSet (same vocabulary)."""
        idx = np.asarray(indices, dtype=np.int64)
        return EmbeddingSet(self.vectors[idx], self.labels[idx], self.n_classes)


@dataclass(frozen=True)
class ClassHistogram:
    """Per-class sample counts and the head/tail imbalance ratio."""

    counts: np.ndarray
    imbalance_ratio: float


def _record_dtype(dim):
    return np.dtype([("label", "<u4"), ("vec", "<f4", (dim,))])


def write_embedding_set(emb, path):
    """Serialize to the binary layout; read-back is bitwise identical."""
    rec = np.empty(emb.n, dtype=_record_dtype(emb.dim))
    rec["label"] = emb.labels.astype(np.uint32)
    rec["vec"] = emb.vectors
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(_HEADER.pack(emb.n, emb.dim, emb.n_classes))
        fh.write(rec.tobytes())


def read_embedding_set(path):
    """Parse and validate an embedding file.

    Raises FormatError for structural damage (magic, truncation, size
    mismatch) and ValidationError for invariant violations.
    """
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < len(MAGIC) + _HEADER.size:
        raise FormatError("file too short for header")
    if raw[: len(MAGIC)] != MAGIC:
        raise FormatError("bad magic")
    n, dim, n_classes = _HEADER.unpack_from(raw, len(MAGIC))
    if n < 1 or dim < 1:
        raise ValidationError(f"n and dim must be >= 1, got n={n} dim={dim}")
    expected = len(MAGIC) + _HEADER.size + n * (4 + 4 * dim)
    if len(raw) != expected:
        raise FormatError(
            f"payload size mismatch: expected {expected} bytes, file has {len(raw)}"
        )
    rec = np.frombuffer(raw, dtype=_record_dtype(dim), count=n, offset=len(MAGIC) + _HEADER.size)
    return EmbeddingSet(rec["vec"], rec["label"].astype(np.int64), n_classes)


def class_histogram(emb):
    """Exact per-class counts; ratio is max/min over non-empty classes."""
    counts = np.bincount(emb.labels, minlength=emb.n_classes)
    present = counts[counts > 0]
    ratio = float(present.max()) / float(present.min())
    return ClassHistogram(counts=counts, imbalance_ratio=ratio)
