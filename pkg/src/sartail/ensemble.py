"""Soft-voting aggregation of the per-subset KNN classifiers.

The ensemble probability is the arithmetic mean of the members'
neighbour-vote distributions (members summed in ascending order, so
floating-point results are reproducible); the label is the argmax with
lowest-class-index tie-break. Batch prediction may be chunked across
worker threads; chunks land in preallocated slots, so serial, batched,
and parallel runs are bitwise identical.
"""

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import knn
from .errors import DimensionError, FormatError, ValidationError

MANIFEST_MAGIC = "LTEM1"


@dataclass(frozen=True)
class EnsembleModel:
    members: list
    k: int
    n_classes: int

    def __post_init__(self):
        if not self.members:
            raise ValidationError("ensemble needs at least one member")
        dim = self.members[0].dim
        metric = self.members[0].metric
        for m in self.members:
            if m.dim != dim or m.metric != metric or m.n_classes != self.n_classes:
                raise ValidationError("members must share dim, metric, and n_classes")
        if self.k < 1:
            raise ValidationError("k must be >= 1")

    @property
    def dim(self):
        return self.members[0].dim


@dataclass(frozen=True)
class Prediction:
    proba: np.ndarray
    label: int


def ensemble_predict(model, q):
    """Mean of member vote distributions for one query vector."""
    q = np.asarray(q, dtype=np.float64).reshape(1, -1)
    proba, labels = _predict_matrix(model, q)
    return Prediction(proba=proba[0], label=int(labels[0]))


def ensemble_predict_batch(model, queries, threads=1):
    """Per-row ensemble predictions; order preserved, thread-count invariant."""
    queries = np.ascontiguousarray(queries, dtype=np.float64)
    if queries.ndim != 2:
        raise DimensionError("queries must be a 2-D matrix")
    if queries.shape[1] != model.dim:
        raise DimensionError(f"query dim {queries.shape[1]} != model dim {model.dim}")

    m = queries.shape[0]
    proba = np.empty((m, model.n_classes), dtype=np.float64)
    labels = np.empty(m, dtype=np.int64)

    threads = max(1, int(threads))
    if threads == 1 or m < 2 * threads:
        proba[...], labels[...] = _predict_matrix(model, queries)
    else:
        bounds = np.linspace(0, m, threads + 1, dtype=np.int64)
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futs = []
            for t in range(threads):
                lo, hi = int(bounds[t]), int(bounds[t + 1])
                if lo < hi:
                    futs.append((lo, hi, pool.submit(_predict_matrix, model, queries[lo:hi])))
            for lo, hi, fut in futs:
                proba[lo:hi], labels[lo:hi] = fut.result()

    return [Prediction(proba=proba[i], label=int(labels[i])) for i in range(m)]


def _predict_matrix(model, queries):
    acc = np.zeros((queries.shape[0], model.n_classes), dtype=np.float64)
    for member in model.members:
        acc += knn.predict_proba_batch(member, queries, model.k)
    acc /= float(len(model.members))
    return acc, np.argmax(acc, axis=1)


# ---------------------------------------------------------------------------
# Model manifest: member index paths plus k and n_classes.
# ---------------------------------------------------------------------------


def save_model(model, manifest_path, member_paths):
    """Persist member indexes and write the manifest referencing them."""
    if len(member_paths) != len(model.members):
        raise ValidationError("one path per member required")
    for member, path in zip(model.members, member_paths):
        knn.save_index(member, path)
    with open(manifest_path, "w", encoding="utf-8") as fh:
        fh.write(f"{MANIFEST_MAGIC}\n")
        fh.write(f"k {model.k}\n")
        fh.write(f"n_classes {model.n_classes}\n")
        for path in member_paths:
            fh.write(f"member {os.path.basename(str(path))}\n")


def load_model(manifest_path):
    base = os.path.dirname(os.path.abspath(manifest_path))
    with open(manifest_path, "r", encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh.read().splitlines() if ln.strip()]
    if not lines or lines[0] != MANIFEST_MAGIC:
        raise FormatError("bad model manifest")
    k = None
    n_classes = None
    members = []
    for line in lines[1:]:
        key, _, value = line.partition(" ")
        if key == "k":
            k = int(value)
        elif key == "n_classes":
            n_classes = int(value)
        elif key == "member":
            members.append(knn.load_index(os.path.join(base, value)))
        else:
            raise FormatError(f"unknown manifest entry: {key}")
    if k is None or n_classes is None or not members:
        raise FormatError("manifest missing k, n_classes, or members")
    return EnsembleModel(members=members, k=k, n_classes=n_classes)


# ---------------------------------------------------------------------------
# Prediction CSV: query_id, predicted label, per-class probabilities.
# ---------------------------------------------------------------------------


def write_predictions_csv(predictions, path):
    if not predictions:
        raise ValidationError("no predictions to write")
    n_classes = predictions[0].proba.shape[0]
    header = "query_id,label," + ",".join(f"p_{c}" for c in range(n_classes))
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(header + "\n")
        for i, pred in enumerate(predictions):
            probs = ",".join(repr(float(p)) for p in pred.proba)
            fh.write(f"{i},{pred.label},{probs}\n")


def read_predictions_csv(path):
    """Returns (labels, proba matrix) in query order."""
    with open(path, "r", encoding="ascii") as fh:
        lines = fh.read().splitlines()
    if not lines or not lines[0].startswith("query_id,label,"):
        raise FormatError("bad predictions CSV header")
    labels = []
    rows = []
    for line in lines[1:]:
        parts = line.split(",")
        if len(parts) < 3:
            raise FormatError("malformed predictions CSV row")
        labels.append(int(parts[1]))
        rows.append([float(tok) for tok in parts[2:]])
    if not rows:
        raise FormatError("predictions CSV has no rows")
    return np.array(labels, dtype=np.int64), np.array(rows, dtype=np.float64)
