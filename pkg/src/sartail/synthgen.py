"""Seeded synthetic long-tail dataset generator.

Class sizes decay geometrically from ``head_size`` down to
``head_size / imbalance_ratio``; samples are isotropic Gaussians around
seeded random centroids. Lets the balancing pipeline be exercised at desk
scale in the same >1000x head/tail regime as the real data.
"""

from dataclasses import dataclass

import numpy as np

from .embeddings import EmbeddingSet
from .errors import ConfigError


@dataclass(frozen=True)
class GeneratorConfig:
    n_classes: int = 10
    head_size: int = 10_000
    imbalance_ratio: float = 1000.0
    dim: int = 16
    cluster_spread: float = 1.0
    cluster_separation: float = 3.0
    seed: int = 0

    def __post_init__(self):
        if self.n_classes < 2:
            raise ConfigError("need at least 2 classes")
        if self.imbalance_ratio < 1.0:
            raise ConfigError("imbalance ratio must be >= 1")
        if self.head_size / self.imbalance_ratio < 1.0:
            raise ConfigError("tail class would be empty: head_size / ratio < 1")
        if self.dim < 1:
            raise ConfigError("dim must be >= 1")
        if self.cluster_spread <= 0 or self.cluster_separation < 0:
            raise ConfigError("spread must be > 0 and separation >= 0")


def class_sizes(cfg):
    """Per-class counts: geometric decay head -> tail."""
    exponents = -np.arange(cfg.n_classes) / (cfg.n_classes - 1)
    return np.rint(cfg.head_size * cfg.imbalance_ratio**exponents).astype(np.int64)


def _centroids(cfg):
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 0xC3]))
    return cfg.cluster_separation * rng.standard_normal((cfg.n_classes, cfg.dim))


def _draw(cfg, centroids, counts, stream_tag):
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, stream_tag]))
    parts = []
    labels = []
    for c, count in enumerate(counts):
        pts = centroids[c] + cfg.cluster_spread * rng.standard_normal((int(count), cfg.dim))
        parts.append(pts.astype(np.float32))
        labels.append(np.full(int(count), c, dtype=np.int64))
    return EmbeddingSet(np.vstack(parts), np.concatenate(labels), cfg.n_classes)


def generate_longtail(cfg):
    """The long-tail training set; deterministic given the seed."""
    return _draw(cfg, _centroids(cfg), class_sizes(cfg), 0x7A41)


def generate_holdout(cfg, per_class):
    """A balanced evaluation set from the same class centroids, drawn from
    an independent stream so it never overlaps the training draw."""
    if per_class < 1:
        raise ConfigError("per_class must be >= 1")
    counts = np.full(cfg.n_classes, int(per_class), dtype=np.int64)
    return _draw(cfg, _centroids(cfg), counts, 0x8E1D)


def write_counts_csv(emb, path):
    counts = np.bincount(emb.labels, minlength=emb.n_classes)
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("class,count\n")
        for c, count in enumerate(counts):
            fh.write(f"{c},{int(count)}\n")
