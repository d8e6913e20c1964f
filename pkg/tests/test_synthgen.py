import numpy as np
import pytest

from sartail.errors import ConfigError
from sartail.knn import build_index, predict_proba_batch
from sartail.synthgen import (
    GeneratorConfig,
    class_sizes,
    generate_holdout,
    generate_longtail,
    write_counts_csv,
)


def test_flat_distribution_when_ratio_one():
    cfg = GeneratorConfig(n_classes=5, head_size=40, imbalance_ratio=1.0, dim=4, seed=1)
    counts = np.bincount(generate_longtail(cfg).labels)
    assert np.all(counts == 40)


def test_tail_size_follows_ratio():
    cfg = GeneratorConfig(n_classes=10, head_size=10_000, imbalance_ratio=1000.0, dim=4, seed=2)
    sizes = class_sizes(cfg)
    assert sizes[0] == 10_000
    assert sizes[-1] == 10


def test_counts_monotone_and_ratio_accurate():
    for ratio in (3.0, 47.0, 1000.0):
        cfg = GeneratorConfig(n_classes=8, head_size=5000, imbalance_ratio=ratio, dim=2, seed=3)
        counts = np.bincount(generate_longtail(cfg).labels, minlength=8)
        assert np.all(np.diff(counts) <= 0)
        got = counts.max() / counts.min()
        assert abs(got - ratio) / ratio <= 0.01


def test_same_seed_reproduces_bitwise():
    cfg = GeneratorConfig(n_classes=4, head_size=200, imbalance_ratio=10.0, dim=6, seed=9)
    a = generate_longtail(cfg)
    b = generate_longtail(cfg)
    assert np.array_equal(a.vectors, b.vectors)
    assert np.array_equal(a.labels, b.labels)
    c = generate_longtail(GeneratorConfig(n_classes=4, head_size=200, imbalance_ratio=10.0, dim=6, seed=10))
    assert not np.array_equal(a.vectors, c.vectors)


def test_well_separated_clusters_are_nearest_neighbour_learnable():
    cfg = GeneratorConfig(
        n_classes=6,
        head_size=300,
        imbalance_ratio=20.0,
        dim=16,
        cluster_spread=1.0,
        cluster_separation=8.0,
        seed=4,
    )
    train = generate_longtail(cfg)
    holdout = generate_holdout(cfg, per_class=30)
    index = build_index(train)
    proba = predict_proba_batch(index, holdout.vectors, 1)
    acc = np.mean(proba.argmax(axis=1) == holdout.labels)
    assert acc >= 0.95


def test_holdout_is_balanced_and_deterministic():
    cfg = GeneratorConfig(n_classes=5, head_size=100, imbalance_ratio=10.0, dim=4, seed=5)
    h1 = generate_holdout(cfg, per_class=7)
    h2 = generate_holdout(cfg, per_class=7)
    assert np.array_equal(h1.vectors, h2.vectors)
    assert np.all(np.bincount(h1.labels) == 7)
    train = generate_longtail(cfg)
    # independent stream: holdout rows do not replicate training rows
    assert not any(np.array_equal(h1.vectors[0], v) for v in train.vectors)


def test_config_validation():
    with pytest.raises(ConfigError):
        GeneratorConfig(n_classes=1)
    with pytest.raises(ConfigError):
        GeneratorConfig(imbalance_ratio=0.5)
    with pytest.raises(ConfigError):
        GeneratorConfig(head_size=10, imbalance_ratio=100.0)
    with pytest.raises(ConfigError):
        GeneratorConfig(cluster_spread=0.0)


def test_counts_csv(tmp_path):
    cfg = GeneratorConfig(n_classes=3, head_size=50, imbalance_ratio=5.0, dim=2, seed=6)
    emb = generate_longtail(cfg)
    path = tmp_path / "counts.csv"
    write_counts_csv(emb, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "class,count"
    counts = np.bincount(emb.labels)
    for c, line in enumerate(lines[1:]):
        assert line == f"{c},{counts[c]}"
