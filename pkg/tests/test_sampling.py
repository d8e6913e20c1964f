import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from sartail.embeddings import EmbeddingSet
from sartail.errors import DegenerateError, FormatError, TargetError
from sartail.sampling import (
    SamplerConfig,
    SubsetPlan,
    TomekLink,
    build_balanced_subsets,
    find_tomek_links,
    nearmiss3_select,
    read_subset_plan,
    remove_tomek_majority,
    write_subset_plan,
)


def make_set(vectors, labels, n_classes=None):
    labels = np.asarray(labels)
    if n_classes is None:
        n_classes = int(labels.max()) + 1
    return EmbeddingSet(np.asarray(vectors, dtype=np.float32), labels, n_classes)


def clustered_set(n, dim, n_classes, seed, spread=1.0, duplicates=False):
    rng = np.random.default_rng(seed)
    centroids = 2.0 * rng.normal(size=(n_classes, dim))
    labels = rng.integers(0, n_classes, size=n)
    vectors = centroids[labels] + spread * rng.normal(size=(n, dim))
    if duplicates and n >= 8:
        # exact coincident points exercise the tie-break paths
        for _ in range(n // 8):
            i, j = rng.integers(0, n, size=2)
            vectors[i] = vectors[j]
    return make_set(vectors, labels, n_classes)


# ---------------------------------------------------------------------------
# Tomek links
# ---------------------------------------------------------------------------


def test_simple_boundary_link():
    emb = make_set([[0.0], [0.4], [5.0]], [0, 1, 1])
    assert find_tomek_links(emb) == [TomekLink(0, 1)]


def test_single_class_has_no_links():
    emb = make_set([[0.0], [0.1], [0.2]], [0, 0, 0], n_classes=1)
    assert find_tomek_links(emb) == []


def test_coincident_pair_links_despite_far_third():
    emb = make_set([[1.0, 1.0], [1.0, 1.0], [9.0, 9.0]], [0, 1, 1])
    assert find_tomek_links(emb) == [TomekLink(0, 1)]


def test_too_few_samples():
    with pytest.raises(DegenerateError):
        find_tomek_links(make_set([[0.0]], [0], 1))


@pytest.mark.parametrize("metric", ["euclidean", "cosine"])
@pytest.mark.parametrize("seed", [0, 1, 2, 3])
def test_links_match_bruteforce(metric, seed):
    emb = clustered_set(120, 3, 3, seed, spread=1.5, duplicates=True)
    cfg = SamplerConfig(metric=metric)
    got = [(l.a, l.b) for l in find_tomek_links(emb, cfg)]
    assert got == oracles.tomek_links(emb.vectors, emb.labels, metric)


def test_links_are_canonical_and_mutual():
    emb = clustered_set(150, 4, 4, seed=9, spread=2.0, duplicates=True)
    links = find_tomek_links(emb)
    nn = oracles.nearest_excluding_self(emb.vectors)
    seen = set()
    for link in links:
        assert link.a < link.b
        assert (link.a, link.b) not in seen
        seen.add((link.a, link.b))
        assert emb.labels[link.a] != emb.labels[link.b]
        assert nn[link.a] == link.b and nn[link.b] == link.a


# ---------------------------------------------------------------------------
# Majority removal
# ---------------------------------------------------------------------------


def test_majority_member_removed():
    emb = make_set([[float(i)] for i in range(7)], [0, 0, 0, 0, 0, 1, 1])
    cleaned, kept = remove_tomek_majority(emb, [TomekLink(4, 5)])
    assert 4 not in kept and 5 in kept
    assert cleaned.n == 6


def test_tie_removes_neither():
    emb = make_set([[0.0], [0.4], [5.0], [9.0]], [0, 1, 0, 1])
    cleaned, kept = remove_tomek_majority(emb, [TomekLink(0, 1)])
    assert cleaned.n == 4
    assert np.array_equal(kept, np.arange(4))


def test_removal_matches_bruteforce():
    emb = clustered_set(20, 2, 2, seed=5, spread=2.5)
    links = find_tomek_links(emb)
    _, kept = remove_tomek_majority(emb, links)
    want = oracles.remove_tomek_majority(emb.labels, [(l.a, l.b) for l in links])
    assert kept.tolist() == want


def test_smallest_class_never_removed():
    for seed in range(6):
        emb = clustered_set(100, 3, 3, seed=seed, spread=2.0)
        counts = np.bincount(emb.labels, minlength=emb.n_classes)
        smallest = counts.argmin()
        links = find_tomek_links(emb)
        _, kept = remove_tomek_majority(emb, links)
        kept_counts = np.bincount(emb.labels[kept], minlength=emb.n_classes)
        assert kept_counts[smallest] == counts[smallest]


# ---------------------------------------------------------------------------
# NearMiss-3
# ---------------------------------------------------------------------------


def test_nearmiss_two_step_rule_by_hand():
    # class 0 is oversized: {0.1, 0.2, 0.3, 9.0}; single outside point at 0.0.
    # m=3 shortlist -> {0.1, 0.2, 0.3}; k=1 farthest-average -> keep 0.3, 0.2.
    emb = make_set([[0.1], [0.2], [0.3], [9.0], [0.0]], [0, 0, 0, 0, 1])
    cfg = SamplerConfig(nearmiss_shortlist_m=3, nearmiss_k=1)
    reduced, kept = nearmiss3_select(emb, np.array([2, 5]), cfg)
    assert kept.tolist() == [1, 2, 4]
    assert reduced.n == 3


def test_class_at_target_passes_through():
    emb = make_set([[0.0], [1.0], [2.0], [3.0]], [0, 0, 1, 1])
    reduced, kept = nearmiss3_select(emb, np.array([2, 2]))
    assert kept.tolist() == [0, 1, 2, 3]


def test_shortlist_padding_with_remaining_members():
    # single outside point, m=1: shortlist has 1 member but target is 2,
    # so the padding rule must top it up by ascending index.
    emb = make_set([[0.0], [4.0], [5.0], [6.0]], [1, 0, 0, 0])
    cfg = SamplerConfig(nearmiss_shortlist_m=1, nearmiss_k=1)
    reduced, kept = nearmiss3_select(emb, np.array([2, 1]), cfg)
    want = oracles.nearmiss3(emb.vectors, emb.labels, [2, 1], 1, 1)
    assert kept.tolist() == want


def test_negative_target_rejected():
    emb = make_set([[0.0], [1.0]], [0, 1])
    with pytest.raises(TargetError):
        nearmiss3_select(emb, np.array([-1, 1]))


@pytest.mark.parametrize("metric", ["euclidean", "cosine"])
@pytest.mark.parametrize("seed", [0, 1, 2])
def test_nearmiss_matches_bruteforce(metric, seed):
    emb = clustered_set(100, 4, 3, seed=seed + 20, spread=1.8, duplicates=True)
    counts = np.bincount(emb.labels, minlength=3)
    targets = np.full(3, counts.min(), dtype=np.int64)
    cfg = SamplerConfig(metric=metric, nearmiss_shortlist_m=3, nearmiss_k=3)
    _, kept = nearmiss3_select(emb, targets, cfg)
    want = oracles.nearmiss3(emb.vectors, emb.labels, targets.tolist(), 3, 3, metric)
    assert kept.tolist() == want


def test_nearmiss_deterministic():
    emb = clustered_set(150, 5, 4, seed=31, spread=1.5)
    targets = np.full(4, 8, dtype=np.int64)
    _, kept1 = nearmiss3_select(emb, targets)
    _, kept2 = nearmiss3_select(emb, targets)
    assert np.array_equal(kept1, kept2)


# ---------------------------------------------------------------------------
# Balanced subsets
# ---------------------------------------------------------------------------


def test_single_subset_balanced_classes():
    emb = make_set([[float(i)] for i in range(12)], [0] * 4 + [1] * 4 + [2] * 4)
    plan = build_balanced_subsets(emb, 1, 4)
    assert len(plan.subsets) == 1
    sub = plan.subsets[0]
    assert len(sub) == 12 and len(set(sub.tolist())) == 12


def test_head_class_partitions_exactly_across_subsets():
    labels = np.array([0] * 70 + [1] * 10)
    emb = make_set(np.arange(80, dtype=np.float64)[:, None], labels)
    plan = build_balanced_subsets(emb, 7, 10, SamplerConfig(seed=3))
    head_taken = []
    for sub in plan.subsets:
        head = [i for i in sub if labels[i] == 0]
        assert len(head) == 10
        assert len(set(head)) == 10
        head_taken.extend(head)
    assert sorted(head_taken) == list(range(70))  # full coverage, zero overlap


def test_small_class_appears_in_every_subset():
    labels = np.array([0] * 40 + [1] * 3)
    emb = make_set(np.arange(43, dtype=np.float64)[:, None], labels)
    plan = build_balanced_subsets(emb, 4, 10, SamplerConfig(seed=1))
    for sub in plan.subsets:
        tail = sorted(i for i in sub if labels[i] == 1)
        assert tail == [40, 41, 42]


def test_subset_class_counts_satisfy_balance_invariant():
    emb = clustered_set(200, 3, 5, seed=8)
    counts = np.bincount(emb.labels, minlength=5)
    target = 12
    plan = build_balanced_subsets(emb, 5, target, SamplerConfig(seed=7))
    for sub in plan.subsets:
        assert len(set(sub.tolist())) == len(sub)
        got = np.bincount(emb.labels[sub], minlength=5)
        assert np.array_equal(got, np.minimum(counts, target))


def test_coverage_across_subsets():
    for size, n_subsets, target in [(25, 3, 10), (100, 4, 10), (7, 5, 3)]:
        labels = np.zeros(size + 5, dtype=np.int64)
        labels[size:] = 1
        emb = make_set(np.arange(size + 5, dtype=np.float64)[:, None], labels)
        plan = build_balanced_subsets(emb, n_subsets, target, SamplerConfig(seed=5))
        covered = set()
        for sub in plan.subsets:
            covered.update(i for i in sub.tolist() if labels[i] == 0)
        assert len(covered) >= min(size, n_subsets * target)


def test_subsets_deterministic_given_seed():
    emb = clustered_set(120, 4, 4, seed=13)
    p1 = build_balanced_subsets(emb, 3, 9, SamplerConfig(seed=21))
    p2 = build_balanced_subsets(emb, 3, 9, SamplerConfig(seed=21))
    p3 = build_balanced_subsets(emb, 3, 9, SamplerConfig(seed=22))
    assert all(np.array_equal(a, b) for a, b in zip(p1.subsets, p2.subsets))
    assert any(not np.array_equal(a, b) for a, b in zip(p1.subsets, p3.subsets))


def test_invalid_plan_parameters():
    emb = clustered_set(10, 2, 2, seed=1)
    with pytest.raises(TargetError):
        build_balanced_subsets(emb, 0, 3)
    with pytest.raises(TargetError):
        build_balanced_subsets(emb, 2, 0)


def test_plan_file_roundtrip(tmp_path):
    plan = SubsetPlan(
        subsets=[np.array([0, 2, 4], dtype=np.int64), np.array([1, 3], dtype=np.int64)],
        per_class_target=2,
    )
    path = tmp_path / "p.ltsp"
    write_subset_plan(plan, path)
    assert path.read_text().splitlines()[0] == "LTSP1 2 2"
    back = read_subset_plan(path)
    assert back.per_class_target == 2
    assert [s.tolist() for s in back.subsets] == [[0, 2, 4], [1, 3]]


def test_plan_file_rejects_bad_header(tmp_path):
    path = tmp_path / "p.ltsp"
    path.write_text("NOPE 1 2\n0 1\n")
    with pytest.raises(FormatError):
        read_subset_plan(path)
    path.write_text("LTSP1 3 2\n0 1\n")
    with pytest.raises(FormatError):
        read_subset_plan(path)


@settings(max_examples=30, deadline=None)
@given(
    n=st.integers(4, 60),
    dim=st.integers(1, 4),
    n_classes=st.integers(2, 4),
    seed=st.integers(0, 10_000),
)
def test_tomek_property_random(n, dim, n_classes, seed):
    emb = clustered_set(n, dim, n_classes, seed, spread=2.0, duplicates=True)
    links = [(l.a, l.b) for l in find_tomek_links(emb)]
    assert links == oracles.tomek_links(emb.vectors, emb.labels)
