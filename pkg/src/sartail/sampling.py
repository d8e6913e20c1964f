"""Feature-space data balancing.

Three stages, run in this order by the pipeline:

1. Tomek-link cleaning: find mutual cross-class nearest-neighbour pairs and
   drop the majority-side member of each pair (ties drop neither).
2. NearMiss-3 undersampling, one-vs-rest per oversized class: shortlist the
   class members that appear among each outside sample's m nearest
   class-neighbours, then keep the shortlisted members whose average
   distance to their k nearest outside samples is largest.
3. Balanced-subset construction: per class, draw without replacement from a
   seeded shuffled pool across the N subsets, reshuffling when the pool is
   exhausted, so head classes are spread across the ensemble instead of
   being mostly unused.

Every operation is a pure function of (data, config, seed); repeated runs
are byte-identical, and results match an exhaustive O(n^2) re-derivation
exactly (including index tie-breaks).
"""

from dataclasses import dataclass

import numpy as np

from .embeddings import EmbeddingSet
from .errors import DegenerateError, FormatError, TargetError, ValidationError
from .kernels import make_index
from .knn import as_metric_space, report_distance

PLAN_MAGIC = "LTSP1"


@dataclass(frozen=True)
class SamplerConfig:
    metric: str = "euclidean"
    nearmiss_shortlist_m: int = 3
    nearmiss_k: int = 3
    seed: int = 0

    def __post_init__(self):
        if self.nearmiss_shortlist_m < 1 or self.nearmiss_k < 1:
            raise ValidationError("nearmiss m and k must be >= 1")


@dataclass(frozen=True, order=True)
class TomekLink:
    """Canonical (a < b) mutual cross-class nearest-neighbour pair."""

    a: int
    b: int


@dataclass(frozen=True)
class SubsetPlan:
    """N index lists into the cleaned set, balanced per class."""

    subsets: list
    per_class_target: int


def find_tomek_links(emb, cfg=SamplerConfig()):
    """All mutual cross-class 1-NN pairs, ties broken by lowest index."""
    if emb.n < 2:
        raise DegenerateError("need at least 2 samples to form links")
    space = as_metric_space(emb.vectors, cfg.metric)
    index = make_index(space)
    _, idx = index.query(space, 2)
    # Nearest neighbour excluding self: with duplicates the query point may
    # not even appear in its own top-2, so take the first entry that isn't i.
    rows = np.arange(emb.n)
    nn = np.where(idx[:, 0] == rows, idx[:, 1], idx[:, 0])

    links = []
    for i in range(emb.n):
        j = int(nn[i])
        if i < j and nn[j] == i and emb.labels[i] != emb.labels[j]:
            links.append(TomekLink(i, j))
    return links


def remove_tomek_majority(emb, links):
    """Drop the strictly-larger-class member of each link (one pass).

    Class sizes are taken from the input set; equal-sized classes remove
    neither member. Returns (cleaned set, kept original indices).
    """
    counts = np.bincount(emb.labels, minlength=emb.n_classes)
    drop = set()
    for link in links:
        if not (0 <= link.a < emb.n and 0 <= link.b < emb.n):
            raise ValidationError(f"link ({link.a}, {link.b}) out of range")
        ca = counts[emb.labels[link.a]]
        cb = counts[emb.labels[link.b]]
        if ca > cb:
            drop.add(link.a)
        elif cb > ca:
            drop.add(link.b)
    kept = np.array(sorted(set(range(emb.n)) - drop), dtype=np.int64)
    return emb.take(kept), kept


def nearmiss3_select(emb, targets, cfg=SamplerConfig()):
    """NearMiss-3 reduction of every class above its target count.

    ``targets`` gives the desired count per class; classes at or below
    target pass through unchanged. Returns (reduced set, kept indices).
    """
    targets = np.asarray(targets, dtype=np.int64)
    if targets.shape != (emb.n_classes,):
        raise ValidationError("targets must have one entry per class")
    if np.any(targets < 0):
        raise TargetError("per-class targets must be >= 0")

    space = as_metric_space(emb.vectors, cfg.metric)
    counts = np.bincount(emb.labels, minlength=emb.n_classes)
    kept_parts = []
    for c in range(emb.n_classes):
        members = np.flatnonzero(emb.labels == c)
        if counts[c] <= targets[c]:
            kept_parts.append(members)
            continue
        kept_parts.append(_nearmiss3_one_class(space, emb.labels, members, int(targets[c]), cfg))
    kept = np.sort(np.concatenate(kept_parts))
    return emb.take(kept), kept


def _nearmiss3_one_class(space, labels, members, target, cfg):
    outside = np.flatnonzero(labels != labels[members[0]])
    if outside.size == 0 or target == 0:
        # No opposing samples to rank against: keep the first `target` by index.
        return members[:target]

    # Step 1: shortlist class members seen among each outside sample's m
    # nearest class-neighbours. `members` is ascending, so local order is
    # global order and backend tie-breaks carry over.
    class_index = make_index(space[members])
    m = min(cfg.nearmiss_shortlist_m, members.size)
    _, near_local = class_index.query(space[outside], m)
    shortlist = np.unique(near_local)
    if shortlist.size < target:
        remaining = np.setdiff1d(np.arange(members.size), shortlist, assume_unique=True)
        shortlist = np.concatenate([shortlist, remaining[: target - shortlist.size]])
        shortlist.sort()

    # Step 2: keep the shortlisted members farthest (on average) from their
    # k nearest outside samples; ties keep the lowest index.
    outside_index = make_index(space[outside])
    k = min(cfg.nearmiss_k, outside.size)
    d2, _ = outside_index.query(space[members[shortlist]], k)
    avg = report_distance(d2, cfg.metric).mean(axis=1)
    order = np.lexsort((members[shortlist], -avg))
    return members[shortlist[order[:target]]]


def build_balanced_subsets(emb, n_subsets, per_class_target, cfg=SamplerConfig()):
    """N balanced subsets drawn without replacement until pools exhaust.

    Classes smaller than the target contribute all their samples to every
    subset; larger classes are cycled through reshuffled pools so that the
    union over subsets covers min(class size, N * target) distinct samples.
    """
    if n_subsets < 1:
        raise TargetError("n_subsets must be >= 1")
    if per_class_target < 1:
        raise TargetError("per_class_target must be >= 1")

    subsets = [[] for _ in range(n_subsets)]
    for c in range(emb.n_classes):
        members = np.flatnonzero(emb.labels == c)
        if members.size == 0:
            continue
        if members.size <= per_class_target:
            for sub in subsets:
                sub.append(members)
            continue

        cycle = 0
        pool = list(_class_shuffle(members, cfg.seed, c, cycle))
        for sub in subsets:
            take = []
            seen = set()
            while len(take) < per_class_target:
                if not pool:
                    cycle += 1
                    pool = list(_class_shuffle(members, cfg.seed, c, cycle))
                cand = pool.pop()
                # A refilled pool can resurface a sample this subset already
                # holds; it is covered, so skip it.
                if cand not in seen:
                    seen.add(cand)
                    take.append(cand)
            sub.append(np.array(take, dtype=np.int64))

    plans = [np.sort(np.concatenate(parts)) for parts in subsets]
    return SubsetPlan(subsets=plans, per_class_target=int(per_class_target))


def _class_shuffle(members, seed, class_id, cycle):
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x5B5E7, class_id, cycle]))
    # Reversed so list.pop() consumes in permutation order.
    return rng.permutation(members)[::-1]


# ---------------------------------------------------------------------------
# Plan manifest: "LTSP1 <N> <target>" then one line of indices per subset.
# ---------------------------------------------------------------------------


def write_subset_plan(plan, path):
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"{PLAN_MAGIC} {len(plan.subsets)} {plan.per_class_target}\n")
        for sub in plan.subsets:
            fh.write(" ".join(str(int(i)) for i in sub) + "\n")


def read_subset_plan(path):
    with open(path, "r", encoding="ascii") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise FormatError("empty subset plan")
    head = lines[0].split()
    if len(head) != 3 or head[0] != PLAN_MAGIC:
        raise FormatError("bad subset plan header")
    try:
        n_subsets, target = int(head[1]), int(head[2])
    except ValueError as exc:
        raise FormatError("malformed subset plan header") from exc
    if len(lines) - 1 != n_subsets:
        raise FormatError(f"expected {n_subsets} subset lines, found {len(lines) - 1}")
    subsets = []
    for line in lines[1:]:
        try:
            subsets.append(np.array([int(tok) for tok in line.split()], dtype=np.int64))
        except ValueError as exc:
            raise FormatError("malformed subset index line") from exc
    return SubsetPlan(subsets=subsets, per_class_target=target)
