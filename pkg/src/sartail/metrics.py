"""Evaluation: accuracy, one-vs-rest macro AUC, total score, per-class recall.

Binary AUC uses the rank-sum (Mann-Whitney) formulation with midranks for
ties, which equals the pairwise win fraction counting ties as half. The
total score combines accuracy and AUC as 0.75 * accuracy + 0.25 * AUC;
those weights are the linear combination recovered from the published
competition leaderboard and are re-verified against all ten rows by the
acceptance suite.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateError, ValidationError


@dataclass(frozen=True)
class EvalReport:
    accuracy: float
    auc_per_class: np.ndarray  # NaN where undefined (class absent or single-sided)
    macro_auc: float
    total_score: float
    per_class_recall: np.ndarray  # NaN where the class has no true samples
    n_eval: int


def accuracy(pred_labels, true_labels):
    """Exact-match fraction."""
    pred = np.asarray(pred_labels)
    true = np.asarray(true_labels)
    if pred.shape != true.shape or pred.ndim != 1:
        raise ValidationError("label arrays must be 1-D and equal length")
    if pred.size == 0:
        raise ValidationError("cannot score an empty label set")
    return float(np.mean(pred == true))


def _midranks(values):
    order = np.argsort(values, kind="stable")
    ranks = np.empty(values.shape[0], dtype=np.float64)
    sorted_vals = values[order]
    i = 0
    while i < sorted_vals.shape[0]:
        j = i
        while j + 1 < sorted_vals.shape[0] and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def binary_auc(scores, positives):
    """Rank-sum AUC with midrank tie handling.

    AUC = (sum of positive ranks - n_pos(n_pos+1)/2) / (n_pos * n_neg).
    Undefined (DegenerateError) when either side is empty.
    """
    scores = np.asarray(scores, dtype=np.float64)
    positives = np.asarray(positives, dtype=bool)
    if scores.shape != positives.shape or scores.ndim != 1:
        raise ValidationError("scores and positives must be 1-D and equal length")
    n_pos = int(positives.sum())
    n_neg = positives.shape[0] - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DegenerateError("AUC needs at least one positive and one negative")
    ranks = _midranks(scores)
    rank_sum = float(ranks[positives].sum())
    return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def macro_ovr_auc(proba, true_labels, return_per_class=False):
    """Mean one-vs-rest AUC over classes with both positives and negatives.

    Classes absent from the truth, or present without any negative, are
    undefined and excluded from the mean (reported as NaN per class).
    """
    proba = np.asarray(proba, dtype=np.float64)
    true = np.asarray(true_labels, dtype=np.int64)
    if proba.ndim != 2 or proba.shape[0] != true.shape[0]:
        raise ValidationError("proba must be (n, C) aligned with labels")
    if true.size and (true.min() < 0 or true.max() >= proba.shape[1]):
        raise ValidationError("labels out of range for proba columns")
    n_classes = proba.shape[1]
    per_class = np.full(n_classes, np.nan)
    for c in range(n_classes):
        pos = true == c
        if 0 < pos.sum() < true.shape[0]:
            per_class[c] = binary_auc(proba[:, c], pos)
    defined = per_class[~np.isnan(per_class)]
    if defined.size == 0:
        raise DegenerateError("no class has both positives and negatives")
    macro = float(defined.mean())
    if return_per_class:
        return macro, per_class
    return macro


def total_score(acc, auc):
    """Competition total score: 0.75 * accuracy + 0.25 * AUC."""
    if not (0.0 <= acc <= 1.0) or not (0.0 <= auc <= 1.0):
        raise ValidationError("accuracy and AUC must lie in [0, 1]")
    return 0.75 * acc + 0.25 * auc


def display_score(value):
    """Scores are rounded to 2 decimals for display only."""
    return f"{value:.2f}"


def per_class_recall(pred_labels, true_labels, n_classes):
    """Recall per class; NaN for classes without true samples."""
    pred = np.asarray(pred_labels, dtype=np.int64)
    true = np.asarray(true_labels, dtype=np.int64)
    if pred.shape != true.shape:
        raise ValidationError("label arrays must be equal length")
    recall = np.full(n_classes, np.nan)
    for c in range(n_classes):
        mask = true == c
        if mask.any():
            recall[c] = float(np.mean(pred[mask] == c))
    return recall


def macro_recall(pred_labels, true_labels, n_classes):
    """Mean recall over classes present in the truth."""
    recall = per_class_recall(pred_labels, true_labels, n_classes)
    defined = recall[~np.isnan(recall)]
    if defined.size == 0:
        raise DegenerateError("no class present in truth")
    return float(defined.mean())


def evaluate(pred_labels, proba, true_labels):
    """Full report from predictions and per-class probabilities."""
    acc = accuracy(pred_labels, true_labels)
    macro, per_class = macro_ovr_auc(proba, true_labels, return_per_class=True)
    recall = per_class_recall(pred_labels, true_labels, proba.shape[1])
    return EvalReport(
        accuracy=acc,
        auc_per_class=per_class,
        macro_auc=macro,
        total_score=total_score(acc, macro),
        per_class_recall=recall,
        n_eval=int(np.asarray(true_labels).shape[0]),
    )


# ---------------------------------------------------------------------------
# Report output
# ---------------------------------------------------------------------------


def write_report_csv(report, path):
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("metric,class,value\n")
        fh.write(f"accuracy,,{report.accuracy!r}\n")
        fh.write(f"macro_auc,,{report.macro_auc!r}\n")
        fh.write(f"total_score,,{report.total_score!r}\n")
        fh.write(f"n_eval,,{report.n_eval}\n")
        for c, value in enumerate(report.auc_per_class):
            fh.write(f"auc,{c},{'' if math.isnan(value) else repr(float(value))}\n")
        for c, value in enumerate(report.per_class_recall):
            fh.write(f"recall,{c},{'' if math.isnan(value) else repr(float(value))}\n")


def write_recall_csv(report, path):
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("class,recall\n")
        for c, value in enumerate(report.per_class_recall):
            fh.write(f"{c},{'' if math.isnan(value) else repr(float(value))}\n")


def format_report(report):
    """Human-readable summary table."""
    lines = [
        f"samples evaluated : {report.n_eval}",
        f"accuracy          : {report.accuracy:.4f}",
        f"macro OvR AUC     : {report.macro_auc:.4f}",
        f"total score       : {display_score(report.total_score)}",
        "",
        "class   auc      recall",
    ]
    for c in range(report.auc_per_class.shape[0]):
        auc = report.auc_per_class[c]
        rec = report.per_class_recall[c]
        auc_s = "  --  " if math.isnan(auc) else f"{auc:.4f}"
        rec_s = "  --  " if math.isnan(rec) else f"{rec:.4f}"
        lines.append(f"{c:>5}   {auc_s}   {rec_s}")
    return "\n".join(lines)
