"""Ranking evaluation: top-1 accuracy, Hit@k, and nDCG@k.

All tie-breaking is by ascending answer index so results are deterministic.
Instances whose relevance is entirely zero are excluded from the nDCG
average and counted separately.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError
from .model import ScoreModel, forward_batch
from .numerics import as_vector
from .synthdata import Dataset, Instance

__all__ = [
    "EvalResult",
    "acc_at_1",
    "hit_at_k",
    "ndcg_at_k",
    "relevance_vector",
    "evaluate",
]


@dataclass
class EvalResult:
    """Dataset-level means of the per-instance metrics."""

    acc_at_1: float
    hit_at_k: float
    ndcg_at_k: float
    k: int
    num_instances: int
    ndcg_excluded: int = 0


def _top_indices(scores: np.ndarray, k: int) -> np.ndarray:
    return np.argsort(-scores, kind="stable")[:k]


def acc_at_1(scores, positives) -> int:
    """1 iff the argmax answer (ties to the lowest index) is a positive."""
    vec = as_vector(scores, "scores")
    if not positives:
        raise ArgumentError("positives must be non-empty")
    return int(int(np.argmax(vec)) in positives)


def hit_at_k(scores, positives, k: int) -> int:
    """1 iff any positive appears in the top-k answers."""
    vec = as_vector(scores, "scores")
    if not 1 <= k <= vec.size:
        raise ArgumentError(f"k must be in [1, {vec.size}], got {k}")
    top = _top_indices(vec, k)
    return int(any(int(a) in positives for a in top))


def ndcg_at_k(scores, relevance, k: int) -> float | None:
    """Exponential-gain DCG@k over the predicted order, normalized by the
    ideal order; None when the relevance vector is all zero."""
    vec = as_vector(scores, "scores")
    rel = as_vector(relevance, "relevance")
    if rel.size != vec.size:
        raise ArgumentError("scores and relevance lengths differ")
    if np.any(rel < 0):
        raise ArgumentError("relevance entries must be non-negative")
    if not 1 <= k <= vec.size:
        raise ArgumentError(f"k must be in [1, {vec.size}], got {k}")
    if not np.any(rel > 0):
        return None
    discounts = np.log2(np.arange(2, k + 2, dtype=np.float64))
    gains = 2.0 ** rel[_top_indices(vec, k)] - 1.0
    dcg = float((gains / discounts).sum())
    ideal = 2.0 ** np.sort(rel)[::-1][:k] - 1.0
    idcg = float((ideal / discounts[: ideal.size]).sum())
    return dcg / idcg


def relevance_vector(
    instance: Instance, num_answers: int, graded: bool = False
) -> np.ndarray:
    """Binary relevance on the full positive set, or annotation counts when
    the instance carries them and ``graded`` is on."""
    rel = np.zeros(num_answers)
    if graded and instance.annotation_counts is not None:
        for a, c in instance.annotation_counts.items():
            rel[a] = float(c)
    else:
        rel[sorted(instance.full_positives)] = 1.0
    return rel


def evaluate(
    model: ScoreModel, dataset: Dataset, k: int = 5, graded: bool = False
) -> EvalResult:
    """Mean per-instance metrics against the full positive sets (dropout off)."""
    n = len(dataset)
    scores = forward_batch(model, dataset.feature_matrix())
    acc_total = 0
    hit_total = 0
    ndcg_total = 0.0
    excluded = 0
    for row, inst in zip(scores, dataset.instances):
        acc_total += acc_at_1(row, inst.full_positives)
        hit_total += hit_at_k(row, inst.full_positives, k)
        nd = ndcg_at_k(row, relevance_vector(inst, row.size, graded), k)
        if nd is None:
            excluded += 1
        else:
            ndcg_total += nd
    counted = n - excluded
    return EvalResult(
        acc_at_1=acc_total / n,
        hit_at_k=hit_total / n,
        ndcg_at_k=ndcg_total / counted if counted else 0.0,
        k=k,
        num_instances=n,
        ndcg_excluded=excluded,
    )
