"""Two-stage distillation scaffolding shared by every scheme.

The classification loss over the labeled answer set, extraction of the
teacher's answer ranking, and the linear combination of classification and
ranking objectives.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .backend import kernels
from .errors import ArgumentError, DomainError
from .numerics import as_vector

__all__ = [
    "LossValue",
    "RankedList",
    "classification_loss",
    "teacher_ranking",
    "combined_loss",
]


@dataclass
class LossValue:
    """Scalar loss plus its exact gradient w.r.t. the raw score vector."""

    value: float
    gradient_wrt_scores: np.ndarray

    def __post_init__(self):
        if not np.isfinite(self.value):
            raise DomainError(f"loss value is not finite: {self.value}")
        if not np.all(np.isfinite(self.gradient_wrt_scores)):
            raise DomainError("loss gradient contains non-finite entries")


@dataclass
class RankedList:
    """Teacher's answer permutation (descending score) plus a score snapshot."""

    permutation: np.ndarray
    teacher_scores: np.ndarray

    def __post_init__(self):
        perm = np.asarray(self.permutation)
        n = perm.size
        if not np.array_equal(np.sort(perm), np.arange(n)):
            raise ArgumentError("permutation must be a bijection on 0..N-1")
        ordered = self.teacher_scores[perm]
        if np.any(ordered[:-1] < ordered[1:]):
            raise ArgumentError("permutation must order teacher scores descending")


def classification_loss(student_scores, labels) -> LossValue:
    """Mean negative log-probability of the labeled answers.

    Probabilities come from the softmax of the raw scores; the gradient is
    exact w.r.t. the raw scores.
    """
    scores = as_vector(student_scores, "student_scores")
    if not labels:
        raise ArgumentError("labels must be non-empty")
    idx = np.fromiter(sorted(labels), dtype=np.int64)
    if idx.min() < 0 or idx.max() >= scores.size:
        raise ArgumentError(f"label indices out of range for {scores.size} answers")
    target = np.zeros(scores.size)
    target[idx] = 1.0 / idx.size
    value, grad = kernels.softmax_xent(scores, target)
    return LossValue(value, grad)


def teacher_ranking(teacher_scores) -> RankedList:
    """Stable descending sort of the scores; ties break by answer index."""
    scores = as_vector(teacher_scores, "teacher_scores")
    perm = np.argsort(-scores, kind="stable")
    return RankedList(perm, scores.copy())


def combined_loss(cls: LossValue, rank: LossValue, alpha: float) -> LossValue:
    """Classification plus ``alpha`` times the ranking loss."""
    if alpha < 0:
        raise ArgumentError(f"alpha must be non-negative, got {alpha}")
    return LossValue(
        cls.value + alpha * rank.value,
        cls.gradient_wrt_scores + alpha * rank.gradient_wrt_scores,
    )
