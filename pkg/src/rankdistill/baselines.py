"""Competing label-enrichment schemes: label smoothing, pseudo labeling,
and vanilla distribution distillation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .backend import kernels
from .distill import LossValue, RankedList
from .errors import ArgumentError
from .numerics import as_vector, softmax

__all__ = [
    "SmoothedTarget",
    "PseudoLabelSet",
    "smooth_labels",
    "smoothed_cross_entropy",
    "pseudo_labels",
    "vanilla_kd_loss",
    "BASELINE_TAGS",
]

BASELINE_TAGS = ("label-smoothing", "pseudo-labeling", "vanilla-kd", "none")


@dataclass
class SmoothedTarget:
    """Probability target mixing the labeled answers with a uniform floor."""

    distribution: np.ndarray
    amount: float

    def __post_init__(self):
        if np.any(self.distribution < 0):
            raise ArgumentError("smoothed distribution has negative entries")
        if abs(float(self.distribution.sum()) - 1.0) > 1e-12:
            raise ArgumentError("smoothed distribution must sum to 1")


@dataclass
class PseudoLabelSet:
    """Revealed labels augmented with the teacher's top-k predictions."""

    labels: frozenset[int]
    k: int


def smooth_labels(labels, num_answers: int, sigma: float) -> SmoothedTarget:
    """(1 - sigma) uniform over the labels plus sigma/N everywhere."""
    if not 0.0 <= sigma < 1.0:
        raise ArgumentError(f"sigma must be in [0, 1), got {sigma}")
    if not labels:
        raise ArgumentError("labels must be non-empty")
    idx = np.fromiter(sorted(labels), dtype=np.int64)
    if idx.min() < 0 or idx.max() >= num_answers:
        raise ArgumentError(f"label indices out of range for {num_answers} answers")
    dist = np.full(num_answers, sigma / num_answers)
    dist[idx] += (1.0 - sigma) / idx.size
    return SmoothedTarget(dist, sigma)


def smoothed_cross_entropy(student_scores, target: SmoothedTarget) -> LossValue:
    """Cross-entropy of softmax(scores) against the smoothed target."""
    scores = as_vector(student_scores, "student_scores")
    if scores.size != target.distribution.size:
        raise ArgumentError(
            f"scores length {scores.size} mismatches target {target.distribution.size}"
        )
    value, grad = kernels.softmax_xent(scores, target.distribution)
    return LossValue(value, grad)


def pseudo_labels(teacher_ranking: RankedList, revealed, k: int) -> PseudoLabelSet:
    """Union of the revealed labels and the teacher's top-k answers."""
    if k < 0:
        raise ArgumentError(f"k must be non-negative, got {k}")
    top = (int(a) for a in np.asarray(teacher_ranking.permutation)[:k])
    return PseudoLabelSet(frozenset(revealed) | frozenset(top), k)


def vanilla_kd_loss(
    student_scores, teacher_scores, temperature: float = 1.0
) -> LossValue:
    """Temperature-softened KL from teacher to student distributions.

    Scaled by temperature^2 so the gradient magnitude stays comparable
    across temperatures; the gradient is exact w.r.t. raw student scores.
    """
    if temperature <= 0:
        raise ArgumentError(f"temperature must be positive, got {temperature}")
    student = as_vector(student_scores, "student_scores")
    teacher = as_vector(teacher_scores, "teacher_scores")
    if student.size != teacher.size:
        raise ArgumentError("student/teacher score lengths differ")
    soft_teacher = softmax(teacher / temperature)
    xent, grad = kernels.softmax_xent(
        np.ascontiguousarray(student / temperature), soft_teacher
    )
    entropy = -float(soft_teacher @ np.log(soft_teacher))
    # Divergence is non-negative; the floor only absorbs last-ulp rounding.
    value = temperature**2 * max(xent - entropy, 0.0)
    # KL and cross-entropy share the same student gradient; chain rule adds 1/tau.
    return LossValue(value, temperature * grad)
