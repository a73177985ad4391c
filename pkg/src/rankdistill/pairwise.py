"""Adaptive pairwise ranking distillation.

Pairwise uncertainty from Monte-Carlo dropout score stacks, soft-margin
adaptation by iterative matrix scaling of the uncertainty-cost transport
problem, and the soft-margin hinge loss over teacher-ordered pairs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .backend import kernels
from .distill import LossValue, RankedList
from .errors import ArgumentError, ConvergenceError, DegenerateInputError
from .numerics import as_vector

__all__ = [
    "UncertaintyMatrix",
    "MarginScalingMatrix",
    "SoftMarginSet",
    "pairwise_uncertainty",
    "default_smoothing",
    "sinkhorn_margins",
    "soft_margins",
    "pairwise_margin_loss",
]


@dataclass
class UncertaintyMatrix:
    """Per-pair score-difference variance over the retained answers.

    Symmetric, non-negative, zero diagonal; ``answer_ids`` lists the K
    retained answers in descending mean-score order.
    """

    matrix: np.ndarray
    answer_ids: np.ndarray

    def __post_init__(self):
        m = self.matrix
        k = self.answer_ids.size
        if m.shape != (k, k):
            raise ArgumentError(f"matrix shape {m.shape} mismatches {k} answer ids")
        if np.any(m < 0):
            raise ArgumentError("uncertainty entries must be non-negative")
        if np.any(np.diagonal(m) != 0.0):
            raise ArgumentError("uncertainty diagonal must be zero")
        if not np.array_equal(m, m.T):
            raise ArgumentError("uncertainty matrix must be symmetric")


@dataclass
class MarginScalingMatrix:
    """Doubly-constrained scaling plan: rows and columns each sum to 1/K."""

    matrix: np.ndarray
    answer_ids: np.ndarray
    rescaled: bool = False

    def __post_init__(self):
        m = self.matrix
        k = self.answer_ids.size
        if m.shape != (k, k):
            raise ArgumentError(f"matrix shape {m.shape} mismatches {k} answer ids")
        if np.any(m < 0):
            raise ArgumentError("scaling entries must be non-negative")
        if np.any(np.diagonal(m) != 0.0):
            raise ArgumentError("scaling diagonal must be zero")


@dataclass
class SoftMarginSet:
    """Per-pair hinge margins over the retained answers."""

    margins: np.ndarray
    answer_ids: np.ndarray
    base_margin: float


def pairwise_uncertainty(mc_scores, truncate_to: int) -> UncertaintyMatrix:
    """Population variance of pairwise score differences across MC passes.

    Keeps the ``truncate_to`` answers with the highest mean score (ties by
    answer index); needs at least two passes.
    """
    stack = np.asarray(mc_scores, dtype=np.float64)
    if stack.ndim != 2:
        raise ArgumentError(f"mc_scores must be (passes, answers), got {stack.shape}")
    passes, n = stack.shape
    if passes < 2:
        raise ArgumentError(f"need >= 2 MC passes for a variance, got {passes}")
    if not 1 <= truncate_to <= n:
        raise ArgumentError(f"truncate_to {truncate_to} out of range for {n} answers")
    mean_scores = stack.mean(axis=0)
    top = np.argsort(-mean_scores, kind="stable")[:truncate_to]
    sub = stack[:, top]
    diffs = sub[:, :, None] - sub[:, None, :]
    variance = diffs.var(axis=0)
    return UncertaintyMatrix(variance, top)


def default_smoothing(uncertainty: UncertaintyMatrix, factor: float = 0.1) -> float:
    """Smoothing scale tied to the instance: factor x median off-diagonal entry.

    Falls back to 1.0 when the median is zero (deterministic teacher), where
    the scaling plan is uniform for any positive smoothing.
    """
    m = uncertainty.matrix
    k = m.shape[0]
    off = m[~np.eye(k, dtype=bool)]
    med = float(np.median(off)) if off.size else 0.0
    return factor * med if med > 0 else 1.0


def sinkhorn_margins(
    uncertainty: UncertaintyMatrix,
    smoothing: float,
    tol: float = 1e-8,
    max_iters: int = 10_000,
) -> MarginScalingMatrix:
    """Margin scaling plan from alternating row/column scaling.

    The kernel is ``exp(-U / smoothing)`` with self-pairs zeroed; both target
    marginals are uniform 1/K. Iterates until the mean absolute change of
    the column scaling vector reaches ``tol``, else raises
    :class:`ConvergenceError` carrying the residual.
    """
    if smoothing <= 0:
        raise ArgumentError(f"smoothing must be positive, got {smoothing}")
    k = uncertainty.answer_ids.size
    if k < 2:
        raise ArgumentError(f"need at least 2 answers, got {k}")
    kern = np.exp(-uncertainty.matrix / smoothing)
    np.fill_diagonal(kern, 0.0)
    plan, iterations, residual = kernels.sinkhorn_scaling(
        np.ascontiguousarray(kern), tol, max_iters
    )
    if not np.all(np.isfinite(plan)) or residual > tol:
        raise ConvergenceError(
            f"scaling failed to reach tol={tol} after {iterations} iterations "
            f"(residual {residual})",
            residual=residual,
            iterations=iterations,
        )
    return MarginScalingMatrix(plan, uncertainty.answer_ids.copy(), rescaled=False)


def soft_margins(
    scaling: MarginScalingMatrix, base_margin: float, rescale: bool = True
) -> SoftMarginSet:
    """Per-pair margins ``base_margin * W``.

    With ``rescale`` the entries are multiplied by K(K-1) so the mean
    off-diagonal margin equals ``base_margin`` instead of shrinking with the
    plan's total mass of 1.
    """
    if base_margin <= 0:
        raise ArgumentError(f"base_margin must be positive, got {base_margin}")
    margins = base_margin * scaling.matrix
    if rescale and not scaling.rescaled:
        k = scaling.answer_ids.size
        margins = margins * (k * (k - 1))
    return SoftMarginSet(margins, scaling.answer_ids.copy(), base_margin)


def pairwise_margin_loss(
    student_scores,
    ranking: RankedList,
    margins: SoftMarginSet | float,
    truncated_ids: np.ndarray | None = None,
) -> LossValue:
    """Mean hinge over pairs the teacher orders strictly, with per-pair margins.

    ``margins`` is either a :class:`SoftMarginSet` (which fixes the truncated
    answer set) or a constant hard margin applied to every pair; pairs with
    exactly tied teacher scores impose no constraint. The gradient is exact
    away from hinge kinks, with zero subgradient at the kink, and covers the
    full score vector (zeros outside the truncated set).
    """
    scores = as_vector(student_scores, "student_scores")
    if isinstance(margins, SoftMarginSet):
        ids = margins.answer_ids
        margin_matrix = margins.margins
    else:
        hard = float(margins)
        if hard <= 0:
            raise ArgumentError(f"hard margin must be positive, got {hard}")
        ids = truncated_ids if truncated_ids is not None else np.arange(scores.size)
        margin_matrix = np.full((ids.size, ids.size), hard)
        np.fill_diagonal(margin_matrix, 0.0)
    teacher_sub = np.ascontiguousarray(ranking.teacher_scores[ids])
    student_sub = np.ascontiguousarray(scores[ids])
    value, grad_sub, n_pairs = kernels.pairwise_hinge(
        student_sub, teacher_sub, np.ascontiguousarray(margin_matrix)
    )
    if n_pairs == 0:
        raise DegenerateInputError(
            "all teacher scores tied on the truncated set; no pairs to rank"
        )
    grad = np.zeros(scores.size)
    grad[ids] = grad_sub
    return LossValue(value, grad)
