"""Partial listwise ranking distillation.

Hot/cold sublist sampling over the teacher's ranking plus four listwise
loss families (permutation likelihood, top-1 cross-entropy, its
Gumbel-perturbed variant, and weighted pairwise-logistic losses), all with
exact gradients w.r.t. the raw student scores.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .backend import kernels
from .distill import LossValue, RankedList
from .errors import ArgumentError
from .numerics import RngState, as_vector, softmax

__all__ = [
    "SamplingPlan",
    "Sublist",
    "LambdaWeighting",
    "SAMPLING_SCHEMES",
    "LOSS_TAGS",
    "sample_sublist",
    "listmle_loss",
    "listnet_loss",
    "stlistnet_loss",
    "lambda_loss",
    "listwise_rank_loss",
]

SAMPLING_SCHEMES = ("exp", "zipf", "random", "full")
LAMBDA_VARIANTS = ("ranknet", "ndcg1", "ndcg2", "ndcg2pp")
LOSS_TAGS = ("listmle", "listnet", "stlistnet") + tuple(
    f"lambda:{v}" for v in LAMBDA_VARIANTS
)


@dataclass(frozen=True)
class SamplingPlan:
    """How to draw the partial list: top ``hot_size`` ranks plus a rank-biased
    sample of ``cold_size`` answers from the remainder."""

    hot_size: int = 10
    cold_size: int = 5
    scheme: str = "zipf"
    smoothing: float = 1.0
    with_replacement: bool = False

    def __post_init__(self):
        if self.scheme not in SAMPLING_SCHEMES:
            raise ArgumentError(f"unknown sampling scheme {self.scheme!r}")
        if self.smoothing <= 0:
            raise ArgumentError(f"smoothing must be positive, got {self.smoothing}")
        if self.hot_size < 0 or self.cold_size < 0:
            raise ArgumentError("hot_size and cold_size must be non-negative")


@dataclass
class Sublist:
    """Sampled answer ids in order (hot segment first, both in teacher-rank
    order) with their positions in the full teacher ranking."""

    answer_ids: np.ndarray
    source_ranks: np.ndarray

    def __post_init__(self):
        ranks = np.asarray(self.source_ranks)
        if ranks.size != np.asarray(self.answer_ids).size:
            raise ArgumentError("answer_ids / source_ranks length mismatch")
        if ranks.size and np.any(ranks[1:] <= ranks[:-1]):
            raise ArgumentError("source_ranks must be strictly increasing")

    def __len__(self) -> int:
        return int(np.asarray(self.answer_ids).size)


@dataclass(frozen=True)
class LambdaWeighting:
    """Pair-weight variant for the weighted pairwise-logistic loss family."""

    variant: str = "ndcg2pp"
    sigma: float = 1.0
    mu: float = 5.0

    def __post_init__(self):
        if self.variant not in LAMBDA_VARIANTS:
            raise ArgumentError(f"unknown lambda weighting variant {self.variant!r}")
        if self.sigma <= 0:
            raise ArgumentError(f"sigma must be positive, got {self.sigma}")


def _rank_weights(scheme: str, smoothing: float, m: int) -> np.ndarray:
    """Unnormalized sampling weights over 1-based remainder ranks 1..m."""
    k = np.arange(1, m + 1, dtype=np.float64)
    if scheme == "exp":
        return np.exp(-smoothing * k)
    if scheme == "zipf":
        return k**-smoothing
    return np.ones(m)


def sample_sublist(ranking: RankedList, plan: SamplingPlan, rng: RngState) -> Sublist:
    """Draw the hot/cold sublist from the teacher's full ranking.

    Without replacement (the default) each cold pick zeroes its weight and
    the rest renormalize; with replacement, duplicate picks collapse so the
    cold list never repeats an answer but may come back short.
    """
    perm = np.asarray(ranking.permutation)
    n = perm.size
    if plan.scheme == "full":
        return Sublist(perm.copy(), np.arange(n))
    if plan.hot_size + plan.cold_size > n:
        raise ArgumentError(
            f"hot {plan.hot_size} + cold {plan.cold_size} exceeds {n} answers"
        )
    if plan.hot_size + plan.cold_size == 0:
        raise ArgumentError("empty sampling plan")
    hot_ranks = np.arange(plan.hot_size)
    m = n - plan.hot_size
    cold_offsets: list[int] = []
    if plan.cold_size > 0:
        weights = _rank_weights(plan.scheme, plan.smoothing, m)
        if plan.with_replacement:
            p = weights / weights.sum()
            draws = rng.gen.choice(m, size=plan.cold_size, p=p)
            cold_offsets = sorted(set(int(d) for d in draws))
        else:
            w = weights.copy()
            picked = []
            for _ in range(plan.cold_size):
                p = w / w.sum()
                c = int(rng.gen.choice(m, p=p))
                picked.append(c)
                w[c] = 0.0
            cold_offsets = sorted(picked)
    cold_ranks = plan.hot_size + np.asarray(cold_offsets, dtype=np.int64)
    ranks = np.concatenate([hot_ranks, cold_ranks])
    return Sublist(perm[ranks], ranks)


def _gather(scores, sublist: Sublist, name: str) -> np.ndarray:
    vec = as_vector(scores, name)
    return np.ascontiguousarray(vec[sublist.answer_ids])


def _scatter(n: int, sublist: Sublist, grad_sub: np.ndarray) -> np.ndarray:
    grad = np.zeros(n)
    grad[sublist.answer_ids] = grad_sub
    return grad


def listmle_loss(student_scores, sublist: Sublist) -> LossValue:
    """Negative log-likelihood of the sublist order under the student's
    Plackett-Luce model."""
    if len(sublist) == 0:
        raise ArgumentError("sublist is empty")
    scores = as_vector(student_scores, "student_scores")
    value, grad_sub = kernels.listmle(_gather(scores, sublist, "student_scores"))
    return LossValue(value, _scatter(scores.size, sublist, grad_sub))


def listnet_loss(student_scores, teacher_scores, sublist: Sublist) -> LossValue:
    """Cross-entropy between teacher and student top-1 probabilities, both
    softmaxed over the sublist only."""
    if len(sublist) == 0:
        raise ArgumentError("sublist is empty")
    scores = as_vector(student_scores, "student_scores")
    target = softmax(_gather(teacher_scores, sublist, "teacher_scores"))
    value, grad_sub = kernels.softmax_xent(
        _gather(scores, sublist, "student_scores"), target
    )
    return LossValue(value, _scatter(scores.size, sublist, grad_sub))


def gumbel_noise(size: int, beta: float, rng: RngState) -> np.ndarray:
    """``-beta * log(-log(u))`` with u uniform on (0, 1)."""
    u = rng.gen.random(size)
    u = np.where(u > 0.0, u, np.nextafter(0.0, 1.0))
    return -beta * np.log(-np.log(u))


def stlistnet_loss(
    student_scores, teacher_scores, sublist: Sublist, beta: float, rng: RngState
) -> LossValue:
    """Top-1 cross-entropy against Gumbel-perturbed teacher scores.

    ``beta`` scales the noise; zero reduces exactly to :func:`listnet_loss`.
    The gradient is taken w.r.t. student scores only.
    """
    if beta < 0:
        raise ArgumentError(f"beta must be non-negative, got {beta}")
    if len(sublist) == 0:
        raise ArgumentError("sublist is empty")
    scores = as_vector(student_scores, "student_scores")
    teacher_sub = _gather(teacher_scores, sublist, "teacher_scores")
    noisy = teacher_sub + gumbel_noise(len(sublist), beta, rng)
    value, grad_sub = kernels.softmax_xent(
        _gather(scores, sublist, "student_scores"), softmax(noisy)
    )
    return LossValue(value, _scatter(scores.size, sublist, grad_sub))


def _discount(rank: np.ndarray | float) -> np.ndarray | float:
    return np.log2(1.0 + rank)


def _lambda_pair_weights(
    teacher_sub: np.ndarray, weighting: LambdaWeighting
) -> tuple[np.ndarray, np.ndarray]:
    """Pair weights and the strict teacher-order mask over the sublist.

    Positions are 1-based sublist ranks; relevance decays linearly with
    position (n-1 down to 0), and gains are normalized by the ideal DCG of
    the sublist.
    """
    n = teacher_sub.size
    mask = teacher_sub[:, None] > teacher_sub[None, :]
    if weighting.variant == "ranknet":
        return np.ones((n, n)), mask
    positions = np.arange(1, n + 1, dtype=np.float64)
    relevance = np.float64(n) - positions
    gains = 2.0**relevance - 1.0
    max_dcg = float((gains / _discount(positions)).sum())
    g = gains / max_dcg
    if weighting.variant == "ndcg1":
        weights = np.broadcast_to((g / _discount(positions))[:, None], (n, n)).copy()
        return weights, mask
    gain_gap = np.abs(g[:, None] - g[None, :])
    pos_gap = np.abs(positions[:, None] - positions[None, :])
    safe_gap = np.maximum(pos_gap, 1.0)  # diagonal never masked; avoid 1/D(0)
    delta = np.abs(1.0 / _discount(safe_gap) - 1.0 / _discount(safe_gap + 1.0))
    if weighting.variant == "ndcg2":
        return gain_gap * delta, mask
    rho = np.abs(1.0 / _discount(positions)[:, None] - 1.0 / _discount(positions)[None, :])
    return gain_gap * (delta + weighting.mu * rho), mask


def lambda_loss(
    student_scores, teacher_scores, sublist: Sublist, weighting: LambdaWeighting
) -> LossValue:
    """Weighted pairwise-logistic loss over teacher-ordered pairs in the
    sublist (base-2 log of the pair sigmoid), weights per ``weighting``."""
    if len(sublist) < 2:
        raise ArgumentError("lambda loss needs a sublist of length >= 2")
    scores = as_vector(student_scores, "student_scores")
    teacher_sub = _gather(teacher_scores, sublist, "teacher_scores")
    weights, mask = _lambda_pair_weights(teacher_sub, weighting)
    value, grad_sub = kernels.lambda_pair_logistic(
        _gather(scores, sublist, "student_scores"),
        np.ascontiguousarray(weights),
        np.ascontiguousarray(mask.astype(np.uint8)),
        weighting.sigma,
    )
    return LossValue(value, _scatter(scores.size, sublist, grad_sub))


def listwise_rank_loss(
    student_scores,
    teacher_scores,
    ranking: RankedList,
    plan: SamplingPlan,
    loss_tag: str,
    rng: RngState,
    beta: float = 1.0,
    weighting: LambdaWeighting | None = None,
) -> LossValue:
    """Sample a fresh sublist and dispatch to the tagged loss.

    The returned gradient covers the full score vector (zeros outside the
    sampled sublist).
    """
    if loss_tag not in LOSS_TAGS:
        raise ArgumentError(f"unknown loss tag {loss_tag!r}; expected one of {LOSS_TAGS}")
    sublist = sample_sublist(ranking, plan, rng)
    if loss_tag == "listmle":
        return listmle_loss(student_scores, sublist)
    if loss_tag == "listnet":
        return listnet_loss(student_scores, teacher_scores, sublist)
    if loss_tag == "stlistnet":
        return stlistnet_loss(student_scores, teacher_scores, sublist, beta, rng)
    variant = loss_tag.split(":", 1)[1]
    weighting = (
        LambdaWeighting(variant=variant)
        if weighting is None
        else replace(weighting, variant=variant)
    )
    return lambda_loss(student_scores, teacher_scores, sublist, weighting)
