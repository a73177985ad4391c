"""Pure-numpy implementations of the hot per-instance kernels.

Twin of the compiled ``rankdistill._kernels`` extension: identical function
signatures and semantics, used as the fallback when the extension is not
built (see ``rankdistill.backend``). Callers validate inputs; these kernels
assume contiguous float64 arrays and do no checking of their own.
"""

from __future__ import annotations

import numpy as np

LN2 = 0.6931471805599453

IS_COMPILED = False


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def softmax_xent(scores: np.ndarray, target: np.ndarray):
    """Cross-entropy of softmax(scores) against a probability target.

    ``target`` must sum to 1. Returns ``(value, grad)`` with the exact
    gradient ``softmax(scores) - target`` w.r.t. the raw scores.
    """
    shifted = scores - scores.max()
    e = np.exp(shifted)
    lse = np.log(e.sum())
    logp = shifted - lse
    value = -float(target @ logp)
    grad = e / e.sum() - target
    return value, grad


def pairwise_hinge(student: np.ndarray, teacher: np.ndarray, margins: np.ndarray):
    """Mean hinge over ordered pairs the teacher ranks strictly.

    Pairs are ``(i, j)`` with ``teacher[i] > teacher[j]``; each contributes
    ``max(0, margins[i, j] - (student[i] - student[j]))``. Returns
    ``(value, grad, n_pairs)``; the hinge kink contributes zero subgradient.
    """
    n = student.shape[0]
    pairs = teacher[:, None] > teacher[None, :]
    n_pairs = int(pairs.sum())
    if n_pairs == 0:
        return 0.0, np.zeros(n), 0
    hinge = margins - (student[:, None] - student[None, :])
    active = pairs & (hinge > 0.0)
    value = float(hinge.sum(where=active)) / n_pairs
    a = active.astype(np.float64)
    grad = (a.sum(axis=0) - a.sum(axis=1)) / n_pairs
    return value, grad, n_pairs


def sinkhorn_scaling(kernel: np.ndarray, tol: float, max_iters: int):
    """Alternating row/column scaling of a non-negative kernel matrix.

    Both target marginals are uniform (1/n). Iterates until the mean
    absolute change of the column scaling vector drops to ``tol`` or
    ``max_iters`` is hit. Returns ``(plan, iterations, residual)``; a zero
    or non-finite denominator yields an all-NaN plan with residual inf.
    """
    n = kernel.shape[0]
    marginal = 1.0 / n
    v_prev = np.ones(n)
    u = np.full(n, marginal)
    residual = np.inf
    iterations = 0
    for t in range(1, max_iters + 1):
        iterations = t
        den_u = kernel @ v_prev
        if not np.all(den_u > 0.0) or not np.all(np.isfinite(den_u)):
            return np.full_like(kernel, np.nan), t, np.inf
        u = marginal / den_u
        den_v = kernel.T @ u
        if not np.all(den_v > 0.0) or not np.all(np.isfinite(den_v)):
            return np.full_like(kernel, np.nan), t, np.inf
        v = marginal / den_v
        residual = float(np.abs(v - v_prev).mean())
        v_prev = v
        if residual <= tol:
            break
    plan = u[:, None] * kernel * v_prev[None, :]
    return plan, iterations, residual


def listmle(scores: np.ndarray):
    """Negative Plackett-Luce log-likelihood of the given order.

    ``scores`` are already arranged in the target order. Returns
    ``(value, grad)`` with the exact gradient w.r.t. the ordered scores.
    """
    n = scores.shape[0]
    m = scores.max()
    e = np.exp(scores - m)
    suffix = np.cumsum(e[::-1])[::-1]
    value = float(np.log(suffix).sum() + n * m - scores.sum())
    csum = np.cumsum(1.0 / suffix)
    grad = e * csum - 1.0
    return value, grad


def lambda_pair_logistic(
    student: np.ndarray, weights: np.ndarray, mask: np.ndarray, sigma: float
):
    """Weighted pairwise logistic loss, base-2 log.

    For each pair with ``mask[i, j]`` nonzero adds
    ``-weights[i, j] * log2(sigmoid(sigma * (student[i] - student[j])))``.
    Returns ``(value, grad)``.
    """
    d = sigma * (student[:, None] - student[None, :])
    masked = mask != 0
    softplus = np.logaddexp(0.0, -d) / LN2
    value = float((weights * softplus).sum(where=masked))
    contrib = np.where(masked, weights * _sigmoid(-d) * (sigma / LN2), 0.0)
    grad = contrib.sum(axis=0) - contrib.sum(axis=1)
    return value, grad
