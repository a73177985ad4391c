# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled twin of ``rankdistill._kernels_py``.

Same signatures and semantics; see the fallback module for the contracts.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, fabs, isfinite, log, log1p

cnp.import_array()

cdef double _LN2 = 0.6931471805599453

LN2 = _LN2

IS_COMPILED = True


def softmax_xent(double[::1] scores, double[::1] target):
    cdef Py_ssize_t n = scores.shape[0]
    cdef Py_ssize_t i
    grad_arr = np.empty(n)
    cdef double[::1] grad = grad_arr
    cdef double m = scores[0]
    for i in range(1, n):
        if scores[i] > m:
            m = scores[i]
    cdef double total = 0.0
    for i in range(n):
        grad[i] = exp(scores[i] - m)
        total += grad[i]
    cdef double lse = log(total)
    cdef double value = 0.0
    for i in range(n):
        value -= target[i] * (scores[i] - m - lse)
        grad[i] = grad[i] / total - target[i]
    return value, grad_arr


def pairwise_hinge(double[::1] student, double[::1] teacher, double[:, ::1] margins):
    cdef Py_ssize_t n = student.shape[0]
    grad_arr = np.zeros(n)
    cdef double[::1] grad = grad_arr
    cdef Py_ssize_t i, j
    cdef long n_pairs = 0
    cdef double value = 0.0
    cdef double h
    for i in range(n):
        for j in range(n):
            if teacher[i] > teacher[j]:
                n_pairs += 1
                h = margins[i, j] - (student[i] - student[j])
                if h > 0.0:
                    value += h
                    grad[i] -= 1.0
                    grad[j] += 1.0
    if n_pairs == 0:
        return 0.0, grad_arr, 0
    value /= n_pairs
    for i in range(n):
        grad[i] /= n_pairs
    return value, grad_arr, <long> n_pairs


def sinkhorn_scaling(double[:, ::1] kernel, double tol, long max_iters):
    cdef Py_ssize_t n = kernel.shape[0]
    cdef double marginal = 1.0 / n
    u_arr = np.full(n, marginal)
    v_prev_arr = np.ones(n)
    v_new_arr = np.empty(n)
    cdef double[::1] u = u_arr
    cdef double[::1] v_prev = v_prev_arr
    cdef double[::1] v_new = v_new_arr
    cdef double residual = np.inf
    cdef long iterations = 0
    cdef long t
    cdef Py_ssize_t i, j
    cdef double den
    for t in range(1, max_iters + 1):
        iterations = t
        for i in range(n):
            den = 0.0
            for j in range(n):
                den += kernel[i, j] * v_prev[j]
            if den <= 0.0 or not isfinite(den):
                return np.full((n, n), np.nan), iterations, float("inf")
            u[i] = marginal / den
        residual = 0.0
        for j in range(n):
            den = 0.0
            for i in range(n):
                den += kernel[i, j] * u[i]
            if den <= 0.0 or not isfinite(den):
                return np.full((n, n), np.nan), iterations, float("inf")
            v_new[j] = marginal / den
            residual += fabs(v_new[j] - v_prev[j])
        residual /= n
        for j in range(n):
            v_prev[j] = v_new[j]
        if residual <= tol:
            break
    plan_arr = np.empty((n, n))
    cdef double[:, ::1] plan = plan_arr
    for i in range(n):
        for j in range(n):
            plan[i, j] = u[i] * kernel[i, j] * v_prev[j]
    return plan_arr, iterations, residual


def listmle(double[::1] scores):
    cdef Py_ssize_t n = scores.shape[0]
    cdef Py_ssize_t i
    e_arr = np.empty(n)
    suffix_arr = np.empty(n)
    grad_arr = np.empty(n)
    cdef double[::1] e = e_arr
    cdef double[::1] suffix = suffix_arr
    cdef double[::1] grad = grad_arr
    cdef double m = scores[0]
    for i in range(1, n):
        if scores[i] > m:
            m = scores[i]
    cdef double run = 0.0
    for i in range(n - 1, -1, -1):
        e[i] = exp(scores[i] - m)
        run += e[i]
        suffix[i] = run
    cdef double value = 0.0
    cdef double csum = 0.0
    for i in range(n):
        value += log(suffix[i]) + m - scores[i]
        csum += 1.0 / suffix[i]
        grad[i] = e[i] * csum - 1.0
    return value, grad_arr


def lambda_pair_logistic(
    double[::1] student,
    double[:, ::1] weights,
    cnp.uint8_t[:, ::1] mask,
    double sigma,
):
    cdef Py_ssize_t n = student.shape[0]
    grad_arr = np.zeros(n)
    cdef double[::1] grad = grad_arr
    cdef Py_ssize_t i, j
    cdef double value = 0.0
    cdef double d, softplus, sig, c
    for i in range(n):
        for j in range(n):
            if mask[i, j]:
                d = sigma * (student[i] - student[j])
                if d >= 0.0:
                    softplus = log1p(exp(-d))
                    sig = exp(-d) / (1.0 + exp(-d))
                else:
                    softplus = -d + log1p(exp(d))
                    sig = 1.0 / (1.0 + exp(d))
                value += weights[i, j] * softplus / _LN2
                c = weights[i, j] * sig * (sigma / _LN2)
                grad[i] -= c
                grad[j] += c
    return value, grad_arr
