# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernel: per-pixel softmax attention over prompt token rows.

Reductions run in a fixed sequential order (over the embedding dim, then over
token rows) so results are reproducible run to run.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp

cnp.import_array()


def attend(cnp.ndarray[cnp.float64_t, ndim=2] Q,
           cnp.ndarray[cnp.float64_t, ndim=2] K,
           cnp.ndarray[cnp.float64_t, ndim=2] V,
           double scale):
    """softmax(Q K^T * scale) @ V with max-subtraction, (P, m) float64 out."""
    cdef Py_ssize_t P = Q.shape[0]
    cdef Py_ssize_t d = Q.shape[1]
    cdef Py_ssize_t n = K.shape[0]
    cdef Py_ssize_t m = V.shape[1]
    if K.shape[1] != d or V.shape[0] != n:
        raise ValueError("attend: inconsistent shapes")
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.zeros((P, m), dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] logits = np.zeros(n, dtype=np.float64)
    cdef Py_ssize_t p, i, j, c
    cdef double acc, mx, w, z
    for p in range(P):
        for j in range(n):
            acc = 0.0
            for i in range(d):
                acc += Q[p, i] * K[j, i]
            logits[j] = acc * scale
        mx = logits[0]
        for j in range(1, n):
            if logits[j] > mx:
                mx = logits[j]
        z = 0.0
        for j in range(n):
            w = exp(logits[j] - mx)
            z += w
            for c in range(m):
                out[p, c] += w * V[j, c]
        for c in range(m):
            out[p, c] /= z
    return out


def attention_weights(cnp.ndarray[cnp.float64_t, ndim=2] Q,
                      cnp.ndarray[cnp.float64_t, ndim=2] K,
                      double scale):
    """Softmax weight matrix (P, n) for diagnostics and property checks."""
    cdef Py_ssize_t P = Q.shape[0]
    cdef Py_ssize_t d = Q.shape[1]
    cdef Py_ssize_t n = K.shape[0]
    if K.shape[1] != d:
        raise ValueError("attention_weights: inconsistent shapes")
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.zeros((P, n), dtype=np.float64)
    cdef Py_ssize_t p, i, j
    cdef double acc, mx, z
    for p in range(P):
        for j in range(n):
            acc = 0.0
            for i in range(d):
                acc += Q[p, i] * K[j, i]
            out[p, j] = acc * scale
        mx = out[p, 0]
        for j in range(1, n):
            if out[p, j] > mx:
                mx = out[p, j]
        z = 0.0
        for j in range(n):
            out[p, j] = exp(out[p, j] - mx)
            z += out[p, j]
        for j in range(n):
            out[p, j] /= z
    return out
