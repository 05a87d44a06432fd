"""Attention kernel with backend selection.

The compiled Cython kernel is used when importable; otherwise a pure-numpy
fallback with the same sequential reduction order takes over. Force a backend
with REGIONCOMP_BACKEND=cython|python. The two backends agree to float64
rounding (last-ulp differences in exp() are possible), so cross-backend
comparisons are tolerance-based while each backend is bit-deterministic.
"""

from __future__ import annotations

import os

import numpy as np


def _attend_python(Q, K, V, scale):
    """softmax(Q K^T * scale) @ V, accumulated sequentially like the C kernel."""
    Q = np.ascontiguousarray(Q, dtype=np.float64)
    K = np.ascontiguousarray(K, dtype=np.float64)
    V = np.ascontiguousarray(V, dtype=np.float64)
    if K.shape[1] != Q.shape[1] or V.shape[0] != K.shape[0]:
        raise ValueError("attend: inconsistent shapes")
    P, _ = Q.shape
    n = K.shape[0]
    m = V.shape[1]
    logits = _logits(Q, K, scale)
    mx = logits.max(axis=1)
    out = np.zeros((P, m), dtype=np.float64)
    z = np.zeros(P, dtype=np.float64)
    for j in range(n):
        w = np.exp(logits[:, j] - mx)
        z += w
        out += w[:, None] * V[j][None, :]
    out /= z[:, None]
    return out


def _logits(Q, K, scale):
    P = Q.shape[0]
    n = K.shape[0]
    logits = np.zeros((P, n), dtype=np.float64)
    for i in range(Q.shape[1]):  # sequential over the embedding dim
        logits += Q[:, i : i + 1] * K[None, :, i]
    logits *= scale
    return logits


def _attention_weights_python(Q, K, scale):
    Q = np.ascontiguousarray(Q, dtype=np.float64)
    K = np.ascontiguousarray(K, dtype=np.float64)
    if K.shape[1] != Q.shape[1]:
        raise ValueError("attention_weights: inconsistent shapes")
    logits = _logits(Q, K, scale)
    mx = logits.max(axis=1, keepdims=True)
    w = np.exp(logits - mx)
    z = np.zeros((Q.shape[0], 1), dtype=np.float64)
    for j in range(K.shape[0]):
        z[:, 0] += w[:, j]
    return w / z


def _select_backend():
    forced = os.environ.get("REGIONCOMP_BACKEND", "").strip().lower()
    if forced == "python":
        return "python", _attend_python, _attention_weights_python
    try:
        from . import _attnkernel
    except ImportError:
        if forced == "cython":
            raise ImportError(
                "REGIONCOMP_BACKEND=cython but the compiled kernel is unavailable"
            )
        return "python", _attend_python, _attention_weights_python

    def attend_c(Q, K, V, scale):
        return _attnkernel.attend(
            np.ascontiguousarray(Q, dtype=np.float64),
            np.ascontiguousarray(K, dtype=np.float64),
            np.ascontiguousarray(V, dtype=np.float64),
            float(scale),
        )

    def weights_c(Q, K, scale):
        return _attnkernel.attention_weights(
            np.ascontiguousarray(Q, dtype=np.float64),
            np.ascontiguousarray(K, dtype=np.float64),
            float(scale),
        )

    return "cython", attend_c, weights_c


BACKEND, attend, attention_weights = _select_backend()

attend_python = _attend_python
attention_weights_python = _attention_weights_python
