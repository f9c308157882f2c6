"""Numpy implementations of the matrix-product kernels.

These are the reference versions; ``_kernels.pyx`` mirrors them loop by loop.
All functions take an alphabet of square matrices ``mats`` with shape
``(k, r, r)`` and integer words with shape ``(S, n)`` whose letters index
into ``mats``. The matrix norm is the maximum absolute row sum.
"""
from __future__ import annotations

import numpy as np

# Cap on S*n matrices materialised at once by the chunked reductions.
_CHUNK = 1 << 21


def _row_norm(p: np.ndarray) -> np.ndarray:
    return np.abs(p).sum(axis=-1).max(axis=-1)


def _check(mats, words):
    mats = np.ascontiguousarray(mats, dtype=np.float64)
    words = np.ascontiguousarray(words, dtype=np.intp)
    if mats.ndim != 3 or mats.shape[1] != mats.shape[2]:
        raise ValueError("mats must have shape (k, r, r)")
    if words.ndim != 2:
        raise ValueError("words must have shape (S, n)")
    if words.size and (words.min() < 0 or words.max() >= mats.shape[0]):
        raise ValueError("word letter outside the alphabet")
    return mats, words


def prefix_lognorms(mats, words):
    """log ||A_{w_0} ... A_{w_j}|| for every prefix, shape (S, n)."""
    mats, words = _check(mats, words)
    S, n = words.shape
    r = mats.shape[1]
    out = np.empty((S, n))
    prod = np.broadcast_to(np.eye(r), (S, r, r)).copy()
    scale = np.zeros(S)
    for j in range(n):
        prod = prod @ mats[words[:, j]]
        t = np.abs(prod).max(axis=(1, 2))
        prod /= t[:, None, None]
        scale += np.log(t)
        out[:, j] = scale + np.log(_row_norm(prod))
    return out


def product_lognorms(mats, words):
    """log ||A_{w_0} ... A_{w_{n-1}}|| per word, shape (S,).

    Pairwise tree reduction with renormalisation, chunked over samples.
    """
    mats, words = _check(mats, words)
    S, n = words.shape
    r = mats.shape[1]
    if n == 0:
        return np.zeros(S)
    out = np.empty(S)
    step = max(1, _CHUNK // max(n, 1))
    for lo in range(0, S, step):
        w = words[lo:lo + step]
        prod = mats[w]  # (s, n, r, r)
        scale = np.zeros(prod.shape[:2])
        while prod.shape[1] > 1:
            if prod.shape[1] % 2:
                pad = np.broadcast_to(np.eye(r), (prod.shape[0], 1, r, r))
                prod = np.concatenate([prod, pad], axis=1)
                scale = np.concatenate([scale, np.zeros((scale.shape[0], 1))], axis=1)
            prod = prod[:, 0::2] @ prod[:, 1::2]
            scale = scale[:, 0::2] + scale[:, 1::2]
            t = np.abs(prod).max(axis=(2, 3))
            prod /= t[..., None, None]
            scale += np.log(t)
        out[lo:lo + step] = scale[:, 0] + np.log(_row_norm(prod[:, 0]))
    return out


def window_lognorms(mats, words, m):
    """log ||A_{w_i} ... A_{w_{i+m-1}}|| for i = 0..n-m, shape (S, n-m+1).

    Block method: cut each word into blocks of length m, build suffix products
    inside each block and prefix products inside the next block; a window
    starting at i is (suffix from i) @ (prefix up to i+m-1). Each product spans
    fewer than 2m letters, so no renormalisation is needed for moderate m.
    """
    mats, words = _check(mats, words)
    S, n = words.shape
    if m < 1 or m > n:
        raise ValueError("window length must satisfy 1 <= m <= n")
    step = max(1, _CHUNK // (2 * n))
    if S > step:
        return np.concatenate(
            [window_lognorms(mats, words[lo:lo + step], m) for lo in range(0, S, step)]
        )
    r = mats.shape[1]
    nb = -(-n // m)
    pad = nb * m - n
    w = np.concatenate([words, np.zeros((S, pad), dtype=np.intp)], axis=1).reshape(S, nb, m)
    mat = mats[w]  # (S, nb, m, r, r)
    pre = np.empty_like(mat)
    suf = np.empty_like(mat)
    pre[:, :, 0] = mat[:, :, 0]
    for j in range(1, m):
        pre[:, :, j] = pre[:, :, j - 1] @ mat[:, :, j]
    suf[:, :, m - 1] = mat[:, :, m - 1]
    for j in range(m - 2, -1, -1):
        suf[:, :, j] = mat[:, :, j] @ suf[:, :, j + 1]
    pre = pre.reshape(S, nb * m, r, r)
    suf = suf.reshape(S, nb * m, r, r)
    count = n - m + 1
    idx = np.arange(count)
    aligned = idx % m == 0
    res = np.empty((S, count, r, r))
    res[:, aligned] = pre[:, idx[aligned] + m - 1]
    ia = idx[~aligned]
    if ia.size:
        res[:, ~aligned] = suf[:, ia] @ pre[:, ia + m - 1]
    return np.log(_row_norm(res))
