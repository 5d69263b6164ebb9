"""Compiled inner loops for long symbolic orbits."""

import numpy as np
from numba import njit


@njit(cache=True)
def markov_chain_walk(u, cpi, cum):
    n = u.shape[0]
    out = np.empty(n, dtype=np.int64)
    s = np.searchsorted(cpi, u[0], side="right")
    if s >= cpi.shape[0]:
        s = cpi.shape[0] - 1
    out[0] = s
    for t in range(1, n):
        row = cum[s]
        s = np.searchsorted(row, u[t], side="right")
        if s >= row.shape[0]:
            s = row.shape[0] - 1
        out[t] = s
    return out


@njit(cache=True)
def qr_log_increments(generators, word):
    """Per-step ``log |R_ii|`` of the re-orthonormalised frame.

    The frame ``Q`` starts at the identity; at each step ``A(word[t]) Q`` is
    re-orthonormalised by modified Gram-Schmidt.
    """
    n = word.shape[0]
    d = generators.shape[1]
    q = np.eye(d)
    z = np.empty((d, d))
    out = np.empty((n, d))
    for t in range(n):
        a = generators[word[t]]
        for i in range(d):
            for j in range(d):
                acc = 0.0
                for k in range(d):
                    acc += a[i, k] * q[k, j]
                z[i, j] = acc
        for j in range(d):
            for p in range(j):
                dot = 0.0
                for i in range(d):
                    dot += q[i, p] * z[i, j]
                for i in range(d):
                    z[i, j] -= dot * q[i, p]
            nrm = 0.0
            for i in range(d):
                nrm += z[i, j] * z[i, j]
            nrm = np.sqrt(nrm)
            out[t, j] = np.log(nrm)
            for i in range(d):
                q[i, j] = z[i, j] / nrm
    return out


@njit(cache=True)
def push_direction_logs(blocks, word, v0):
    """Forward-transport a unit vector; returns per-step ``log |A v|``."""
    n = word.shape[0]
    b = v0.shape[0]
    v = v0.copy()
    w = np.empty(b)
    out = np.empty(n)
    for t in range(n):
        a = blocks[word[t]]
        nrm = 0.0
        for i in range(b):
            acc = 0.0
            for k in range(b):
                acc += a[i, k] * v[k]
            w[i] = acc
            nrm += acc * acc
        nrm = np.sqrt(nrm)
        out[t] = np.log(nrm)
        for i in range(b):
            v[i] = w[i] / nrm
    return out


@njit(cache=True)
def pull_directions(inverse_blocks, word, v_end):
    """Backward-transport a unit vector with the inverse factors.

    Returns ``dirs`` with ``dirs[t]`` the unit direction at position ``t``
    (before factor ``word[t]`` is applied); ``dirs[n] = v_end``.
    """
    n = word.shape[0]
    b = v_end.shape[0]
    dirs = np.empty((n + 1, b))
    v = v_end.copy()
    for i in range(b):
        dirs[n, i] = v[i]
    for t in range(n - 1, -1, -1):
        a = inverse_blocks[word[t]]
        nrm = 0.0
        w = np.empty(b)
        for i in range(b):
            acc = 0.0
            for k in range(b):
                acc += a[i, k] * v[k]
            w[i] = acc
            nrm += acc * acc
        nrm = np.sqrt(nrm)
        for i in range(b):
            v[i] = w[i] / nrm
            dirs[t, i] = v[i]
    return dirs


@njit(cache=True)
def logs_along_directions(blocks, word, dirs):
    n = word.shape[0]
    b = dirs.shape[1]
    out = np.empty(n)
    for t in range(n):
        a = blocks[word[t]]
        nrm = 0.0
        for i in range(b):
            acc = 0.0
            for k in range(b):
                acc += a[i, k] * dirs[t, k]
            nrm += acc * acc
        out[t] = 0.5 * np.log(nrm)
    return out
