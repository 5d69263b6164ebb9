"""Independent reference computations used by the tests.

Nothing here calls into the library's numerical code: orbits are found by
brute force, invariant subspaces come from ``np.linalg.eig`` and rotation
numbers from tracking directions along a homotopy to the identity.
"""

import itertools
import math

import numpy as np


def brute_orbits(adj, n):
    """Canonical primitive admissible cyclic words of length ``n``."""
    adj = np.asarray(adj)
    k = len(adj)
    out = set()
    for w in itertools.product(range(k), repeat=n):
        if not all(adj[w[i], w[(i + 1) % n]] for i in range(n)):
            continue
        rots = [w[i:] + w[:i] for i in range(n)]
        if len(set(rots)) < n:
            continue
        out.add(min(rots))
    return out


def cyclic_2_factors(symbols):
    n = len(symbols)
    return {(symbols[i], symbols[(i + 1) % n]) for i in range(n)}


def word_product(gens, symbols, start=0):
    """``A(x_{start+n-1}) ... A(x_start)``."""
    n = len(symbols)
    m = np.eye(gens.shape[1])
    for j in range(n):
        m = gens[symbols[(start + j) % n]] @ m
    return m


def _span(v, dim):
    u, _, _ = np.linalg.svd(np.hstack([v.real, v.imag]))
    return u[:, :dim]


def dominated_by_definition(gens, words, k, nmax=12, tol=1e-9):
    """Raw domination inequality fitted over ``n <= nmax``.

    At every site of every orbit the bundles ``E`` (the ``k`` weakest
    eigendirections of the return map) and ``F`` (the rest) come from
    ``np.linalg.eig``. With ``s_n`` the supremum over sites of
    ``||A^n|E|| * ||(A^n|F)^-1||``, the fitted rate is the largest
    ``s_n ** (1/n)`` over the second half of the range; the index is
    dominated when that rate is below one.
    """
    d = gens.shape[1]
    s = np.zeros(nmax)
    for w in words:
        f = gens[list(w)]
        n = len(f)
        for x in range(n):
            ev, v = np.linalg.eig(word_product(gens, list(w), x))
            o = np.argsort(np.abs(ev), kind="stable")
            ev, v = ev[o], v[:, o]
            if abs(abs(ev[k - 1]) - abs(ev[k])) <= tol * abs(ev[k]):
                return False
            qe, qf = _span(v[:, :k], k), _span(v[:, k:], d - k)
            p = np.eye(d)
            for t in range(nmax):
                p = f[(x + t) % n] @ p
                r = np.linalg.norm(p @ qe, 2) / np.linalg.svd(p @ qf, compute_uv=False)[-1]
                s[t] = max(s[t], r)
    ns = np.arange(1, nmax + 1)
    rate = (s ** (1.0 / ns))[nmax // 2 - 1:].max()
    return bool(rate < 1.0)


def _polar_path(f, steps):
    """``R(s*phi) P^s`` for ``s`` in ``(0, 1]`` where ``f = R(phi) P``."""
    u, sv, vt = np.linalg.svd(f)
    rot = u @ vt
    phi = math.atan2(rot[1, 0], rot[0, 0])
    w, q = np.linalg.eigh(vt.T @ np.diag(sv) @ vt)
    for s in np.linspace(0, 1, steps + 1)[1:]:
        c, sn = math.cos(s * phi), math.sin(s * phi)
        yield np.array([[c, -sn], [sn, c]]) @ (q * w ** s) @ q.T


def tracked_rotation_number(factors, periods=50, directions=4096, steps=32):
    """Rotation number (turns per period) of orientation-preserving 2x2 factors.

    A sweep of ``directions`` unit vectors is carried through ``periods``
    periods; each factor is reached along its polar homotopy from the
    identity and the angle is continued by small principal increments.
    """
    th = np.linspace(0.0, math.pi, directions, endpoint=False)
    v = np.vstack([np.cos(th), np.sin(th)])
    total = np.zeros(directions)
    for _ in range(periods):
        for f in factors:
            if np.linalg.det(f) <= 0:
                raise ValueError("oracle handles orientation-preserving factors only")
            a0 = np.arctan2(v[1], v[0])
            prev = a0
            for p in _polar_path(np.asarray(f, dtype=float), steps):
                u = p @ v
                a = np.arctan2(u[1], u[0])
                total += np.angle(np.exp(1j * (a - prev)))
                prev = a
            v = np.asarray(f, dtype=float) @ v
            v /= np.linalg.norm(v, axis=0)
    return float(np.median(total) / (2 * math.pi * periods))


def stationary(transition):
    """Left Perron vector from a dense linear solve."""
    p = np.asarray(transition, dtype=float)
    k = len(p)
    a = np.vstack([p.T - np.eye(k), np.ones(k)])
    b = np.zeros(k + 1)
    b[-1] = 1.0
    return np.linalg.lstsq(a, b, rcond=None)[0]


def diagonal_exponents(gens, pi):
    """Sorted ``sum_a pi_a log|A(a)_ii|`` for diagonal generators."""
    logs = np.log(np.abs(np.array([np.diag(g) for g in gens])))
    return np.sort(pi @ logs)
