"""Dominated splittings along periodic orbits and unstable signatures.

Domination is tested in the m-step, factor one-half normal form: along an
orbit the splitting ``E1 + E2`` (``E1`` spanned by the ``k`` weakest
Oseledets directions) is m-dominated when at every site

    ||A^(m)|E1|| * ||(A^(m)|E2)^-1|| <= 1/2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .cocycle import (
    EQUAL_TOL,
    LinearCocycle,
    OrbitCocycle,
    _as_orbit,
    _block_slices,
    _block_spectra,
    eigenvalues_closed_form,
    has_simple_spectrum,
    periodic_lyapunov_exponents,
)
from .sft import PeriodicWord

__all__ = [
    "DominationCertificate",
    "NoInvariantSplitting",
    "NotDominated",
    "Signature",
    "CycleWitness",
    "m_domination_test",
    "finest_dominated_splitting",
    "finest_splitting_report",
    "unstable_signature",
    "signature_robustness_margin",
    "perturbation_preserves_signature",
    "detect_equidimensional_cycle",
    "uniform_spectral_gap",
    "simple_star_probe",
    "HALF_TOL",
]

HALF_TOL = 1e-12  # slack on the 1/2 threshold for exact-arithmetic cases
MARGIN_FLOOR = 1e-6
MARGIN_CAP = 1.0


class NoInvariantSplitting(ValueError):
    """A complex pair straddles the requested index."""

    def __init__(self, k, witness):
        super().__init__(f"no invariant splitting at index {k} (orbit {witness})")
        self.index = k
        self.witness = witness


class NotDominated(ValueError):
    """Some site violates the m-step ratio bound.

    ``structural`` is set when no ``m`` can succeed (equal moduli across
    the index along the witness orbit).
    """

    def __init__(self, msg, witness, site=None, ratio=math.inf, structural=False):
        super().__init__(msg)
        self.witness = witness
        self.site = site
        self.ratio = ratio
        self.structural = structural


@dataclass(frozen=True)
class DominationCertificate:
    index: int
    m: int
    margin: float
    witness_orbits: tuple
    worst_orbit: PeriodicWord | None = None
    worst_site: int = 0
    worst_ratio: float = 0.0

    def as_record(self) -> dict:
        return {
            "index": self.index,
            "m": self.m,
            "margin": self.margin,
            "witness": [str(w) for w in self.witness_orbits],
        }


class Signature(tuple):
    """Block dimensions of a finest dominated splitting, weakest block first."""

    def __new__(cls, dims: Iterable[int]):
        dims = tuple(int(x) for x in dims)
        if not dims or min(dims) < 1:
            raise ValueError("signature entries must be positive")
        return super().__new__(cls, dims)

    def __str__(self):
        return "(" + ",".join(str(x) for x in self) + ")"

    def __repr__(self):
        return f"Signature{str(self)}"

    @classmethod
    def parse(cls, text: str) -> "Signature":
        return cls(int(x) for x in text.strip("() ").split(","))

    @property
    def dimension(self) -> int:
        return sum(self)


@dataclass(frozen=True)
class CycleWitness:
    orbit_p: PeriodicWord
    orbit_q: PeriodicWord
    sig_p: Signature
    sig_q: Signature
    robustness_margin: float


# --------------------------------------------------------- orbit splittings

def _bundle_blocks(oc: OrbitCocycle, bundle: str) -> list[slice]:
    blocks = [sl for _, sl in _block_slices(oc.split)]
    if bundle == "full":
        return blocks
    if bundle == "unstable":
        return [oc.unstable] if oc.split[1] else []
    if bundle == "stable":
        return [oc.stable] if oc.split[0] else []
    raise ValueError(f"unknown bundle {bundle!r}")


def _factor_product(mats: Sequence[np.ndarray]) -> np.ndarray:
    """Normalised product of ``mats`` applied in order; matrices may be zero-padded."""
    m = np.eye(mats[0].shape[0])
    for f in mats:
        m = f @ m
        m /= np.abs(m).max()
    return m


def _annihilating_range(m: np.ndarray, vals: list[complex], dim: int) -> np.ndarray:
    """Orthonormal basis of ``range(prod (m - v))`` over ``vals`` (conjugate pairs as real quadratics)."""
    b = m.shape[0]
    t = np.eye(b)
    i = 0
    while i < len(vals):
        v = vals[i]
        if v.imag != 0:
            q = m @ m - 2 * v.real * m + abs(v) ** 2 * np.eye(b)
            t = q @ t
            i += 2
        else:
            t = (m - v.real * np.eye(b)) @ t
            i += 1
        t /= max(np.abs(t).max(), 1e-300)
    u, _, _ = np.linalg.svd(t)
    return u[:, :dim]


def _orth(x: np.ndarray) -> np.ndarray:
    q, _ = np.linalg.qr(x)
    return q


def _block_subspaces(fac: np.ndarray, kb: int):
    """Weak (dim ``kb``) and strong subspaces of one block at every orbit site.

    The strong subspace is read off the forward product and pushed forward;
    the weak one comes from the inverse product and is pulled back, so both
    transports are numerically stable.
    """
    n, b, _ = fac.shape
    m = _factor_product(fac)
    vals = sorted(eigenvalues_closed_form(m), key=lambda z: (abs(z), z.real, z.imag))
    inv = np.linalg.inv(fac)
    minv = _factor_product(inv[::-1])
    ivals = sorted(eigenvalues_closed_form(minv), key=lambda z: (abs(z), z.real, z.imag))
    strong0 = _annihilating_range(m, vals[:kb], b - kb)
    weak0 = _annihilating_range(minv, ivals[:b - kb], kb)
    strong = np.empty((n, b, b - kb))
    weak = np.empty((n, b, kb))
    strong[0] = strong0
    for x in range(1, n):
        strong[x] = _orth(fac[x - 1] @ strong[x - 1])
    w = weak0
    for x in range(n - 1, -1, -1):
        w = _orth(inv[x] @ w)
        weak[x] = w
    return weak, strong


def _orbit_split_bases(oc: OrbitCocycle, k: int, bundle: str, tol: float):
    """Bases ``(Q1, Q2)`` of the weakest-``k`` / remaining Oseledets subspaces per site.

    Coordinates are those of the bundle (concatenated blocks).
    """
    blocks = _bundle_blocks(oc, bundle)
    dims = [sl.stop - sl.start for sl in blocks]
    total = sum(dims)
    if not 1 <= k < total:
        raise ValueError(f"index {k} outside 1..{total - 1}")
    by_start = {sl.start: spec for (_, sl), spec in zip(_block_slices(oc.split), _block_spectra(oc, tol))}
    entries = []
    for bi, sl in enumerate(blocks):
        spec = by_start[sl.start]
        for j, (lm, z) in enumerate(zip(spec.log_moduli, spec.eig.eigenvalues)):
            entries.append((lm, bi, j, z.imag != 0))
    entries.sort(key=lambda e: (e[0], e[1], e[2]))
    lo, hi = entries[k - 1], entries[k]
    if lo[1] == hi[1] and lo[3] and hi[3]:
        raise NoInvariantSplitting(k, oc.word)
    scale = max(1.0, abs(lo[0]), abs(hi[0]))
    if hi[0] - lo[0] <= tol * scale:
        raise NotDominated(f"equal moduli across index {k} on orbit {oc.word}",
                           oc.word, 0, 1.0, structural=True)
    kb = [sum(1 for e in entries[:k] if e[1] == bi) for bi in range(len(blocks))]
    n = oc.period
    q1 = np.zeros((n, total, k))
    q2 = np.zeros((n, total, total - k))
    off = c1 = c2 = 0
    for bi, sl in enumerate(blocks):
        b = dims[bi]
        fac = oc.factors[:, sl, sl]
        if kb[bi] == 0:
            q2[:, off:off + b, c2:c2 + b] = np.eye(b)
        elif kb[bi] == b:
            q1[:, off:off + b, c1:c1 + b] = np.eye(b)
        else:
            weak, strong = _block_subspaces(fac, kb[bi])
            q1[:, off:off + b, c1:c1 + kb[bi]] = weak
            q2[:, off:off + b, c2:c2 + b - kb[bi]] = strong
        c1 += kb[bi]
        c2 += b - kb[bi]
        off += b
    return q1, q2


def _bundle_factors(oc: OrbitCocycle, bundle: str) -> np.ndarray:
    blocks = _bundle_blocks(oc, bundle)
    if bundle == "full":
        return np.asarray(oc.factors)
    sl = blocks[0]
    return oc.factors[:, sl, sl]


def _m_step_products(fac: np.ndarray, m: int) -> np.ndarray:
    n = fac.shape[0]
    prods = np.broadcast_to(np.eye(fac.shape[1]), fac.shape).copy()
    for j in range(m):
        idx = (np.arange(n) + j) % n
        prods = fac[idx] @ prods
        prods /= np.abs(prods).max(axis=(1, 2), keepdims=True)
    return prods


def _site_ratios(oc: OrbitCocycle, k: int, m: int, bundle: str, tol: float) -> np.ndarray:
    q1, q2 = _orbit_split_bases(oc, k, bundle, tol)
    prods = _m_step_products(_bundle_factors(oc, bundle), m)
    s1 = np.linalg.svd(prods @ q1, compute_uv=False)[:, 0]
    s2 = np.linalg.svd(prods @ q2, compute_uv=False)[:, -1]
    return s1 / s2


def _orbits(c: LinearCocycle | None, orbits) -> list[OrbitCocycle]:
    out = [_as_orbit(c, o) for o in orbits]
    if not out:
        raise ValueError("orbit set is empty")
    return out


def m_domination_test(c: LinearCocycle | None, orbits, k: int, m: int,
                      bundle: str = "full", tol: float = EQUAL_TOL) -> DominationCertificate:
    """Certify m-domination at index ``k`` along every orbit, or raise.

    The certificate's ``margin`` is ``-log(worst ratio) / m``: the log-gap per
    step guaranteed by the worst site. Raises :class:`NoInvariantSplitting`
    when a complex pair straddles ``k`` and :class:`NotDominated` when the
    ratio exceeds one half somewhere (the witness is the worst orbit).
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    ocs = _orbits(c, orbits)
    worst = (-1.0, None, 0)
    for oc in ocs:
        r = _site_ratios(oc, k, m, bundle, tol)
        i = int(np.argmax(r))
        if r[i] > worst[0]:
            worst = (float(r[i]), oc.word, i)
    ratio, word, site = worst
    if ratio > 0.5 + HALF_TOL:
        raise NotDominated(f"ratio {ratio:.6g} > 1/2 at site {site} of orbit {word} (k={k}, m={m})",
                           word, site, ratio)
    return DominationCertificate(k, m, -math.log(ratio) / m, tuple(o.word for o in ocs),
                                 word, site, ratio)


def finest_splitting_report(c: LinearCocycle | None, orbits, m_max: int = 12,
                            bundle: str = "full", tol: float = EQUAL_TOL):
    """Finest dominated splitting with the certificate found at each boundary.

    Returns ``(dims, certificates)``. The bundle is refined recursively: a
    dominated index splits an interval of Oseledets directions in two and
    both halves are searched again.
    """
    ocs = _orbits(c, orbits)
    total = sum(sl.stop - sl.start for sl in _bundle_blocks(ocs[0], bundle))
    cache: dict[int, DominationCertificate | None] = {}

    def certify(k):
        if k not in cache:
            cache[k] = None
            for m in range(1, m_max + 1):
                try:
                    cache[k] = m_domination_test(None, ocs, k, m, bundle, tol)
                    break
                except NoInvariantSplitting:
                    break
                except NotDominated as e:
                    if e.structural:
                        break
        return cache[k]

    cuts = []

    def refine(lo, hi):
        for k in range(lo + 1, hi):
            if certify(k) is not None:
                cuts.append(k)
                refine(lo, k)
                refine(k, hi)
                return

    refine(0, total)
    bounds = [0] + sorted(cuts) + [total]
    dims = tuple(b - a for a, b in zip(bounds, bounds[1:]))
    return dims, [cache[k] for k in sorted(cuts)]


def finest_dominated_splitting(c: LinearCocycle | None, orbits, m_max: int = 12,
                               bundle: str = "full") -> tuple[int, ...]:
    return finest_splitting_report(c, orbits, m_max, bundle)[0]


# --------------------------------------------------------------- signatures

def _group_moduli(logs: Sequence[float], complex_flags: Sequence[bool], tol: float) -> Signature:
    dims = [1]
    for j in range(1, len(logs)):
        same = abs(logs[j] - logs[j - 1]) <= tol * max(1.0, abs(logs[j]), abs(logs[j - 1]))
        if same or (complex_flags[j] and complex_flags[j - 1]):
            dims[-1] += 1
        else:
            dims.append(1)
    return Signature(dims)


def unstable_signature(oc: OrbitCocycle, tol: float = EQUAL_TOL) -> Signature:
    """Finest dominated splitting of the unstable bundle along a periodic orbit.

    Eigenvalues of the unstable product are grouped by modulus; complex pairs,
    equal moduli and Jordan blocks all merge into one block. For a 2D
    unstable bundle this gives ``(1,1)`` or ``(2)``.
    """
    if oc.split[1] == 0:
        raise ValueError("orbit has no unstable bundle")
    spec = [b for b in _block_spectra(oc, tol) if b.name == "unstable"][0]
    flags = [z.imag != 0 for z in spec.eig.eigenvalues]
    return _group_moduli(spec.log_moduli, flags, tol)


def _batch_signatures_2d(fac: np.ndarray, tol: float) -> np.ndarray:
    """True where a batch ``(S, n, 2, 2)`` of unstable factor lists has signature (1,1)."""
    s, n = fac.shape[:2]
    m = np.broadcast_to(np.eye(2), (s, 2, 2)).copy()
    log_scale = np.zeros(s)
    for j in range(n):
        m = fac[:, j] @ m
        nrm = np.abs(m).max(axis=(1, 2))
        m /= nrm[:, None, None]
        log_scale += np.log(nrm)
    logdet = np.log(np.abs(np.linalg.det(fac))).sum(axis=1)
    tr = m[:, 0, 0] + m[:, 1, 1]
    det = m[:, 0, 0] * m[:, 1, 1] - m[:, 0, 1] * m[:, 1, 0]
    disc = tr * tr - 4 * det
    real = disc > 0
    big = 0.5 * (np.abs(tr) + np.sqrt(np.where(real, disc, 0.0)))
    l1 = np.log(big) + log_scale
    l2 = logdet - l1
    gap = np.abs(l1 - l2)
    return real & (gap > tol * np.maximum(1.0, np.maximum(np.abs(l1), np.abs(l2))))


def _perturbation_directions(rng: np.random.Generator, samples: int, n: int, b: int):
    g = rng.standard_normal((samples, n, b, b))
    g /= np.linalg.norm(g, ord=2, axis=(2, 3), keepdims=True)
    s = rng.random((samples, n, 1, 1))
    return g * s


def perturbation_preserves_signature(oc: OrbitCocycle, delta: float, samples: int, seed: int,
                                     tol: float = EQUAL_TOL) -> bool:
    """Check ``samples`` random factor perturbations of norm <= ``delta``.

    Every site's unstable factor ``F`` is replaced by ``(I + delta*s*G) F``
    with ``G`` a Gaussian matrix scaled to unit operator norm and
    ``s ~ U[0,1]``.
    """
    dirs = _perturbation_directions(np.random.default_rng(seed), samples, oc.period, oc.split[1])
    return _preserved(oc, dirs, delta, tol)


def _preserved(oc: OrbitCocycle, dirs: np.ndarray, delta: float, tol: float) -> bool:
    target = unstable_signature(oc, tol)
    u = oc.split[1]
    fu = oc.block_factors("unstable")
    pert = (np.eye(u) + delta * dirs) @ fu[None]
    if u == 2:
        is11 = _batch_signatures_2d(pert, tol)
        want = target == Signature((1, 1))
        return bool((is11 == want).all())
    for p in pert:
        o = OrbitCocycle(PeriodicWord(oc.word.symbols), p, (0, u))
        if unstable_signature(o, tol) != target:
            return False
    return True


def signature_robustness_margin(oc: OrbitCocycle, samples: int = 100, seed: int = 0,
                                tol: float = EQUAL_TOL, iterations: int = 40) -> float:
    """Largest sampled perturbation size that keeps the unstable signature.

    The same ``samples`` perturbation directions (see
    :func:`perturbation_preserves_signature`) are reused for every trial
    size and the size is located by bisection on ``[1e-6, 1]``. Returns 0
    when the signature already changes at ``1e-6`` and 1 when it survives
    the whole range.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    if oc.split[1] == 1:
        return MARGIN_CAP
    dirs = _perturbation_directions(np.random.default_rng(seed), samples, oc.period, oc.split[1])
    if not _preserved(oc, dirs, MARGIN_FLOOR, tol):
        return 0.0
    if _preserved(oc, dirs, MARGIN_CAP, tol):
        return MARGIN_CAP
    lo, hi = math.log(MARGIN_FLOOR), math.log(MARGIN_CAP)
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        if _preserved(oc, dirs, math.exp(mid), tol):
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-3:
            break
    return math.exp(lo)


def detect_equidimensional_cycle(c: LinearCocycle | None, orbits, samples: int = 100,
                                 seed: int = 0) -> CycleWitness | None:
    """Pair of orbits with different unstable signatures and the best joint margin.

    Returns None when all signatures agree or no pair has a positive margin.
    """
    ocs = _orbits(c, orbits)
    best: dict[Signature, tuple[float, OrbitCocycle]] = {}
    sigs = [(unstable_signature(o), o) for o in ocs]
    if len({s for s, _ in sigs}) < 2:
        return None
    for i, (sig, o) in enumerate(sigs):
        margin = signature_robustness_margin(o, samples, seed + i)
        if sig not in best or margin > best[sig][0]:
            best[sig] = (margin, o)
    keys = sorted(best)
    choice = None
    for a in range(len(keys)):
        for b in range(a + 1, len(keys)):
            mp, op = best[keys[a]]
            mq, oq = best[keys[b]]
            val = min(mp, mq)
            if choice is None or val > choice.robustness_margin:
                # report the (1,...,1)-type signature first, as in (1,1) vs (2)
                if len(keys[a]) < len(keys[b]):
                    keys_ab = (oq, op, keys[b], keys[a])
                else:
                    keys_ab = (op, oq, keys[a], keys[b])
                choice = CycleWitness(keys_ab[0].word, keys_ab[1].word, keys_ab[2], keys_ab[3], val)
    if choice is None or choice.robustness_margin <= 0:
        return None
    return choice


def uniform_spectral_gap(c: LinearCocycle | None, orbits) -> float:
    """Smallest adjacent gap of periodic exponents over the orbit set."""
    gap = math.inf
    for oc in _orbits(c, orbits):
        if not has_simple_spectrum(oc):
            raise ValueError(f"orbit {oc.word} does not have simple spectrum")
        ex = periodic_lyapunov_exponents(oc)
        gap = min(gap, float(np.min(np.diff(ex))))
    return gap


def _merge_and_rotate(oc: OrbitCocycle, sl: slice, delta: float):
    """Near-identity factor at site 0 that equalises two moduli and then rotates.

    Only built for 2D blocks with real spectrum; returns None when the
    required factor exceeds ``delta``.
    """
    fac = oc.factors[:, sl, sl]
    if fac.shape[1] != 2:
        return None
    m = _factor_product(fac)
    vals = sorted(eigenvalues_closed_form(m), key=abs)
    if any(z.imag != 0 for z in vals) or abs(vals[1]) == 0:
        return None
    ratio = abs(vals[1]) / max(abs(vals[0]), 1e-300)
    # work in the basis that makes the product at site 0 diagonal
    w, v = np.linalg.eig(m)
    order = np.argsort(np.abs(w))
    v = np.real(v[:, order])
    if abs(np.linalg.det(v)) < 1e-12:
        return None
    stretch = v @ np.diag([ratio, 1.0]) @ np.linalg.inv(v)
    phi = 0.5 * delta
    c, s = math.cos(phi), math.sin(phi)
    p = v @ np.array([[c, -s], [s, c]]) @ np.linalg.inv(v) @ stretch
    if np.linalg.norm(p - np.eye(2), 2) > delta:
        return None
    return p


def simple_star_probe(c: LinearCocycle | None, orbits, delta: float, samples: int = 100,
                      seed: int = 0) -> bool:
    """Finite-sample test that ``delta``-perturbations keep every spectrum simple.

    Random block-diagonal perturbations ``I + delta*s*G`` at every site are
    complemented by a deterministic merge-then-rotate factor for each 2D
    block, which is the cheapest way to destroy a small modulus gap.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    rng = np.random.default_rng(seed)
    for oc in _orbits(c, orbits):
        if not has_simple_spectrum(oc):
            return False
        n, d = oc.period, oc.dimension
        g = np.zeros((samples, n, d, d))
        for _, sl in _block_slices(oc.split):
            b = sl.stop - sl.start
            g[:, :, sl, sl] = _perturbation_directions(rng, samples, n, b)
        for sample in g:
            p = oc.with_factors((np.eye(d) + delta * sample) @ oc.factors)
            if not has_simple_spectrum(p):
                return False
        for _, sl in _block_slices(oc.split):
            pert = _merge_and_rotate(oc, sl, delta)
            if pert is None:
                continue
            f = np.array(oc.factors)
            full = np.eye(d)
            full[sl, sl] = pert
            f[0] = full @ f[0]
            if not has_simple_spectrum(oc.with_factors(f)):
                return False
    return True
