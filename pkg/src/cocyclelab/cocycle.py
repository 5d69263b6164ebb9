"""Locally constant linear cocycles over an SFT and their periodic data.

Generators are block diagonal in adapted coordinates: the first
``split[0]`` coordinates span the stable bundle, the remaining ``split[1]``
the unstable one. Eigenvalues of the (at most 3x3) period products are
obtained from closed-form characteristic polynomial roots.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .sft import PeriodicWord, ResourceLimitError, SftSystem

__all__ = [
    "EQUAL_TOL",
    "LinearCocycle",
    "OrbitCocycle",
    "EigenData",
    "HyperbolicityCertificate",
    "NotHyperbolic",
    "eigen_data",
    "eigenvalues_closed_form",
    "rotation",
    "orbit_cocycle",
    "product_along_word",
    "block_product",
    "periodic_lyapunov_exponents",
    "block_exponents",
    "has_simple_spectrum",
    "hyperbolicity_certificate",
]

EQUAL_TOL = 1e-9
"""Relative tolerance below which two eigenvalues count as equal."""

DET_FLOOR = 1e-12


def rotation(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def _readonly(a) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


def _block_slices(split) -> list[tuple[str, slice]]:
    s, u = split
    out = []
    if s:
        out.append(("stable", slice(0, s)))
    if u:
        out.append(("unstable", slice(s, s + u)))
    return out


def _check_block_diagonal(mats: np.ndarray, split, what: str):
    s, u = split
    if s == 0 or u == 0:
        return
    scale = max(np.abs(mats).max(), 1.0)
    off = max(np.abs(mats[:, :s, s:]).max(), np.abs(mats[:, s:, :s]).max())
    if off > 1e-12 * scale:
        raise ValueError(f"{what} are not block diagonal for split {tuple(split)}")


# ---------------------------------------------------------------- eigenvalues

def _roots2(tr: float, det: float) -> tuple[complex, complex]:
    disc = tr * tr - 4.0 * det
    if disc >= 0:
        sq = math.sqrt(disc)
        # avoid cancellation in the smaller root
        big = -0.5 * (-tr - sq) if tr >= 0 else -0.5 * (-tr + sq)
        small = det / big if big != 0 else 0.0
        return complex(small), complex(big)
    im = 0.5 * math.sqrt(-disc)
    return complex(0.5 * tr, -im), complex(0.5 * tr, im)


def _cubic_roots(m: np.ndarray) -> list[complex]:
    tr = m[0, 0] + m[1, 1] + m[2, 2]
    minors = (m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
              + m[0, 0] * m[2, 2] - m[0, 2] * m[2, 0]
              + m[1, 1] * m[2, 2] - m[1, 2] * m[2, 1])
    det = float(np.linalg.det(m))
    a, b, c = -tr, minors, -det

    def poly(x):
        return ((x + a) * x + b) * x + c

    def dpoly(x):
        return (3 * x + 2 * a) * x + b

    p = b - a * a / 3.0
    q = 2 * a ** 3 / 27.0 - a * b / 3.0 + c
    shift = -a / 3.0
    disc = (q / 2) ** 2 + (p / 3) ** 3
    if disc > 0:
        sq = math.sqrt(disc)
        u = np.cbrt(-q / 2 + sq)
        v = np.cbrt(-q / 2 - sq)
        r = float(u + v) + shift
        for _ in range(3):
            dp = dpoly(r)
            if dp == 0:
                break
            r -= poly(r) / dp
        # the remaining pair from trace and determinant of the deflated factor
        z1, z2 = _roots2(tr - r, det / r)
        return [complex(r), z1, z2]
    if p == 0:
        return [complex(shift)] * 3
    rad = 2 * math.sqrt(-p / 3)
    arg = max(-1.0, min(1.0, 3 * q / (p * rad)))
    phi = math.acos(arg) / 3
    roots = []
    for k in range(3):
        x = rad * math.cos(phi - 2 * math.pi * k / 3) + shift
        dp = dpoly(x)
        if abs(dp) > 1e-6 * max(1.0, x * x):
            x -= poly(x) / dp
        roots.append(complex(x))
    return roots


def _decoupled_index(m: np.ndarray) -> int | None:
    n = m.shape[0]
    for i in range(n):
        others = [j for j in range(n) if j != i]
        if all(m[i, j] == 0 and m[j, i] == 0 for j in others):
            return i
    return None


def eigenvalues_closed_form(m) -> list[complex]:
    """Eigenvalues of a 1x1, 2x2 or 3x3 real matrix via its characteristic polynomial."""
    m = np.asarray(m, dtype=float)
    n = m.shape[0]
    if m.shape != (n, n) or n > 3:
        raise ValueError("closed-form eigenvalues need a square matrix of size <= 3")
    if n == 1:
        return [complex(m[0, 0])]
    if n == 2:
        return list(_roots2(m[0, 0] + m[1, 1], m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]))
    i = _decoupled_index(m)
    if i is not None:
        rest = [j for j in range(3) if j != i]
        return [complex(m[i, i])] + eigenvalues_closed_form(m[np.ix_(rest, rest)])
    return _cubic_roots(m)


def _sort_key(z: complex):
    return (abs(z), z.real, z.imag)


@dataclass(frozen=True)
class EigenData:
    """Eigenvalues of a small real matrix with classification flags.

    ``nilpotent_defect`` holds ``(value, algebraic - geometric multiplicity)``
    for every repeated real eigenvalue.
    """

    eigenvalues: tuple[complex, ...]
    moduli_sorted: tuple[float, ...]
    real_and_distinct: bool
    has_complex_pair: bool
    nilpotent_defect: tuple[tuple[float, int], ...]

    @property
    def real(self) -> bool:
        return not self.has_complex_pair

    @property
    def has_nilpotent_part(self) -> bool:
        return any(d > 0 for _, d in self.nilpotent_defect)


def _same(a: complex, b: complex, tol: float) -> bool:
    return abs(a - b) <= tol * max(abs(a), abs(b))


def eigen_data(m, tol: float = EQUAL_TOL, check_singular: bool = True) -> EigenData:
    """Eigen-decomposition summary of a matrix of size at most 3.

    Complex pairs whose imaginary parts are within ``tol`` (relative) are
    collapsed onto the real axis. Eigenvalues are ordered by modulus, then
    real part, then imaginary part.
    """
    m = np.asarray(m, dtype=float)
    if check_singular and abs(np.linalg.det(m)) < DET_FLOOR:
        raise ValueError("matrix is (nearly) singular")
    vals = eigenvalues_closed_form(m)
    cleaned = []
    for z in vals:
        if z.imag != 0 and 2 * abs(z.imag) <= tol * abs(z):
            z = complex(z.real)
        cleaned.append(z)
    vals = sorted(cleaned, key=_sort_key)
    has_complex = any(z.imag != 0 for z in vals)
    distinct = all(not _same(vals[i], vals[j], tol)
                   for i in range(len(vals)) for j in range(i + 1, len(vals)))
    defects = []
    seen: list[complex] = []
    for z in vals:
        if z.imag != 0 or any(_same(z, s, tol) for s in seen):
            continue
        cluster = [w for w in vals if w.imag == 0 and _same(w, z, tol)]
        if len(cluster) > 1:
            lam = float(np.mean([w.real for w in cluster]))
            sv = np.linalg.svd(m - lam * np.eye(m.shape[0]), compute_uv=False)
            geometric = int((sv <= 1e-8 * max(abs(lam), 1e-300)).sum())
            defects.append((lam, max(len(cluster) - geometric, 0)))
        seen.append(z)
    return EigenData(
        eigenvalues=tuple(vals),
        moduli_sorted=tuple(sorted(abs(z) for z in vals)),
        real_and_distinct=(not has_complex) and distinct,
        has_complex_pair=has_complex,
        nilpotent_defect=tuple(defects),
    )


# ------------------------------------------------------------------ cocycles

@dataclass(frozen=True, eq=False)
class LinearCocycle:
    """One invertible ``d x d`` matrix per symbol, block diagonal w.r.t. ``split``."""

    generators: np.ndarray
    split: tuple[int, int]
    name: str = ""

    def __post_init__(self):
        g = np.asarray(self.generators, dtype=float)
        if g.ndim != 3 or g.shape[1] != g.shape[2]:
            raise ValueError("generators must have shape (k, d, d)")
        d = g.shape[1]
        if d not in (2, 3):
            raise ValueError("dimension must be 2 or 3")
        split = tuple(int(x) for x in self.split)
        if len(split) != 2 or min(split) < 0 or sum(split) != d:
            raise ValueError(f"split {split} does not add up to dimension {d}")
        dets = np.abs(np.linalg.det(g))
        if (dets < DET_FLOOR).any():
            raise ValueError(f"generator {int(np.argmin(dets))} is not invertible")
        _check_block_diagonal(g, split, "generators")
        object.__setattr__(self, "generators", _readonly(g))
        object.__setattr__(self, "split", split)

    @classmethod
    def from_blocks(cls, stable: Sequence, unstable: Sequence, name: str = "") -> "LinearCocycle":
        """Assemble generators from per-symbol stable and unstable blocks."""
        stable = [np.atleast_2d(np.asarray(b, dtype=float)) for b in stable]
        unstable = [np.atleast_2d(np.asarray(b, dtype=float)) for b in unstable]
        if len(stable) != len(unstable):
            raise ValueError("need one stable and one unstable block per symbol")
        s, u = stable[0].shape[0], unstable[0].shape[0]
        gens = np.zeros((len(stable), s + u, s + u))
        for a, (bs, bu) in enumerate(zip(stable, unstable)):
            gens[a, :s, :s] = bs
            gens[a, s:, s:] = bu
        return cls(gens, (s, u), name)

    @property
    def dimension(self) -> int:
        return self.generators.shape[1]

    @property
    def alphabet_size(self) -> int:
        return self.generators.shape[0]

    @property
    def unstable(self) -> slice:
        return slice(self.split[0], self.dimension)

    @property
    def stable(self) -> slice:
        return slice(0, self.split[0])

    def is_diagonal(self) -> bool:
        g = self.generators
        return bool((g * (1 - np.eye(self.dimension))[None] == 0).all())

    def along(self, word) -> "OrbitCocycle":
        return orbit_cocycle(self, word)

    def relabel(self, perm: Sequence[int]) -> "LinearCocycle":
        """Cocycle seen through the symbol renaming ``a -> perm[a]``."""
        perm = list(perm)
        gens = np.empty_like(self.generators)
        for a, b in enumerate(perm):
            gens[b] = self.generators[a]
        return LinearCocycle(gens, self.split, self.name)


@dataclass(frozen=True, eq=False)
class OrbitCocycle:
    """Factor list carried by a periodic orbit; ``factors[i]`` acts at site ``i``.

    Perturbations replace factors of a copy; the generator set is untouched.
    """

    word: PeriodicWord
    factors: np.ndarray
    split: tuple[int, int]

    def __post_init__(self):
        f = np.asarray(self.factors, dtype=float)
        if f.ndim != 3 or f.shape[0] != len(self.word):
            raise ValueError("need one factor per orbit site")
        if (np.abs(np.linalg.det(f)) < DET_FLOOR).any():
            raise ValueError("orbit factor is not invertible")
        _check_block_diagonal(f, self.split, "orbit factors")
        object.__setattr__(self, "factors", _readonly(f))
        object.__setattr__(self, "split", tuple(self.split))

    @property
    def period(self) -> int:
        return len(self.word)

    @property
    def dimension(self) -> int:
        return self.factors.shape[1]

    @property
    def unstable(self) -> slice:
        return slice(self.split[0], self.dimension)

    @property
    def stable(self) -> slice:
        return slice(0, self.split[0])

    def with_factors(self, factors) -> "OrbitCocycle":
        return OrbitCocycle(self.word, factors, self.split)

    def rotate(self, r: int) -> "OrbitCocycle":
        """Same orbit based at site ``r``."""
        r %= self.period
        return OrbitCocycle(self.word.rotate(r), np.roll(self.factors, -r, axis=0), self.split)

    def canonical(self) -> "OrbitCocycle":
        return self.rotate(self.word.rotation_offset())

    def repeat(self, times: int) -> "OrbitCocycle":
        return OrbitCocycle(self.word.repeat(times), np.concatenate([self.factors] * times), self.split)

    def block_factors(self, which: str = "unstable") -> np.ndarray:
        sl = self.unstable if which == "unstable" else self.stable if which == "stable" else slice(None)
        return self.factors[:, sl, sl]

    def inverse(self) -> "OrbitCocycle":
        """Cocycle of the inverse dynamics, with the bundle roles swapped.

        The unstable bundle of the result is the stable bundle of ``self``;
        the word is read backwards.
        """
        s, u = self.split
        perm = list(range(s, s + u)) + list(range(s))
        inv = np.linalg.inv(self.factors[::-1])
        inv = inv[:, perm][:, :, perm]
        return OrbitCocycle(PeriodicWord(self.word.symbols[::-1]), inv, (u, s))


def orbit_cocycle(c: LinearCocycle, word) -> OrbitCocycle:
    if not isinstance(word, PeriodicWord):
        word = PeriodicWord(tuple(word))
    if max(word.symbols) >= c.alphabet_size:
        raise ValueError(f"word {word} uses a symbol without generator")
    return OrbitCocycle(word, c.generators[list(word.symbols)], c.split)


def _as_orbit(c, orbit) -> OrbitCocycle:
    return orbit if isinstance(orbit, OrbitCocycle) else orbit_cocycle(c, orbit)


def product_along_word(oc: OrbitCocycle) -> np.ndarray:
    """``factors[n-1] @ ... @ factors[0]``."""
    m = np.eye(oc.dimension)
    for f in oc.factors:
        m = f @ m
    return m


def block_product(factors: np.ndarray) -> tuple[np.ndarray, float]:
    """Norm-renormalised product of square factors.

    Returns ``(m, log_scale)`` with ``factors[-1] @ ... @ factors[0] ==
    exp(log_scale) * m`` and ``||m|| == 1``.
    """
    b = factors.shape[1]
    m = np.eye(b)
    log_scale = 0.0
    for f in factors:
        m = f @ m
        nrm = np.abs(m).max()
        m = m / nrm
        log_scale += math.log(nrm)
    return m, log_scale


class _BlockSpectrum(NamedTuple):
    name: str
    eig: EigenData
    log_moduli: tuple[float, ...]  # summed over one period, ascending
    signs: tuple[complex, ...]  # unit-modulus eigenvalue directions, same order


def _block_spectra(oc: OrbitCocycle, tol: float = EQUAL_TOL) -> list[_BlockSpectrum]:
    out = []
    for name, sl in _block_slices(oc.split):
        fac = oc.factors[:, sl, sl]
        m, ls = block_product(fac)
        ed = eigen_data(m, tol, check_singular=False)
        logdet = float(np.sum(np.log(np.abs(np.linalg.det(fac)))))
        vals = ed.eigenvalues
        if len(vals) == 1:
            logs = (logdet,)
        elif len(vals) == 2:
            if ed.has_complex_pair or abs(vals[0]) == 0:
                big = logdet / 2 if ed.has_complex_pair else math.log(abs(vals[1])) + ls
            else:
                big = math.log(abs(vals[1])) + ls
            logs = (logdet - big, big) if not ed.has_complex_pair else (logdet / 2, logdet / 2)
        else:
            logs = tuple(math.log(abs(z)) + ls for z in vals)
        dirs = tuple(z / abs(z) for z in vals)
        out.append(_BlockSpectrum(name, ed, tuple(logs), dirs))
    return out


def block_exponents(oc: OrbitCocycle) -> dict[str, np.ndarray]:
    """Periodic Lyapunov exponents of each block, ascending."""
    n = oc.period
    return {b.name: np.array(b.log_moduli) / n for b in _block_spectra(oc)}


def periodic_lyapunov_exponents(oc: OrbitCocycle) -> np.ndarray:
    """Ascending ``log|eigenvalue| / period`` of the period product.

    Computed block by block on renormalised products, so long orbits do not
    overflow; the union over blocks is returned.
    """
    ex = np.concatenate(list(block_exponents(oc).values()))
    return np.sort(ex)


def has_simple_spectrum(oc: OrbitCocycle, tol: float = EQUAL_TOL) -> bool:
    """True iff all eigenvalues of the period product are real and distinct."""
    spectra = _block_spectra(oc, tol)
    if not all(b.eig.real_and_distinct for b in spectra):
        return False
    entries = [(lm, d.real) for b in spectra for lm, d in zip(b.log_moduli, b.signs)]
    for i in range(len(entries)):
        for j in range(i + 1, len(entries)):
            (l1, s1), (l2, s2) = entries[i], entries[j]
            if s1 == s2 and abs(l1 - l2) <= tol * max(1.0, abs(l1), abs(l2)):
                return False
    return True


class HyperbolicityCertificate(NamedTuple):
    C: float
    lam: float
    horizon: int


class NotHyperbolic(ValueError):
    def __init__(self, msg, witness):
        super().__init__(msg)
        self.witness = witness


def hyperbolicity_certificate(c: LinearCocycle, sft: SftSystem, horizon: int,
                              max_words: int = 2_000_000) -> HyperbolicityCertificate:
    """Fit ``||A^n|_s|| <= C lam^n`` and ``||(A^n|_u)^-1|| <= C lam^n`` over words of length <= horizon.

    ``lam`` is the worst growth rate ``s_n ** (1/n)`` over the second half of
    the horizon, where ``s_n`` is the largest of both norms over admissible
    words of length ``n``; ``C`` is the smallest constant making the bound
    hold for every ``n <= horizon``.
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    adj = sft.adjacency
    counts = np.ones(sft.alphabet_size, dtype=object)
    total = 0
    for _ in range(horizon):
        total += int(counts.sum())
        counts = adj.T.astype(object) @ counts
    if total > max_words:
        raise ResourceLimitError(f"{total} words exceed max_words={max_words}")

    s, u = c.split
    words = np.arange(sft.alphabet_size)[:, None]
    prods = c.generators.copy()
    sup = []
    witnesses = []
    for n in range(1, horizon + 1):
        vals = np.zeros(len(prods))
        if s:
            vals = np.maximum(vals, np.linalg.norm(prods[:, :s, :s], ord=2, axis=(1, 2)))
        if u:
            smin = np.linalg.svd(prods[:, s:, s:], compute_uv=False)[:, -1]
            vals = np.maximum(vals, 1.0 / smin)
        i = int(np.argmax(vals))
        sup.append(float(vals[i]))
        witnesses.append(PeriodicWord(tuple(int(x) for x in words[i])))
        if n == horizon:
            break
        last = words[:, -1]
        nxt_w, nxt_p = [], []
        for b in range(sft.alphabet_size):
            ok = adj[last, b] == 1
            nxt_w.append(np.hstack([words[ok], np.full((ok.sum(), 1), b)]))
            nxt_p.append(c.generators[b] @ prods[ok])
        words = np.vstack(nxt_w)
        prods = np.concatenate(nxt_p)
    sup = np.array(sup)
    ns = np.arange(1, horizon + 1)
    tail = ns >= max(1, (horizon + 1) // 2)
    rates = sup ** (1.0 / ns)
    j = int(np.argmax(np.where(tail, rates, -np.inf)))
    lam = float(rates[j])
    if lam >= 1.0:
        raise NotHyperbolic(f"no uniform contraction: rate {lam:.6g} at length {ns[j]}", witnesses[j])
    C = float(max(1.0, np.max(sup / lam ** ns)))
    return HyperbolicityCertificate(C, lam, horizon)
