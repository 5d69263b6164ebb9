"""Orbit-level perturbations of the unstable cocycle.

A perturbation replaces the factor ``F_j`` at orbit site ``j`` by
``P_j F_j`` with ``P_j`` near the identity and block diagonal. Replacing
``F_j`` left-multiplies the period product based at site ``j + 1`` by
``P_j``, which is how every mechanism below is steered. The size of a
perturbation is the largest per-site distance ``||P_j - I||`` in operator
norm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .cocycle import (
    EQUAL_TOL,
    LinearCocycle,
    OrbitCocycle,
    _as_orbit,
    _roots2,
    block_product,
    eigen_data,
    has_simple_spectrum,
    orbit_cocycle,
    rotation,
)
from .domination import (
    Signature,
    signature_robustness_margin,
    unstable_signature,
)
from .sft import PeriodicWord, SftSystem, build_dense_periodic_word, enumerate_orbits_up_to

__all__ = [
    "BudgetExceeded",
    "PeriodTooShort",
    "StageError",
    "PerturbationPlan",
    "RotationArc",
    "ArcExperiment",
    "DenseSimpleResult",
    "MarkedOrbit",
    "ExplosionResult",
    "apply_plan",
    "perturb_generator",
    "perturbation_norms",
    "rotation_number",
    "arc_orbit",
    "rotation_arc_experiment",
    "split_equal_eigenvalues",
    "kill_nilpotent",
    "kill_nilpotent_report",
    "make_dense_simple",
    "force_complex",
    "force_real_simple",
    "signature_explosion",
    "DichotomyReport",
    "classify_dichotomy",
    "dichotomy_case",
]

TWO_PI = 2 * math.pi
NORM_SLACK = 1e-9  # relative slack when comparing norms against budgets


class BudgetExceeded(ValueError):
    def __init__(self, msg, site=None, norm=None):
        super().__init__(msg)
        self.site = site
        self.norm = norm


class PeriodTooShort(ValueError):
    def __init__(self, msg, required_period):
        super().__init__(msg)
        self.required_period = required_period


class StageError(RuntimeError):
    """A multi-stage construction could not finish; ``stage`` names where it stopped."""

    def __init__(self, msg, stage):
        super().__init__(msg)
        self.stage = stage


# ------------------------------------------------------------ plans

@dataclass(frozen=True, eq=False)
class PerturbationPlan:
    """Near-identity factors to compose at chosen orbit sites.

    Factors may be full ``d x d`` or act on the unstable block only
    (``u x u``, extended by the identity).
    """

    orbit: PeriodicWord
    site_factors: Mapping[int, np.ndarray]
    budget: float

    def norms(self) -> dict[int, float]:
        return {i: float(np.linalg.norm(np.asarray(p) - np.eye(len(p)), 2))
                for i, p in self.site_factors.items()}


def _embed(oc: OrbitCocycle, p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    d = oc.dimension
    if p.shape == (d, d):
        return p
    u = oc.split[1]
    if p.shape == (u, u):
        full = np.eye(d)
        full[oc.unstable, oc.unstable] = p
        return full
    raise ValueError(f"factor of shape {p.shape} fits neither the orbit nor its unstable block")


def _word_of(w) -> PeriodicWord:
    return w if isinstance(w, PeriodicWord) else PeriodicWord.parse(str(w))


def apply_plan(oc: OrbitCocycle, plan: PerturbationPlan) -> OrbitCocycle:
    """Replace ``F_i`` by ``P_i F_i`` at the planned sites."""
    if _word_of(plan.orbit).symbols != oc.word.symbols:
        raise ValueError(f"plan is for orbit {plan.orbit}, not {oc.word}")
    f = np.array(oc.factors)
    for site in sorted(plan.site_factors):
        if not 0 <= site < oc.period:
            raise ValueError(f"site {site} outside orbit of period {oc.period}")
        p = _embed(oc, plan.site_factors[site])
        norm = float(np.linalg.norm(p - np.eye(oc.dimension), 2))
        if norm > plan.budget * (1 + NORM_SLACK):
            raise BudgetExceeded(f"site {site}: factor norm {norm:.6g} exceeds budget {plan.budget:.6g}",
                                 site, norm)
        f[site] = p @ f[site]
    return oc.with_factors(f)


def perturb_generator(c: LinearCocycle, symbol: int, p, budget: float) -> LinearCocycle:
    """Global mode: compose ``p`` with the generator of ``symbol``.

    Every orbit through ``symbol`` feels the change.
    """
    p = np.asarray(p, dtype=float)
    d = c.dimension
    if p.shape != (d, d):
        full = np.eye(d)
        full[c.unstable, c.unstable] = p
        p = full
    norm = float(np.linalg.norm(p - np.eye(d), 2))
    if norm > budget * (1 + NORM_SLACK):
        raise BudgetExceeded(f"symbol {symbol}: factor norm {norm:.6g} exceeds budget {budget:.6g}",
                             symbol, norm)
    g = np.array(c.generators)
    g[symbol] = p @ g[symbol]
    return LinearCocycle(g, c.split, c.name)


def perturbation_norms(before: OrbitCocycle, after: OrbitCocycle) -> np.ndarray:
    """Per-site ``||F'_j F_j^{-1} - I||`` between two factor lists of the same orbit."""
    q = after.factors @ np.linalg.inv(before.factors)
    return np.linalg.norm(q - np.eye(before.dimension), ord=2, axis=(1, 2))


def _compose_unstable(oc: OrbitCocycle, site: int, p: np.ndarray) -> OrbitCocycle:
    f = np.array(oc.factors)
    f[site] = _embed(oc, p) @ f[site]
    return oc.with_factors(f)


# ---------------------------------------------------------- rotation number

def _is_conformal(f: np.ndarray) -> bool:
    g = f.T @ f
    s = 0.5 * (g[0, 0] + g[1, 1])
    return np.linalg.det(f) > 0 and abs(g[0, 1]) <= 1e-14 * s and abs(g[0, 0] - g[1, 1]) <= 1e-14 * s


class _Factor:
    """Polar data of one 2x2 factor used for lifted angle increments."""

    __slots__ = ("mat", "conformal", "phi", "sym")

    def __init__(self, mat):
        self.mat = np.asarray(mat, dtype=float)
        self.conformal = _is_conformal(self.mat)
        if self.conformal:
            self.phi = math.atan2(self.mat[1, 0], self.mat[0, 0])
            self.sym = None
        elif np.linalg.det(self.mat) > 0:
            u, s, vt = np.linalg.svd(self.mat)
            r = u @ vt
            self.phi = math.atan2(r[1, 0], r[0, 0])
            self.sym = vt.T @ np.diag(s) @ vt
        else:
            self.phi = None
            self.sym = None

    def increment(self, v: np.ndarray) -> float:
        if self.conformal:
            return self.phi
        if self.phi is None:
            w = self.mat @ v
        else:
            w = self.sym @ v
        delta = math.atan2(v[0] * w[1] - v[1] * w[0], v[0] * w[0] + v[1] * w[1])
        return delta + (self.phi or 0.0)


def _power_normalised(f: _Factor, r: int) -> np.ndarray:
    if f.conformal:
        return rotation(r * f.phi)
    m = np.eye(2)
    for _ in range(r):
        m = f.mat @ m
        m /= np.abs(m).max()
    return m


def _rotation_from_runs(runs: Sequence[tuple[_Factor, int]]) -> float:
    m = np.eye(2)
    for f, r in runs:
        m = _power_normalised(f, r) @ m
        m /= np.abs(m).max()
    tr = m[0, 0] + m[1, 1]
    det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
    disc = tr * tr - 4 * det
    complex_pair = disc < 0
    if complex_pair:
        v = np.array([1.0, 0.0])
    else:
        lam = max(_roots2(tr, det), key=abs).real
        _, _, vt = np.linalg.svd(m - lam * np.eye(2))
        v = vt[-1]
    total = 0.0
    for f, r in runs:
        if f.conformal:
            total += r * f.phi
            v = rotation(r * f.phi) @ v
            continue
        for _ in range(r):
            total += f.increment(v)
            v = f.mat @ v
            v /= math.hypot(v[0], v[1])
    if complex_pair:
        phi_m = math.acos(max(-1.0, min(1.0, tr / (2 * math.sqrt(det)))))
        if m[1, 0] < 0:
            phi_m = -phi_m
        k = round((total - phi_m) / TWO_PI)
        return (phi_m + TWO_PI * k) / TWO_PI
    return round(total / math.pi) / 2


def _runs_of(fu: np.ndarray) -> list[tuple[_Factor, int]]:
    runs = []
    i, n = 0, len(fu)
    while i < n:
        j = i + 1
        while j < n and np.array_equal(fu[j], fu[i]):
            j += 1
        runs.append((_Factor(fu[i]), j - i))
        i = j
    return runs


def rotation_number(oc: OrbitCocycle) -> float:
    """Winding, in turns, of the unstable product along one period.

    Each factor ``F = R_phi P`` (polar form, ``phi`` in ``(-pi, pi]``) moves a
    direction by ``phi`` plus the angle by which ``P`` turns it, which lies
    in ``(-pi/2, pi/2)``. Summing these increments along the orbit lifts
    the projective action of the product; the rotation number is read off
    at an eigendirection when the product is real, and from the conjugate
    rotation angle when it has a complex pair.
    """
    if oc.split[1] != 2:
        raise ValueError("rotation number needs a two-dimensional unstable block")
    return _rotation_from_runs(_runs_of(oc.block_factors("unstable")))


# ------------------------------------------------------------ rotation arcs

@dataclass(frozen=True)
class RotationArc:
    """Rotation by ``t * xi`` on the unstable plane at ``sites``.

    With ``signs`` given, site ``sites[i]`` is rotated by ``signs[i] * t * xi``.
    """

    sites: tuple[int, ...]
    xi: float
    t_range: tuple[float, float] = (0.0, 1.0)
    signs: tuple[int, ...] | None = None

    def factor_norm(self) -> float:
        return 2 * abs(math.sin(self.t_max * self.xi / 2))

    @property
    def t_max(self) -> float:
        return max(abs(self.t_range[0]), abs(self.t_range[1]))


def arc_orbit(oc: OrbitCocycle, arc: RotationArc, t: float) -> OrbitCocycle:
    f = np.array(oc.factors)
    r = _embed(oc, rotation(t * arc.xi))
    rinv = r.T
    signs = arc.signs or (1,) * len(arc.sites)
    for s, sg in zip(arc.sites, signs):
        f[s] = (r if sg > 0 else rinv) @ f[s]
    return oc.with_factors(f)


def orientation_signs(oc: OrbitCocycle) -> tuple[int, ...]:
    """Sign of ``det(F_j ... F_0)`` on the unstable plane for each site ``j``.

    Rotating every site by ``sign_j * xi`` makes the rotations add up after
    conjugating back to the base point; with orientation-reversing factors
    a uniform rotation partly cancels itself.
    """
    d = np.sign(np.linalg.det(oc.block_factors("unstable")))
    return tuple(int(x) for x in np.cumprod(d))


def _rotation_arcs(oc: OrbitCocycle, xi: float) -> list[RotationArc]:
    sites = tuple(range(oc.period))
    arcs = [RotationArc(sites, xi), RotationArc(sites, -xi)]
    sg = orientation_signs(oc)
    if any(x < 0 for x in sg):
        arcs += [RotationArc(sites, xi, signs=sg), RotationArc(sites, -xi, signs=sg)]
    return arcs


@dataclass
class ArcExperiment:
    m_t: int
    t_star: float
    xi: float
    m_values: np.ndarray
    oscillation_values: np.ndarray
    slope: float
    intercept: float
    r_squared: float
    rho_at_t_star: float
    word: PeriodicWord
    factor_norm: float
    eigen_gap_at_t_star: float
    imag_at_t_star: float

    def oscillation(self, m: int) -> float:
        return float(self.oscillation_values[int(m) - 1])

    def as_record(self) -> dict:
        return {
            "m_t": self.m_t,
            "t_star": self.t_star,
            "xi": self.xi,
            "slope": self.slope,
            "intercept": self.intercept,
            "r_squared": self.r_squared,
            "rho_at_t_star": self.rho_at_t_star,
            "word": str(self.word),
            "factor_norm": self.factor_norm,
            "eigen_gap_at_t_star": self.eigen_gap_at_t_star,
        }


def _default_tail(sft: SftSystem, s: int) -> list[int]:
    for b in range(sft.alphabet_size):
        if b != s and sft.allows(s, b):
            back = sft.shortest_path(b, s) if not sft.allows(b, s) else []
            return [b] + list(back)
    raise ValueError(f"symbol {s} has no exit to another symbol")


def _family_word(s: int, m: int, tail: Sequence[int]) -> PeriodicWord:
    return PeriodicWord((s,) * m + tuple(tail))


def _bisect_integer(rho_of_t, target: float, increasing: bool, lo=0.0, hi=1.0, iters=80) -> float:
    """Smallest (or largest) ``t`` in ``[lo, hi]`` with ``rho(t)`` past ``target``."""
    def past(t):
        r = rho_of_t(t)
        return r >= target if increasing else r <= target
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if past(mid):
            hi = mid
        else:
            lo = mid
    return hi


def rotation_arc_experiment(c: LinearCocycle, sft: SftSystem, marked: int, xi: float,
                            eps: float | None = None, tail: Sequence[int] | None = None,
                            t_grid: int = 17, m_cap: int = 200_000) -> ArcExperiment:
    """Oscillation of the rotation number along a rotation arc.

    The family ``x_m`` spends ``m`` sites at the fixed symbol ``marked`` and
    then follows ``tail`` back. At each marked site the unstable factor is
    composed with the rotation by ``t * xi``; ``delta(m)`` is the spread of
    ``rotation_number`` over ``t`` in ``[0, 1]``. ``m_t`` is the least ``m``
    after which every scanned ``delta`` exceeds 1 (the scan covers at least
    ``10 * m_t``) and ``t_star`` is where the rotation number of ``x_{m_t}``
    first reaches an integer, located by bisection on the real side.
    """
    if xi == 0:
        raise ValueError("arc is constant (xi = 0)")
    if c.split[1] != 2:
        raise ValueError("needs a two-dimensional unstable block")
    if not sft.allows(marked, marked):
        raise ValueError(f"symbol {marked} is not a fixed point")
    a_u = c.generators[marked][c.unstable, c.unstable]
    if not _is_conformal(a_u) or abs(np.linalg.det(a_u)) <= 1:
        raise ValueError("marked fixed point must have an expanding conformal unstable block")
    factor_norm = 2 * abs(math.sin(xi / 2))
    if eps is not None and factor_norm > eps * (1 + NORM_SLACK):
        raise BudgetExceeded(f"rotation factor norm {factor_norm:.6g} exceeds budget {eps:.6g}",
                             None, factor_norm)
    tail = list(_default_tail(sft, marked) if tail is None else tail)
    tail_runs = _runs_of(c.generators[tail][:, c.unstable, c.unstable]) if tail else []
    ts = np.linspace(0.0, 1.0, t_grid)

    def rho(m, t):
        runs = [(_Factor(rotation(t * xi) @ a_u), m)] + tail_runs
        return _rotation_from_runs(runs)

    deltas: list[float] = []
    m_t = None
    m_hi = 64
    while True:
        for m in range(len(deltas) + 1, m_hi + 1):
            vals = [rho(m, t) for t in ts]
            deltas.append(max(vals) - min(vals))
        d = np.array(deltas)
        bad = np.nonzero(d <= 1.0)[0]
        cand = int(bad[-1]) + 2 if len(bad) else 1
        if cand <= m_hi and m_hi >= 10 * cand:
            m_t = cand
            break
        if m_hi >= m_cap:
            raise ValueError(f"oscillation stays <= 1 up to m = {m_cap}")
        m_hi = min(2 * m_hi, m_cap)
    m_values = np.arange(1, 10 * m_t + 1)
    osc = np.array(deltas[:10 * m_t])
    slope, intercept = np.polyfit(m_values, osc, 1)
    fit = slope * m_values + intercept
    ss_res = float(((osc - fit) ** 2).sum())
    ss_tot = float(((osc - osc.mean()) ** 2).sum())
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 0.0

    increasing = xi > 0
    r0 = rho(m_t, 0.0)
    target = math.floor(r0) + 1 if increasing else math.ceil(r0) - 1
    t_star = _bisect_integer(lambda t: rho(m_t, t), target, increasing)
    word = _family_word(marked, m_t, tail)
    oc = arc_orbit(orbit_cocycle(c, word), RotationArc(tuple(range(m_t)), xi), t_star)
    m, _ = block_product(oc.block_factors("unstable"))
    ed = eigen_data(m, tol=0.0, check_singular=False)
    lam = ed.eigenvalues
    gap = abs(abs(lam[1]) - abs(lam[0])) / abs(lam[1])
    imag = max(abs(z.imag) for z in lam) / abs(lam[1])
    return ArcExperiment(m_t, float(t_star), float(xi), m_values, osc, float(slope), float(intercept),
                         float(r2), rho(m_t, t_star), word, factor_norm, float(gap), float(imag))


# ----------------------------------------------------- eigenvalue surgery

def _unstable_product_at(oc: OrbitCocycle, base: int) -> np.ndarray:
    """Normalised unstable product of the orbit based at site ``base``."""
    fu = oc.block_factors("unstable")
    idx = (np.arange(oc.period) + base) % oc.period
    m, _ = block_product(fu[idx])
    return m


def _schur2(m: np.ndarray, lam: float) -> tuple[np.ndarray, np.ndarray]:
    """Orthogonal ``V`` with ``V.T @ m @ V`` upper triangular, ``lam`` first on the diagonal."""
    r = m - lam * np.eye(2)
    if np.abs(r).max() <= 1e-14 * np.abs(m).max():
        return np.eye(2), m.copy()
    _, _, vt = np.linalg.svd(r)
    v1 = vt[-1]
    v = np.array([[v1[0], -v1[1]], [v1[1], v1[0]]])
    t = v.T @ m @ v
    t[1, 0] = 0.0
    return v, t


def _real_eigs(m: np.ndarray):
    tr = m[0, 0] + m[1, 1]
    det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
    disc = tr * tr - 4 * det
    if disc < 0:
        # a pair within NEAR_EQUAL of the real axis counts as a double eigenvalue
        if -disc <= (NEAR_EQUAL * tr) ** 2:
            return [0.5 * tr, 0.5 * tr]
        return None
    z1, z2 = _roots2(tr, det)
    return sorted([z1.real, z2.real], key=abs)


NEAR_EQUAL = 1e-6
"""Relative eigenvalue distance below which a 2x2 product is treated as a
repeated eigenvalue when deciding about nilpotent parts."""


def _nilpotent_ratio(m: np.ndarray) -> tuple[float, float] | None:
    """``(b / a, a)`` of the Schur form ``[[a, b], [0, a]]`` when eigenvalues (nearly) coincide."""
    ev = _real_eigs(m)
    if ev is None:
        return None
    a1, a2 = ev
    if abs(a1 - a2) > NEAR_EQUAL * abs(a2):
        return None
    _, t = _schur2(m, 0.5 * (a1 + a2))
    return t[0, 1] / t[1, 1], t[1, 1]


def split_equal_eigenvalues(oc: OrbitCocycle, eta1: float, eta2: float,
                            site: int | None = None) -> OrbitCocycle:
    """Separate equal-modulus real unstable eigenvalues with a near-identity factor.

    The factor ``V diag(1 + eta1, 1 + eta2) V^T`` (``V`` the orthogonal Schur
    basis of the product) is composed at ``site`` (default: the last site,
    which acts on the product based at site 0). Its norm is
    ``max(|eta1|, |eta2|)``.
    """
    if eta1 == eta2:
        raise ValueError("eta1 and eta2 must differ")
    if oc.split[1] != 2:
        raise ValueError("needs a two-dimensional unstable block")
    site = oc.period - 1 if site is None else site % oc.period
    m = _unstable_product_at(oc, site + 1)
    ev = _real_eigs(m)
    if ev is None:
        raise ValueError("unstable product has a complex pair")
    if abs(abs(ev[0]) - abs(ev[1])) > NEAR_EQUAL * abs(ev[1]):
        raise ValueError("unstable eigenvalues do not have equal moduli")
    nil = _nilpotent_ratio(m)
    if nil is not None and abs(nil[0]) > NEAR_EQUAL:
        raise ValueError("kill nilpotent first")
    v, _ = _schur2(m, ev[0])
    p = v @ np.diag([1 + eta1, 1 + eta2]) @ v.T
    return _compose_unstable(oc, site, p)


@dataclass
class KillReport:
    perturbed: OrbitCocycle
    mode: str
    sites: list[int]
    norms: list[float]
    required: int


def kill_nilpotent_report(oc: OrbitCocycle, eps: float, sites: Sequence[int] | None = None,
                          tol: float = 1e-9) -> KillReport:
    """Equalise unstable moduli and remove the nilpotent part, site by site.

    Each site ``j`` in ``sites`` (default ``0, 1, ...``) gets one factor of
    norm at most ``eps`` acting on the product based at ``j + 1``, written
    in its orthogonal Schur basis:

    * stretch ``diag(1 + s, 1)`` while the moduli differ (``A_1`` form),
      about ``log|b/a| / log(1 + eps)`` sites;
    * shear ``[[1, -s], [0, 1]]`` while a nilpotent part remains
      (``A_2`` form), about ``|b/a| / eps`` sites.
    """
    if oc.split[1] != 2:
        raise ValueError("needs a two-dimensional unstable block")
    if eps <= 0:
        raise ValueError("eps must be positive")
    n = oc.period
    sites = list(range(n)) if sites is None else [s % n for s in sites]
    m = _unstable_product_at(oc, (sites[0] + 1) % n if sites else 0)
    ev = _real_eigs(m)
    if ev is None:
        raise ValueError("unstable product has a complex pair; no nilpotent part to kill")
    ratio = abs(ev[1] / ev[0])
    need = 0
    mode = "A2"
    if ratio > 1 + NEAR_EQUAL:
        mode = "A1"
        need = math.ceil(math.log(ratio) / math.log1p(eps) - 1e-12)
    else:
        nil = _nilpotent_ratio(m)
        if nil is not None:
            need = math.ceil(abs(nil[0]) / eps - 1e-12)
    if need > len(sites):
        raise PeriodTooShort(f"schedule needs {need} sites at eps={eps:.6g}; "
                             f"orbit offers {len(sites)} (minimal period {need})", need)
    used, norms = [], []
    cur = oc
    for j in sites:
        m = _unstable_product_at(cur, j + 1)
        ev = _real_eigs(m)
        if ev is None:
            raise StageError("product became complex during the schedule", "kill")
        small, big = ev
        if abs(big / small) > 1 + tol:
            v, _ = _schur2(m, small)
            s = min(eps, abs(big / small) - 1)
            p = v @ np.diag([1 + s, 1.0]) @ v.T
        else:
            if abs(small - big) > NEAR_EQUAL * abs(big):
                break  # equal moduli, opposite signs: diagonalisable already
            v, t = _schur2(m, 0.5 * (small + big))
            b_over_a = t[0, 1] / t[1, 1]
            if abs(b_over_a) <= tol:
                break
            s = max(-eps, min(eps, b_over_a))
            p = v @ np.array([[1.0, -s], [0.0, 1.0]]) @ v.T
        cur = _compose_unstable(cur, j, p)
        used.append(j)
        norms.append(float(np.linalg.norm(p - np.eye(2), 2)))
    else:
        m = _unstable_product_at(cur, (sites[-1] + 1) % n)
        nil = _nilpotent_ratio(m)
        ev = _real_eigs(m)
        done = ev is not None and abs(abs(ev[1] / ev[0]) - 1) <= max(tol, 1e-9) and (nil is None or abs(nil[0]) <= 1e-6)
        if not done:
            raise PeriodTooShort(f"schedule did not finish within {len(sites)} sites", len(sites) + 1)
    return KillReport(cur, mode, used, norms, need)


def kill_nilpotent(oc: OrbitCocycle, eps: float, sites: Sequence[int] | None = None) -> OrbitCocycle:
    return kill_nilpotent_report(oc, eps, sites).perturbed


# ----------------------------------------------------------- dense orbits

@dataclass
class DenseSimpleResult:
    word: PeriodicWord
    perturbed: OrbitCocycle
    original: OrbitCocycle
    stages: list[dict] = field(default_factory=list)
    max_factor_norm: float = 0.0

    def as_record(self) -> dict:
        return {
            "word": str(self.word),
            "period": self.word.period,
            "stages": self.stages,
            "max_factor_norm": self.max_factor_norm,
            "simple": has_simple_spectrum(self.perturbed),
        }


def _complex_fixed_symbol(c: LinearCocycle, sft: SftSystem) -> int | None:
    for s in range(sft.alphabet_size):
        if sft.allows(s, s):
            a = c.generators[s][c.unstable, c.unstable]
            tr, det = np.trace(a), np.linalg.det(a)
            if tr * tr - 4 * det < 0:
                return s
    return None


def _arc_to_real(oc: OrbitCocycle, sites: Sequence[int], xi: float):
    """Smallest ``t`` in ``[0, 1]`` at which the arc makes the rotation number an integer.

    Returns ``(t, perturbed)`` or None when the arc does not reach one.
    """
    arc = RotationArc(tuple(sites), xi)
    fu = oc.block_factors("unstable")

    def rho(t):
        g = np.array(fu)
        r = rotation(t * xi)
        for s in sites:
            g[s] = r @ g[s]
        return _rotation_from_runs(_runs_of(g))

    r0, r1 = rho(0.0), rho(1.0)
    target = math.floor(r0) + 1 if xi > 0 else math.ceil(r0) - 1
    if (xi > 0 and r1 < target) or (xi < 0 and r1 > target):
        return None
    t = _bisect_integer(rho, target, xi > 0)
    return t, arc_orbit(oc, arc, t)


def _simple_from_equal(oc: OrbitCocycle, eps_kill: float, eta: tuple[float, float],
                       kill_sites, split_site, stages: list) -> OrbitCocycle:
    rep = kill_nilpotent_report(oc, eps_kill, kill_sites)
    stages.append({"stage": "kill_nilpotent", "mode": rep.mode, "sites": len(rep.sites),
                   "max_norm": max(rep.norms, default=0.0)})
    out = split_equal_eigenvalues(rep.perturbed, eta[0], eta[1], split_site)
    stages.append({"stage": "split", "eta1": eta[0], "eta2": eta[1]})
    return out


def make_dense_simple(c: LinearCocycle, sft: SftSystem, k: int, eps: float, seed: int = 0,
                      max_period: int = 20_000) -> DenseSimpleResult:
    """Dense periodic orbit with simple spectrum after a perturbation of size <= ``eps``.

    The depth-``k`` dense word ``w`` is used as is when its spectrum is
    simple. Otherwise the orbit ``s^m w w`` (``s`` a fixed symbol with a
    complex unstable generator, ``w`` rotated to start at ``s``) is rotated
    at its ``m`` leading sites until the rotation number reaches an integer,
    its nilpotent part is sheared away on the remaining sites and the two
    equal eigenvalues are split. The budget is shared 0.45/0.45/0.05
    between rotation, shear and split.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    w = build_dense_periodic_word(sft, k)
    base = orbit_cocycle(c, w)
    if has_simple_spectrum(base):
        return DenseSimpleResult(w, base, base, [{"stage": "none"}], 0.0)
    if c.split[1] != 2:
        raise StageError("only two-dimensional unstable blocks are handled", "setup")
    stages: list[dict] = []
    eps_rot, eps_kill, eps_split = 0.45 * eps, 0.45 * eps, 0.05 * eps
    eta = (0.4 * eps_split, 0.8 * eps_split)
    m_u, _ = block_product(base.block_factors("unstable"))
    if _real_eigs(m_u) is not None:
        # real but not simple: equal moduli, no rotation needed
        out = _simple_from_equal(base, eps_kill, eta, None, None, stages)
        return _finish_dense(w, base, out, stages, eps)
    s = _complex_fixed_symbol(c, sft)
    if s is None:
        raise StageError("no fixed symbol with a complex unstable generator to rotate at", "rotation")
    xi = 2 * math.asin(min(1.0, eps_rot / 2))
    start = w.symbols.index(s) if s in w.symbols else None
    if start is None:
        raise StageError(f"dense word misses symbol {s}", "setup")
    wr = w.rotate(start).symbols
    m = max(1, math.ceil(TWO_PI / xi))
    while True:
        if m + 2 * len(wr) > max_period:
            raise StageError(f"budget {eps:.3g} too small: rotation needs period > {max_period}", "rotation")
        word = PeriodicWord((s,) * m + wr + wr)
        if word.is_primitive:
            oc = orbit_cocycle(c, word)
            hit = _arc_to_real(oc, range(m), xi)
            if hit is not None:
                break
        m = math.ceil(m * 1.25) + 1
    t, rotated = hit
    stages.append({"stage": "rotation", "m": m, "t": t, "xi": xi, "norm": 2 * math.sin(t * xi / 2)})
    tail_sites = list(range(m, word.period))
    try:
        out = _simple_from_equal(rotated, eps_kill, eta, tail_sites, m - 1, stages)
    except PeriodTooShort as e:
        raise StageError(f"nilpotent part too large for the budget: {e}", "kill_nilpotent") from e
    except ValueError as e:
        raise StageError(str(e), "split") from e
    return _finish_dense(word, oc, out, stages, eps)


def _finish_dense(word, original, out, stages, eps) -> DenseSimpleResult:
    norms = perturbation_norms(original, out)
    worst = float(norms.max())
    if worst > eps * (1 + NORM_SLACK):
        site = int(norms.argmax())
        raise StageError(f"composite factor at site {site} has norm {worst:.6g} > {eps:.6g}", "budget")
    if not has_simple_spectrum(out):
        raise StageError("spectrum still not simple", stages[-1]["stage"] if stages else "none")
    return DenseSimpleResult(word, out, original, stages, worst)


# ---------------------------------------------------- signature forcing

def _robust(oc: OrbitCocycle, want: Signature, samples: int, seed: int) -> float:
    if unstable_signature(oc) != want:
        return 0.0
    return signature_robustness_margin(oc, samples, seed)


def force_complex(oc: OrbitCocycle, eps: float, samples: int = 100, seed: int = 0,
                  t_grid: int = 9, log: list | None = None):
    """Perturbation of size <= ``eps`` giving the orbit a robust signature (2).

    Tries a uniform rotation at all sites first, in both directions, and
    otherwise equalises the moduli (stretch and shear schedules on all but
    one site) before a single rotation factor. Returns
    ``(perturbed, margin)`` or None; the mechanism used is appended to
    ``log`` when given.
    """
    log = [] if log is None else log
    want = Signature((2,))
    base_margin = _robust(oc, want, samples, seed)
    if base_margin > 0:
        log.append("as-is")
        return oc, base_margin
    xi = 2 * math.asin(min(1.0, eps / 2)) * (1 - 1e-9)
    best = None
    for arc in _rotation_arcs(oc, xi):
        for t in np.linspace(1.0, 0.0, t_grid, endpoint=False):
            cand = arc_orbit(oc, arc, float(t))
            mg = _robust(cand, want, samples, seed)
            if mg > 0 and (best is None or mg > best[1]):
                best = (cand, mg)
    if best is not None:
        log.append("rotation")
        return best
    if oc.period < 2:
        return None
    try:
        rep = kill_nilpotent_report(oc, 0.5 * eps, list(range(oc.period - 1)))
    except (ValueError, StageError):
        return None
    p = rotation(0.5 * xi)
    cand = _compose_unstable(rep.perturbed, oc.period - 1, p)
    mg = _robust(cand, want, samples, seed)
    if mg > 0:
        log.append("kill_nilpotent+rotation")
        return cand, mg
    return None


def force_real_simple(oc: OrbitCocycle, eps: float, samples: int = 100, seed: int = 0,
                      t_grid: int = 9, log: list | None = None):
    """Perturbation of size <= ``eps`` giving the orbit a robust signature (1,1).

    A uniform rotation sweep looks for the locked region where the product
    has distinct real eigenvalues; failing that, the rotation is stopped at
    the first integer rotation number and the equal eigenvalues are cleaned
    up by shear and split. An orbit whose eigenvalues are already real and
    equal goes straight to shear and split. Returns ``(perturbed, margin)``
    or None; the mechanism used is appended to ``log`` when given.
    """
    log = [] if log is None else log
    want = Signature((1, 1))
    base_margin = _robust(oc, want, samples, seed)
    if base_margin > 0:
        log.append("as-is")
        return oc, base_margin
    m_u, _ = block_product(oc.block_factors("unstable"))
    stages: list = []
    eta = (0.02 * eps, 0.04 * eps)
    if _real_eigs(m_u) is not None:
        try:
            cand = _simple_from_equal(oc, 0.9 * eps, eta, list(range(oc.period)), oc.period - 1, stages)
        except (ValueError, StageError):
            cand = None
        if cand is not None and perturbation_norms(oc, cand).max() <= eps * (1 + NORM_SLACK):
            mg = _robust(cand, want, samples, seed)
            if mg > 0:
                log.append("kill_nilpotent+split")
                return cand, mg
    xi_full = 2 * math.asin(min(1.0, eps / 2)) * (1 - 1e-9)
    best = None
    for arc in _rotation_arcs(oc, xi_full):
        for t in np.linspace(1.0, 0.0, t_grid, endpoint=False):
            cand = arc_orbit(oc, arc, float(t))
            mg = _robust(cand, want, samples, seed)
            if mg > 0 and (best is None or mg > best[1]):
                best = (cand, mg)
    if best is not None:
        log.append("rotation")
        return best
    xi = 2 * math.asin(min(1.0, 0.45 * eps / 2))
    for sign in (1, -1):
        hit = _arc_to_real(oc, range(oc.period), sign * xi)
        if hit is None:
            continue
        _, rotated = hit
        try:
            cand = _simple_from_equal(rotated, 0.45 * eps, eta, list(range(oc.period)), oc.period - 1, stages)
        except (ValueError, StageError):
            continue
        if perturbation_norms(oc, cand).max() > eps * (1 + NORM_SLACK):
            continue
        mg = _robust(cand, want, samples, seed)
        if mg > 0:
            log.append("rotation+kill_nilpotent+split")
            return cand, mg
    return None


# --------------------------------------------------- signature explosion

@dataclass
class MarkedOrbit:
    word: PeriodicWord
    perturbed: OrbitCocycle
    signature: Signature
    margin: float
    factor_norm: float

    def as_record(self) -> dict:
        return {"word": str(self.word), "signature": str(self.signature),
                "margin": self.margin, "factor_norm": self.factor_norm}


@dataclass
class ExplosionResult:
    sig_p: Signature
    sig_q: Signature
    P1: list[MarkedOrbit]
    P2: list[MarkedOrbit]
    period_cap: int

    def records(self) -> list[dict]:
        out = []
        for name, group in (("P1", self.P1), ("P2", self.P2)):
            for mo in group:
                rec = mo.as_record()
                rec["set"] = name
                out.append(rec)
        return out


def _longest_cyclic_run(word: PeriodicWord, pattern: PeriodicWord) -> int:
    """Largest ``r`` such that ``pattern`` repeated ``r`` times is a cyclic factor of ``word``."""
    n, p = word.period, pattern.period
    ext = word.symbols * ((n + p) // n + 2)
    best = 0
    for start in range(n):
        r = 0
        pos = start
        while r * p < n and ext[pos:pos + p] == pattern.symbols:
            r += 1
            pos += p
        best = max(best, r)
    return best


def signature_explosion(c: LinearCocycle, sft: SftSystem, p, q, n: int, eps: float, seed: int = 0,
                        period_cap: int = 12, samples: int = 100) -> ExplosionResult:
    """``n`` marked orbits of each of the two unstable signatures of ``p`` and ``q``.

    Fresh orbits are taken from the periodic orbits of period at most
    ``period_cap``, longest shadowing runs of the target orbit first; each
    is kept as is when it already carries the target signature robustly, and
    otherwise perturbed (size <= ``eps``) by :func:`force_complex` or
    :func:`force_real_simple`.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    p, q = _word_of(p), _word_of(q)
    op, oq = orbit_cocycle(c, p), orbit_cocycle(c, q)
    sp, sq = unstable_signature(op), unstable_signature(oq)
    if sp == sq:
        raise ValueError(f"p and q share the unstable signature {sp}")
    mp = signature_robustness_margin(op, samples, seed)
    mq = signature_robustness_margin(oq, samples, seed + 1)
    if mp <= 0 or mq <= 0:
        raise ValueError("p and q must have positive robustness margins")
    groups = {0: [MarkedOrbit(p, op, sp, mp, 0.0)], 1: [MarkedOrbit(q, oq, sq, mq, 0.0)]}
    if n == 1:
        return ExplosionResult(sp, sq, groups[0], groups[1], period_cap)
    used = {p.canonical().symbols, q.canonical().symbols}
    pool = [w for w in enumerate_orbits_up_to(sft, period_cap) if w.symbols not in used]
    targets = {0: (p, sp), 1: (q, sq)}
    sub = 2
    for gi in (1, 0):
        target_word, target_sig = targets[gi]
        ranked = sorted(pool, key=lambda w: (-_longest_cyclic_run(w, target_word), -w.period, w.symbols))
        for w in ranked:
            if len(groups[gi]) >= n:
                break
            if w.symbols in used:
                continue
            oc = orbit_cocycle(c, w)
            if len(target_sig) == 1:
                got = force_complex(oc, eps, samples, seed + sub)
            else:
                got = force_real_simple(oc, eps, samples, seed + sub)
            sub += 1
            if got is None:
                continue
            pert, margin = got
            norm = float(perturbation_norms(oc, pert).max())
            if norm > eps * (1 + NORM_SLACK):
                continue
            groups[gi].append(MarkedOrbit(w, pert, target_sig, margin, norm))
            used.add(w.symbols)
        if len(groups[gi]) < n:
            raise ValueError(f"insufficient orbit supply at period cap {period_cap}: "
                             f"{len(groups[gi])} orbits of signature {target_sig}")
    return ExplosionResult(sp, sq, groups[0], groups[1], period_cap)


# ------------------------------------------------------------- dichotomy

@dataclass
class DichotomyReport:
    """Outcome of the cocycle-level dichotomy for one system.

    ``outcome`` is ``"dominated"`` (one-dimensional finest splitting with a
    positive margin), ``"cycle"`` (a perturbation of size <= ``eps`` produced
    an equidimensional cycle with robust different signatures) or
    ``"unresolved"``.
    """

    outcome: str
    case: str
    dims: tuple[int, ...]
    margin: float = 0.0
    witness: object = None
    orbit_p: OrbitCocycle | None = None
    orbit_q: OrbitCocycle | None = None
    perturbation_norm: float = 0.0
    detail: str = ""
    mechanism_p: str = ""  # how the (1,1) orbit was obtained
    mechanism_q: str = ""  # how the (2) orbit was obtained

    def as_record(self) -> dict:
        rec = {"outcome": self.outcome, "case": self.case, "dims": "(" + ",".join(map(str, self.dims)) + ")",
               "margin": self.margin, "perturbation_norm": self.perturbation_norm, "detail": self.detail,
               "mechanism_p": self.mechanism_p, "mechanism_q": self.mechanism_q}
        if self.witness is not None:
            w = self.witness
            rec.update({"p": str(w.orbit_p), "q": str(w.orbit_q), "sig_p": str(w.sig_p),
                        "sig_q": str(w.sig_q), "robustness_margin": w.robustness_margin})
        return rec


def _unstable_kind(oc: OrbitCocycle) -> str:
    """'complex', 'simple', 'equal' (no nilpotent part) or 'nilpotent'."""
    m_u, _ = block_product(oc.block_factors("unstable"))
    ed = eigen_data(m_u, check_singular=False)
    if ed.has_complex_pair:
        return "complex"
    if ed.real_and_distinct:
        return "simple"
    return "nilpotent" if ed.has_nilpotent_part else "equal"


def dichotomy_case(kinds: Sequence[str]) -> str:
    """Case label from the unstable eigenvalue types of the scanned orbits."""
    ks = set(kinds)
    if ks == {"complex"}:
        return "1"
    if "complex" in ks:
        return "2"
    if ks <= {"simple"}:
        return "3a"
    if "equal" in ks:
        return "3b"
    return "3c"


def _family_candidates(c: LinearCocycle, sft: SftSystem, lengths: Sequence[int]) -> list[PeriodicWord]:
    """Long orbits ``s^m`` followed by a return path, one family per looping symbol."""
    out = []
    for s in range(sft.alphabet_size):
        if not sft.allows(s, s):
            continue
        tail = _default_tail(sft, s)
        for m in lengths:
            w = _family_word(s, m, tail)
            if w.is_primitive and sft.is_admissible_cycle(w.symbols):
                out.append(w)
    return out


def _find_signature(ocs: Sequence[OrbitCocycle], want: Signature, forcer, eps: float,
                    samples: int, seed: int, exclude: set, max_attempts: int):
    """First orbit that carries ``want`` robustly, perturbing within ``eps`` if needed."""
    for i, oc in enumerate(ocs):
        if oc.word.symbols in exclude:
            continue
        mg = _robust(oc, want, samples, seed + i)
        if mg > 0:
            return oc, oc, mg, "as-is"
    tried = 0
    # long orbits first: a rotation of size eps per site accumulates over the period
    order = sorted(range(len(ocs)), key=lambda i: (-ocs[i].period, ocs[i].word.symbols))
    for i in order:
        oc = ocs[i]
        if oc.word.symbols in exclude:
            continue
        if tried >= max_attempts:
            break
        tried += 1
        log: list = []
        got = forcer(oc, eps, samples, seed + i, log=log)
        if got is None:
            continue
        pert, mg = got
        if perturbation_norms(oc, pert).max() <= eps * (1 + NORM_SLACK):
            return oc, pert, mg, log[-1]
    return None


def classify_dichotomy(c: LinearCocycle, sft: SftSystem, eps: float = 0.1, period_max: int = 8,
                       m_max: int = 12, samples: int = 100, seed: int = 0,
                       family_lengths: Sequence[int] = (8, 16, 32, 64),
                       max_attempts: int = 12) -> DichotomyReport:
    """Either certify a one-dimensional finest splitting or build a robust cycle.

    The orbits of period at most ``period_max`` are scanned first. When the
    finest dominated splitting is not one-dimensional, an orbit of robust
    signature (2) and one of robust signature (1,1) are looked for among
    the scanned orbits and the long families ``s^m + tail``, each found as
    is or after a perturbation of size <= ``eps`` (:func:`force_complex`,
    :func:`force_real_simple`, the latter resolving equal eigenvalues by
    shear and split). The pair is then confirmed by
    :func:`detect_equidimensional_cycle`.
    """
    from .domination import detect_equidimensional_cycle, finest_splitting_report

    if c.split[1] != 2:
        raise ValueError("the dichotomy is implemented for two-dimensional unstable bundles")
    words = enumerate_orbits_up_to(sft, period_max)
    ocs = [orbit_cocycle(c, w) for w in words]
    dims, certs = finest_splitting_report(c, ocs, m_max)
    if all(x == 1 for x in dims):
        margin = min(ct.margin for ct in certs)
        if margin > 0:
            return DichotomyReport("dominated", "-", dims, margin)
    case = dichotomy_case([_unstable_kind(oc) for oc in ocs])
    fams = [orbit_cocycle(c, w) for w in _family_candidates(c, sft, family_lengths)
            if w.symbols not in {x.symbols for x in words}]
    pool = ocs + fams
    got2 = _find_signature(pool, Signature((2,)), force_complex, eps, samples, seed,
                           set(), max_attempts)
    if got2 is None:
        return DichotomyReport("unresolved", case, dims, detail="no orbit could be given signature (2)")
    base2, p2, _, mech2 = got2
    got11 = _find_signature(pool, Signature((1, 1)), force_real_simple, eps, samples, seed + 1000,
                            {base2.word.symbols}, max_attempts)
    if got11 is None:
        return DichotomyReport("unresolved", case, dims, orbit_q=p2,
                               detail="no orbit could be given signature (1,1)")
    base11, p11, _, mech11 = got11
    norm = float(max(perturbation_norms(base2, p2).max(), perturbation_norms(base11, p11).max()))
    wit = detect_equidimensional_cycle(None, [p11, p2], samples, seed + 2000)
    if wit is None:
        return DichotomyReport("unresolved", case, dims, orbit_p=p11, orbit_q=p2, perturbation_norm=norm,
                               detail="signatures found but the cycle is not robust")
    return DichotomyReport("cycle", case, dims, 0.0, wit, p11, p2, norm,
                           mechanism_p=mech11, mechanism_q=mech2)
