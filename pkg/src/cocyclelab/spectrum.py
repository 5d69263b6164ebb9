"""Lyapunov exponents of invariant measures.

Two kinds of measure are supported: periodic measures, handled exactly
through the period product, and stationary Markov measures, handled by
Birkhoff averaging along a sampled typical word with QR re-orthonormalisation
at every step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ._kernels import logs_along_directions, pull_directions, push_direction_logs, qr_log_increments
from .cocycle import LinearCocycle, _block_slices, orbit_cocycle, periodic_lyapunov_exponents
from .domination import finest_splitting_report
from .sft import (
    MarkovMeasure, PeriodicWord, SftSystem, enumerate_orbits_up_to, sample_typical_word,
)

BATCHES = 100
DEFAULT_LENGTH = 100_000


class NoInvariantDirection(ValueError):
    pass


class SplittingRequired(ValueError):
    """The cocycle lacks the one-dimensional dominated splitting a method needs."""


@dataclass(frozen=True)
class LyapunovSpectrum:
    """Ascending exponents with the method used and a one-sigma error bound."""

    exponents: np.ndarray
    method: str
    error_estimate: float = 0.0
    errors: np.ndarray = field(default=None)  # per exponent, same order

    def __post_init__(self):
        ex = np.asarray(self.exponents, dtype=float)
        if np.any(np.diff(ex) < 0):
            raise ValueError("exponents must be ascending")
        if self.method not in ("periodic_exact", "birkhoff_qr", "closed_form_diagonal"):
            raise ValueError(f"unknown method {self.method!r}")
        err = np.zeros_like(ex) if self.errors is None else np.asarray(self.errors, dtype=float)
        object.__setattr__(self, "exponents", ex)
        object.__setattr__(self, "errors", err)
        object.__setattr__(self, "error_estimate", float(self.error_estimate))

    @property
    def gaps(self) -> np.ndarray:
        return np.diff(self.exponents)


@dataclass(frozen=True)
class MeasureSpec:
    """Either a periodic measure (``word``) or a stationary Markov measure."""

    kind: str
    word: PeriodicWord | None = None
    markov: MarkovMeasure | None = None
    label: str = ""

    def __post_init__(self):
        if self.kind == "periodic":
            if self.word is None or self.markov is not None:
                raise ValueError("periodic measure needs a word and nothing else")
            w = self.word if isinstance(self.word, PeriodicWord) else PeriodicWord.parse(str(self.word))
            object.__setattr__(self, "word", w)
        elif self.kind == "markov":
            if self.markov is None or self.word is not None:
                raise ValueError("markov measure needs a MarkovMeasure and nothing else")
        else:
            raise ValueError(f"unknown measure kind {self.kind!r}")

    @classmethod
    def periodic(cls, word, label: str = "") -> "MeasureSpec":
        if not isinstance(word, PeriodicWord):
            word = PeriodicWord.parse(word) if isinstance(word, str) else PeriodicWord(tuple(word))
        return cls("periodic", word=word, label=label or str(word))

    @classmethod
    def of_markov(cls, measure: MarkovMeasure, label: str = "markov") -> "MeasureSpec":
        return cls("markov", markov=measure, label=label)

    def symbol_weights(self) -> np.ndarray:
        """Measure of each 1-cylinder."""
        if self.kind == "markov":
            return self.markov.stationary.copy()
        k = max(self.word.symbols) + 1
        return np.bincount(self.word.symbols, minlength=k) / self.word.period

    def pair_frequencies(self, k: int) -> np.ndarray:
        """``k x k`` matrix of 2-cylinder measures."""
        if self.kind == "markov":
            return self.markov.pair_frequencies()
        return periodic_pair_frequencies(self.word, k)


def periodic_pair_frequencies(word, k: int) -> np.ndarray:
    s = np.asarray(tuple(word), dtype=np.int64)
    f = np.zeros((k, k))
    np.add.at(f, (s, np.roll(s, -1)), 1.0)
    return f / len(s)


def _as_spec(mu) -> MeasureSpec:
    if isinstance(mu, MeasureSpec):
        return mu
    if isinstance(mu, MarkovMeasure):
        return MeasureSpec.of_markov(mu)
    return MeasureSpec.periodic(mu)


def _batch_errors(logs: np.ndarray, batches: int = BATCHES) -> np.ndarray:
    """Standard error of the mean of each column from non-overlapping batch means."""
    n = logs.shape[0]
    nb = min(batches, n)
    if nb < 2:
        return np.full(logs.shape[1], np.inf)
    size = n // nb
    means = logs[:nb * size].reshape(nb, size, -1).mean(axis=1)
    return means.std(axis=0, ddof=1) / math.sqrt(nb)


def _sample(mu: MeasureSpec, length: int, seed: int) -> np.ndarray:
    if length < 1:
        raise ValueError("length must be >= 1")
    return sample_typical_word(mu.markov, length, seed)


def measure_lyapunov_exponents(c: LinearCocycle, mu, length: int = DEFAULT_LENGTH,
                               seed: int = 0) -> LyapunovSpectrum:
    """Lyapunov exponents of ``c`` with respect to ``mu``.

    Periodic measures go through :func:`periodic_lyapunov_exponents` and are
    exact. For a Markov measure a typical word of ``length`` symbols is drawn
    and the per-step ``log |R_ii|`` of a QR-tracked frame are averaged; the
    error estimate is the largest batch-means standard error.
    """
    mu = _as_spec(mu)
    if mu.kind == "periodic":
        ex = periodic_lyapunov_exponents(orbit_cocycle(c, mu.word))
        return LyapunovSpectrum(ex, "periodic_exact", 0.0)
    if mu.markov.alphabet_size != c.alphabet_size:
        raise ValueError("measure and cocycle have different alphabets")
    word = _sample(mu, length, seed)
    logs = qr_log_increments(np.ascontiguousarray(c.generators), word)
    ex = logs.mean(axis=0)
    err = _batch_errors(logs)
    order = np.argsort(ex, kind="stable")
    return LyapunovSpectrum(ex[order], "birkhoff_qr", float(err.max()), err[order])


def closed_form_diagonal_exponents(c: LinearCocycle, mu) -> LyapunovSpectrum:
    """``sum_a mu[a] log|a_ii(a)|`` per coordinate, sorted; diagonal cocycles only."""
    if not c.is_diagonal():
        raise ValueError("cocycle is not diagonal")
    w = _as_spec(mu).symbol_weights()
    diag = np.log(np.abs(np.diagonal(c.generators, axis1=1, axis2=2)))
    ex = w @ diag[:len(w)]
    return LyapunovSpectrum(np.sort(ex), "closed_form_diagonal", 0.0)


def _locate_index(c: LinearCocycle, logs: np.ndarray, i: int):
    """Block slice and position in the block of the ``i``-th ascending exponent."""
    entries = []
    for _, sl in _block_slices(c.split):
        ex = np.sort(logs[:, sl].mean(axis=0))
        entries += [(v, sl, j) for j, v in enumerate(ex)]
    entries.sort(key=lambda e: e[0])
    return entries[i][1], entries[i][2]


def ergodic_average_phi(c: LinearCocycle, mu, i: int, length: int = DEFAULT_LENGTH,
                        seed: int = 0, burn_in: int | None = None) -> float:
    """Birkhoff average of ``log ||A(x) v_i(x)||`` along the ``i``-th Oseledets line.

    Inside a two-dimensional block the strongest line is tracked by forward
    power iteration and the weakest by backward iteration of the inverse
    factors; the first (resp. last) ``burn_in`` steps are discarded. Raises
    :class:`NoInvariantDirection` when the exponents of the block holding
    ``i`` coincide, so that no direction is singled out.
    """
    mu = _as_spec(mu)
    d = c.dimension
    if not 0 <= i < d:
        raise ValueError(f"direction index {i} out of range for dimension {d}")
    if mu.kind == "periodic":
        reps = max(1, -(-length // mu.word.period))
        word = np.asarray(mu.word.symbols * reps, dtype=np.int64)
    else:
        word = _sample(mu, length, seed)
    gens = np.ascontiguousarray(c.generators)
    logs = qr_log_increments(gens, word)
    sl, j = _locate_index(c, logs, i)
    b = sl.stop - sl.start
    blocks = np.ascontiguousarray(gens[:, sl, sl])
    if b == 1:
        return float(np.log(np.abs(blocks[word, 0, 0])).mean())
    if b > 2:
        raise NotImplementedError("directional averages need blocks of dimension <= 2")
    scal = blocks[:, 0, 0]
    if np.allclose(blocks, scal[:, None, None] * np.eye(b), rtol=0, atol=1e-15 * np.abs(scal).max()):
        # scalar generators: every line is invariant and grows at the same rate
        return float(np.log(np.abs(scal[word])).mean())
    bl = logs[:, sl]
    ex = bl.mean(axis=0)
    err = _batch_errors(bl)
    gap = abs(ex[0] - ex[1])
    if gap <= max(5.0 * float(err.max()), 1e-9) or not np.isfinite(err).all():
        raise NoInvariantDirection(
            f"block {sl.start}..{sl.stop - 1} has equal exponents; no invariant line at index {i}")
    n = len(word)
    burn = burn_in if burn_in is not None else min(n // 10, max(50, int(60.0 / gap)))
    if n - burn < 1:
        raise ValueError("length too short for burn-in")
    v0 = np.ones(b) / math.sqrt(b)
    if j == 1:
        vals = push_direction_logs(blocks, word, v0)
        return float(vals[burn:].mean())
    inv = np.ascontiguousarray(np.linalg.inv(blocks))
    dirs = pull_directions(inv, word, v0)
    vals = logs_along_directions(blocks, word, dirs)
    return float(vals[:n - burn].mean())


def _require_one_dimensional(c: LinearCocycle, words, m_max: int = 12):
    dims, certs = finest_splitting_report(c, list(words), m_max)
    if any(x != 1 for x in dims):
        raise SplittingRequired(f"finest dominated splitting is {dims}, not one-dimensional")
    margin = min(ct.margin for ct in certs)
    if not margin > 0:
        raise SplittingRequired("dominated splitting has no positive margin")
    return margin


def _support_sft(pairs: np.ndarray) -> SftSystem:
    return SftSystem((pairs > 0).astype(int))


def _target_spectrum(c: LinearCocycle, target: MeasureSpec, length: int, seed: int) -> LyapunovSpectrum:
    if target.kind == "markov" and c.is_diagonal():
        return closed_form_diagonal_exponents(c, target)
    return measure_lyapunov_exponents(c, target, length, seed)


@dataclass
class ConvergenceRow:
    period_cap: int
    word: str
    distance: float
    deviations: np.ndarray


@dataclass
class ConvergenceTable:
    target: LyapunovSpectrum
    rows: list[ConvergenceRow]
    margin: float

    def max_deviation(self) -> np.ndarray:
        return np.array([r.deviations.max() for r in self.rows])

    def records(self) -> list[dict]:
        out = []
        for r in self.rows:
            for i, dv in enumerate(r.deviations):
                out.append({"period_cap": r.period_cap, "word": r.word, "distance": r.distance,
                            "i": i, "deviation": float(dv)})
        return out


def continuity_probe(c: LinearCocycle, target, periods: Sequence[int], seed: int = 0,
                     length: int = DEFAULT_LENGTH, sft: SftSystem | None = None,
                     m_max: int = 12) -> ConvergenceTable:
    """Exponents of the periodic measures closest to ``target``.

    For each period cap the orbit (period at most the cap) whose cyclic pair
    frequencies are closest in L1 to those of the target is selected and
    ``|lambda_i(orbit) - lambda_i(target)|`` is tabulated. Ties go to the
    shorter, then lexicographically smaller, orbit.
    """
    target = _as_spec(target)
    periods = [int(p) for p in periods]
    if not periods or any(b <= a for a, b in zip(periods, periods[1:])) or periods[0] < 1:
        raise ValueError("periods must be a nonempty increasing list of positive integers")
    k = c.alphabet_size
    tp = target.pair_frequencies(k)
    if sft is None:
        if target.kind == "periodic":
            raise ValueError("an SFT is needed for a periodic target")
        sft = _support_sft(tp)
    words = enumerate_orbits_up_to(sft, periods[-1])
    if not words:
        raise ValueError("no periodic orbits to scan")
    margin = _require_one_dimensional(c, words, m_max)
    ref = _target_spectrum(c, target, length, seed)
    scored = sorted(((float(np.abs(periodic_pair_frequencies(w, k) - tp).sum()), w.period, w.symbols, w)
                     for w in words), key=lambda e: e[:3])
    rows = []
    for cap in periods:
        best = next((e for e in scored if e[1] <= cap), None)
        if best is None:
            continue
        ex = periodic_lyapunov_exponents(orbit_cocycle(c, best[3]))
        rows.append(ConvergenceRow(cap, str(best[3]), best[0], np.abs(ex - ref.exponents)))
    return ConvergenceTable(ref, rows, margin)


@dataclass
class GapTable:
    c_min: float
    spectra: list[LyapunovSpectrum]
    labels: list[str]

    def records(self) -> list[dict]:
        return [{"measure_id": lab, "i": i, "lambda": float(v), "error_estimate": float(e)}
                for lab, sp in zip(self.labels, self.spectra)
                for i, (v, e) in enumerate(zip(sp.exponents, sp.errors))]


def measure_seeds(seed: int, count: int) -> list[int]:
    """Independent per-measure seeds derived from a master seed."""
    ss = np.random.SeedSequence(seed).spawn(count)
    return [int(s.generate_state(1)[0]) for s in ss]


def _scan_words(c: LinearCocycle, specs: Sequence[MeasureSpec], scan_period: int) -> list[PeriodicWord]:
    words = {s.word.canonical() for s in specs if s.kind == "periodic"}
    for s in specs:
        if s.kind == "markov":
            words.update(enumerate_orbits_up_to(_support_sft(s.markov.pair_frequencies()), scan_period))
    return sorted(words, key=lambda w: (w.period, w.symbols))


def gap_table(c: LinearCocycle, measures, length: int = DEFAULT_LENGTH, seed: int = 0,
              scan_period: int = 8, m_max: int = 12) -> GapTable:
    """Spectra of every measure together with the smallest adjacent gap."""
    specs = [_as_spec(m) for m in measures]
    if not specs:
        raise ValueError("no measures")
    _require_one_dimensional(c, _scan_words(c, specs, scan_period), m_max)
    spectra = [measure_lyapunov_exponents(c, s, length, sd)
               for s, sd in zip(specs, measure_seeds(seed, len(specs)))]
    c_min = min(float(sp.gaps.min()) for sp in spectra)
    labels = [s.label or f"mu{j}" for j, s in enumerate(specs)]
    return GapTable(c_min, spectra, labels)


def gap_report(c: LinearCocycle, measures, length: int = DEFAULT_LENGTH, seed: int = 0,
               scan_period: int = 8) -> float:
    """Smallest adjacent exponent gap over a list of measures.

    The one-dimensional dominated splitting is checked first over the
    periodic words in the list and over the orbits (period at most
    ``scan_period``) in the support of each Markov measure.
    """
    return gap_table(c, measures, length, seed, scan_period).c_min
