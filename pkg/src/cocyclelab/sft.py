"""Subshifts of finite type, periodic words and Markov measures.

An :class:`SftSystem` is given by a 0/1 adjacency matrix over the alphabet
``0..k-1``: symbol ``j`` may follow symbol ``i`` iff ``adjacency[i, j] == 1``.
Periodic orbits are represented by :class:`PeriodicWord`, whose canonical
form is the lexicographically least rotation (a Lyndon word when the word
is primitive).
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.csgraph import connected_components, shortest_path

__all__ = [
    "SftSystem",
    "PeriodicWord",
    "MarkovMeasure",
    "ResourceLimitError",
    "full_shift",
    "golden_mean_shift",
    "count_periodic_points",
    "enumerate_periodic_words",
    "enumerate_orbits_up_to",
    "build_dense_periodic_word",
    "dense_word_connectors",
    "cyclic_factors",
    "stationary_vector",
    "markov_measure",
    "bernoulli_measure",
    "parry_measure",
    "sample_typical_word",
]

DEFAULT_MAX_NODES = 10_000_000


class ResourceLimitError(RuntimeError):
    """Raised when an enumeration would exceed its configured work cap."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class SftSystem:
    """Vertex shift on ``alphabet_size`` symbols.

    Parameters
    ----------
    adjacency : array_like
        Square 0/1 matrix; entry ``(i, j)`` is 1 iff ``j`` may follow ``i``.
    require_transitive : bool
        If set, reject reducible adjacency matrices.
    """

    adjacency: np.ndarray
    require_transitive: bool = False
    name: str = ""

    def __post_init__(self):
        a = np.asarray(self.adjacency)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
            raise ValueError("adjacency must be a non-empty square matrix")
        if not np.isin(a, (0, 1)).all():
            raise ValueError("adjacency entries must be 0 or 1")
        a = a.astype(np.int64)
        if (a.sum(axis=1) == 0).any() or (a.sum(axis=0) == 0).any():
            raise ValueError("adjacency has a stranded symbol (empty row or column)")
        object.__setattr__(self, "adjacency", _frozen(a))
        if self.require_transitive and not self.is_transitive():
            raise ValueError("not transitive")

    @property
    def alphabet_size(self) -> int:
        return self.adjacency.shape[0]

    def allows(self, i: int, j: int) -> bool:
        return bool(self.adjacency[i, j])

    def is_transitive(self) -> bool:
        n, _ = connected_components(self.adjacency, directed=True, connection="strong")
        return n == 1

    def is_admissible_cycle(self, symbols) -> bool:
        s = list(symbols)
        if not s or min(s) < 0 or max(s) >= self.alphabet_size:
            return False
        return all(self.adjacency[s[i], s[(i + 1) % len(s)]] for i in range(len(s)))

    def is_admissible_path(self, symbols) -> bool:
        s = list(symbols)
        if not s or min(s) < 0 or max(s) >= self.alphabet_size:
            return False
        return all(self.adjacency[a, b] for a, b in zip(s, s[1:]))

    def distances(self) -> np.ndarray:
        """Shortest-path lengths (number of transitions) between symbols."""
        return shortest_path(self.adjacency, directed=True, unweighted=True)

    def diameter(self) -> int:
        d = self.distances()
        if not np.isfinite(d).all():
            raise ValueError("not transitive")
        return int(d.max())

    def shortest_path(self, i: int, j: int) -> list[int]:
        """Intermediate symbols of a shortest path ``i -> ... -> j`` (exclusive)."""
        prev = {i: None}
        queue = deque([i])
        while queue:
            a = queue.popleft()
            for b in np.flatnonzero(self.adjacency[a]):
                b = int(b)
                if b == j:
                    path = []
                    while a != i:
                        path.append(a)
                        a = prev[a]
                    return path[::-1]
                if b not in prev:
                    prev[b] = a
                    queue.append(b)
        raise ValueError("not transitive")

    def admissible_words(self, length: int) -> list[tuple[int, ...]]:
        """All admissible (non-cyclic) words of the given length, sorted."""
        words = [(a,) for a in range(self.alphabet_size)]
        for _ in range(length - 1):
            words = [w + (int(b),) for w in words for b in np.flatnonzero(self.adjacency[w[-1]])]
        return sorted(words)


def full_shift(k: int = 2) -> SftSystem:
    return SftSystem(np.ones((k, k), dtype=int), require_transitive=True, name=f"full {k}-shift")


def golden_mean_shift() -> SftSystem:
    """Two symbols, the word ``11`` forbidden."""
    return SftSystem(np.array([[1, 1], [1, 0]]), require_transitive=True, name="golden mean")


@dataclass(frozen=True)
class PeriodicWord:
    """Cyclic word ``symbols`` read as one traversal of a periodic orbit.

    Only non-emptiness is enforced on construction; use
    :meth:`canonical`, :attr:`is_primitive` and
    :meth:`SftSystem.is_admissible_cycle` to check the orbit invariants.
    """

    symbols: tuple[int, ...]

    def __post_init__(self):
        s = tuple(int(a) for a in self.symbols)
        if not s:
            raise ValueError("empty word")
        object.__setattr__(self, "symbols", s)

    @classmethod
    def parse(cls, text: str) -> "PeriodicWord":
        text = text.strip()
        if "," in text or " " in text:
            return cls(tuple(int(t) for t in text.replace(",", " ").split()))
        return cls(tuple(int(ch) for ch in text))

    def __len__(self):
        return len(self.symbols)

    def __iter__(self):
        return iter(self.symbols)

    def __getitem__(self, i):
        return self.symbols[i]

    def __str__(self):
        if max(self.symbols) < 10:
            return "".join(str(a) for a in self.symbols)
        return ",".join(str(a) for a in self.symbols)

    @property
    def period(self) -> int:
        return len(self.symbols)

    def root_period(self) -> int:
        """Least ``d`` with ``symbols == symbols[:d] * (n // d)``."""
        s = self.symbols
        n = len(s)
        for d in range(1, n + 1):
            if n % d == 0 and s == s[:d] * (n // d):
                return d
        return n

    @property
    def is_primitive(self) -> bool:
        return self.root_period() == len(self.symbols)

    def rotation_offset(self) -> int:
        """Shift ``r`` such that ``symbols[r:] + symbols[:r]`` is least."""
        s = self.symbols
        n = len(s)
        ss = s + s
        return min(range(n), key=lambda r: ss[r:r + n])

    def rotate(self, r: int) -> "PeriodicWord":
        r %= len(self.symbols)
        return PeriodicWord(self.symbols[r:] + self.symbols[:r])

    def canonical(self) -> "PeriodicWord":
        return self.rotate(self.rotation_offset())

    @property
    def is_canonical(self) -> bool:
        return self.canonical().symbols == self.symbols

    def repeat(self, times: int) -> "PeriodicWord":
        """The orbit traversed ``times`` times (not primitive for times > 1)."""
        return PeriodicWord(self.symbols * times)


def cyclic_factors(word, k: int) -> set[tuple[int, ...]]:
    """Set of length-``k`` factors of the cyclic word."""
    s = tuple(word)
    n = len(s)
    ext = s * (k // n + 2)
    return {ext[i:i + k] for i in range(n)}


def count_periodic_points(sft: SftSystem, n: int) -> int:
    """Number of points of period ``n`` (not necessarily least), ``trace(A^n)``.

    Computed in exact integer arithmetic, so there is no wraparound.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    a = sft.adjacency.astype(object)
    return int(np.trace(np.linalg.matrix_power(a, n)))


def enumerate_periodic_words(sft: SftSystem, n: int, max_nodes: int = DEFAULT_MAX_NODES) -> list[PeriodicWord]:
    """Primitive period-``n`` orbits as canonical words, lexicographically sorted.

    Uses the recursive Fredricksen-Kessler-Maiorana generation of Lyndon
    words, pruned at inadmissible prefixes. ``max_nodes`` caps the number of
    visited prefixes.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    adj = sft.adjacency
    k = sft.alphabet_size
    a = [0] * (n + 1)
    out: list[PeriodicWord] = []
    visited = 0

    def gen(t: int, p: int):
        nonlocal visited
        visited += 1
        if visited > max_nodes:
            raise ResourceLimitError(f"enumeration exceeded max_nodes={max_nodes} at period {n}")
        if t > n:
            if p == n and adj[a[n], a[1]]:
                out.append(PeriodicWord(tuple(a[1:])))
            return
        start = a[t - p]
        for j in range(start, k):
            if t > 1 and not adj[a[t - 1], j]:
                continue
            a[t] = j
            gen(t + 1, p if j == start else t)

    gen(1, 1)
    return out


def enumerate_orbits_up_to(sft: SftSystem, max_period: int, min_period: int = 1) -> list[PeriodicWord]:
    """All primitive orbits with ``min_period <= period <= max_period``, by period then word."""
    words = []
    for n in range(min_period, max_period + 1):
        words.extend(enumerate_periodic_words(sft, n))
    return words


def _euler_cycle(sft: SftSystem, k: int):
    """Eulerian circuit through the graph whose edges are admissible k-words.

    Returns None when that graph is not balanced.
    """
    words = sft.admissible_words(k)
    out_edges: dict[tuple, list] = {}
    indeg: dict[tuple, int] = {}
    for w in words:
        out_edges.setdefault(w[:-1], []).append(w)
        indeg[w[1:]] = indeg.get(w[1:], 0) + 1
    nodes = set(out_edges) | set(indeg)
    if any(len(out_edges.get(v, [])) != indeg.get(v, 0) for v in nodes):
        return None
    for v in out_edges:
        out_edges[v].sort(reverse=True)
    # Hierholzer; smallest outgoing edge first
    start = min(out_edges)
    stack = [(start, None)]
    circuit = []
    while stack:
        v, e = stack[-1]
        if out_edges.get(v):
            w = out_edges[v].pop()
            stack.append((w[1:], w[-1]))
        else:
            stack.pop()
            if e is not None:
                circuit.append(e)
    circuit.reverse()
    if len(circuit) != len(words):
        return None
    return circuit


def _greedy_cycle(sft: SftSystem, k: int):
    """Greedy covering of all admissible k-words, glued by shortest paths.

    Returns the cyclic symbol list and the lengths of the connecting paths.
    """
    targets = set(sft.admissible_words(k))
    first = min(targets)
    seq = list(first)
    covered = {first}
    connectors = []
    while len(covered) < len(targets):
        tail = tuple(seq[-(k - 1):]) if k > 1 else ()
        nxt = [b for b in range(sft.alphabet_size)
               if sft.allows(seq[-1], b) and tail + (b,) not in covered]
        if nxt:
            seq.append(nxt[0])
            covered.add(tuple(seq[-k:]))
            continue
        # walk a shortest route to the nearest uncovered word
        best = None
        for w in sorted(targets - covered):
            bridge = [] if sft.allows(seq[-1], w[0]) else sft.shortest_path(seq[-1], w[0])
            if best is None or len(bridge) < len(best[0]):
                best = (bridge, w)
        bridge, w = best
        connectors.append(len(bridge))
        for b in list(bridge) + list(w):
            seq.append(b)
            if len(seq) >= k:
                covered.add(tuple(seq[-k:]))
    closing = sft.shortest_path(seq[-1], seq[0]) if not sft.allows(seq[-1], seq[0]) else []
    connectors.append(len(closing))
    seq.extend(closing)
    return seq, connectors


def _dense_cycle(sft: SftSystem, k: int):
    if k < 1:
        raise ValueError("k must be >= 1")
    if not sft.is_transitive():
        raise ValueError("not transitive")
    circuit = _euler_cycle(sft, k) if k > 1 else None
    if circuit is not None:
        return circuit, []
    return _greedy_cycle(sft, k)


def build_dense_periodic_word(sft: SftSystem, k: int) -> PeriodicWord:
    """Periodic word whose cyclic factors include every admissible ``k``-word.

    This is the symbolic version of a periodic orbit visiting every depth-``k``
    cylinder. A de Bruijn-type Eulerian circuit is used when the ``k``-word
    graph is balanced; otherwise words are covered greedily and glued with
    shortest connecting paths.
    """
    seq, _ = _dense_cycle(sft, k)
    w = PeriodicWord(tuple(seq))
    return PeriodicWord(w.symbols[:w.root_period()]).canonical()


def dense_word_connectors(sft: SftSystem, k: int) -> list[int]:
    """Lengths of the connecting paths used by :func:`build_dense_periodic_word`.

    Empty when an Eulerian circuit was available (no gluing needed).
    """
    return list(_dense_cycle(sft, k)[1])


@dataclass(frozen=True, eq=False)
class MarkovMeasure:
    """Markov measure with row-stochastic ``transition`` and stationary vector."""

    transition: np.ndarray
    stationary: np.ndarray = field(default=None)

    def __post_init__(self):
        p = np.asarray(self.transition, dtype=float)
        if p.ndim != 2 or p.shape[0] != p.shape[1]:
            raise ValueError("transition must be square")
        if (p < 0).any() or np.abs(p.sum(axis=1) - 1.0).max() > 1e-12:
            raise ValueError("transition must be row-stochastic")
        pi = stationary_vector(p) if self.stationary is None else np.asarray(self.stationary, dtype=float)
        if (pi < 0).any() or abs(pi.sum() - 1.0) > 1e-12 or np.abs(pi @ p - pi).max() > 1e-10:
            raise ValueError("stationary vector is not invariant")
        object.__setattr__(self, "transition", _frozen(p))
        object.__setattr__(self, "stationary", _frozen(pi))

    @property
    def alphabet_size(self) -> int:
        return self.transition.shape[0]

    def pair_frequencies(self) -> np.ndarray:
        """Matrix of cylinder measures ``mu[ab] = pi_a P_ab``."""
        return self.stationary[:, None] * self.transition

    def is_compatible(self, sft: SftSystem) -> bool:
        return bool(((self.transition > 0) <= (sft.adjacency > 0)).all())


def stationary_vector(transition) -> np.ndarray:
    """Stationary probability vector of an irreducible row-stochastic matrix."""
    p = np.asarray(transition, dtype=float)
    k = p.shape[0]
    ncomp, _ = connected_components(p > 0, directed=True, connection="strong")
    if ncomp != 1:
        raise ValueError("no unique stationary vector (chain is reducible)")
    a = p.T - np.eye(k)
    a[-1, :] = 1.0
    b = np.zeros(k)
    b[-1] = 1.0
    pi = np.linalg.solve(a, b)
    pi = np.clip(pi, 0.0, None)
    return pi / pi.sum()


def markov_measure(sft: SftSystem, transition) -> MarkovMeasure:
    m = MarkovMeasure(np.asarray(transition, dtype=float))
    if m.alphabet_size != sft.alphabet_size or not m.is_compatible(sft):
        raise ValueError("transition charges a forbidden transition")
    return m


def bernoulli_measure(probs) -> MarkovMeasure:
    p = np.asarray(probs, dtype=float)
    return MarkovMeasure(np.tile(p, (len(p), 1)), p / p.sum())


def parry_measure(sft: SftSystem) -> MarkovMeasure:
    """Measure of maximal entropy of a transitive SFT."""
    a = sft.adjacency.astype(float)
    w, vr = np.linalg.eig(a)
    i = int(np.argmax(w.real))
    lam = w[i].real
    v = np.abs(vr[:, i].real)
    wl, vl = np.linalg.eig(a.T)
    u = np.abs(vl[:, int(np.argmax(wl.real))].real)
    p = a * v[None, :] / (lam * v[:, None])
    p = p / p.sum(axis=1, keepdims=True)
    pi = u * v / (u * v).sum()
    return MarkovMeasure(p, pi)


def sample_typical_word(measure: MarkovMeasure, length: int, seed: int) -> np.ndarray:
    """Word of the given length drawn from the stationary Markov chain.

    Deterministic for a given ``seed``; one uniform variate per symbol is
    drawn from ``numpy.random.default_rng(seed)``, so a longer sample extends
    a shorter one with the same seed.
    """
    from ._kernels import markov_chain_walk

    if length < 1:
        raise ValueError("length must be >= 1")
    rng = np.random.default_rng(seed)
    u = rng.random(length)
    cum = np.cumsum(measure.transition, axis=1)
    cum[:, -1] = 1.0
    cpi = np.cumsum(measure.stationary)
    cpi[-1] = 1.0
    return markov_chain_walk(u, cpi, cum)
