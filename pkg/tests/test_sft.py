import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

import oracles
from cocyclelab import (
    MarkovMeasure, PeriodicWord, ResourceLimitError, SftSystem, bernoulli_measure,
    build_dense_periodic_word, count_periodic_points, cyclic_factors, enumerate_orbits_up_to,
    enumerate_periodic_words, full_shift, golden_mean_shift, markov_measure, parry_measure,
    sample_typical_word, stationary_vector,
)
from cocyclelab.systems import builtin

GOLDEN_RATIO = (1 + 5 ** 0.5) / 2


def _sfts():
    return [full_shift(2), golden_mean_shift(), builtin("three-symbol").sft, full_shift(3)]


# ----------------------------------------------------------- counting

def test_count_examples():
    assert count_periodic_points(full_shift(2), 3) == 8
    assert count_periodic_points(golden_mean_shift(), 1) == 1
    assert count_periodic_points(golden_mean_shift(), 2) == 3


def test_count_is_exact_for_large_n():
    # Python integers: no wraparound past 2**63
    assert count_periodic_points(full_shift(2), 100) == 2 ** 100
    assert count_periodic_points(full_shift(3), 70) == 3 ** 70


def test_count_rejects_bad_n():
    with pytest.raises(ValueError):
        count_periodic_points(full_shift(2), 0)


@pytest.mark.parametrize("n", range(1, 9))
def test_count_matches_brute_force(n):
    for sft in _sfts():
        words = oracles.brute_orbits(sft.adjacency, n)
        # every point of period dividing n lies on a primitive orbit of length d | n
        pts = sum(d * len(oracles.brute_orbits(sft.adjacency, d)) for d in range(1, n + 1) if n % d == 0)
        assert count_periodic_points(sft, n) == pts
        assert {w.symbols for w in enumerate_periodic_words(sft, n)} == words


# -------------------------------------------------------- enumeration

def test_enumeration_examples():
    assert [str(w) for w in enumerate_periodic_words(full_shift(2), 1)] == ["0", "1"]
    assert [str(w) for w in enumerate_periodic_words(golden_mean_shift(), 2)] == ["01"]
    assert len(enumerate_periodic_words(golden_mean_shift(), 5)) == 2


def test_enumeration_canonical_primitive_admissible():
    sft = builtin("three-symbol").sft
    for n in range(1, 9):
        words = enumerate_periodic_words(sft, n)
        assert len({w.symbols for w in words}) == len(words)
        for w in words:
            assert w.period == n and w.is_primitive and w.is_canonical
            assert sft.is_admissible_cycle(w.symbols)


def test_enumeration_resource_cap():
    with pytest.raises(ResourceLimitError):
        enumerate_periodic_words(full_shift(2), 20, max_nodes=1000)


def test_orbits_up_to_order_and_min_period():
    g = golden_mean_shift()
    words = enumerate_orbits_up_to(g, 5)
    assert [w.period for w in words] == sorted(w.period for w in words)
    assert [sum(w.period == n for w in words) for n in range(1, 6)] == [1, 1, 1, 1, 2]
    assert all(w.period >= 3 for w in enumerate_orbits_up_to(g, 5, min_period=3))


def test_non_transitive_rejected():
    reducible = np.array([[1, 0], [0, 1]])
    with pytest.raises(ValueError, match="not transitive"):
        SftSystem(reducible, require_transitive=True)
    with pytest.raises(ValueError, match="not transitive"):
        build_dense_periodic_word(SftSystem(reducible), 1)


def test_transitive_check_can_be_skipped():
    s = SftSystem(np.array([[1, 0], [0, 1]]), require_transitive=False)
    assert not s.is_transitive()


# ------------------------------------------------------- periodic words

@given(st.lists(st.integers(0, 2), min_size=1, max_size=12), st.integers(-20, 20))
def test_word_rotation_invariance(symbols, r):
    w = PeriodicWord(tuple(symbols))
    assert w.rotate(r).canonical() == w.canonical()
    assert w.rotate(r).period == w.period


@given(st.lists(st.integers(0, 1), min_size=1, max_size=10), st.integers(1, 4))
def test_word_repeat_root(symbols, times):
    w = PeriodicWord(tuple(symbols))
    assert w.repeat(times).root_period() == w.root_period()
    assert w.repeat(times).is_primitive == (times == 1 and w.is_primitive)


def test_word_parse_roundtrip():
    w = PeriodicWord.parse("0110")
    assert str(w) == "0110"
    assert w.canonical().symbols == (0, 0, 1, 1)


# ------------------------------------------------------------ dense words

def test_dense_word_examples():
    assert str(build_dense_periodic_word(full_shift(2), 1)) == "01"
    assert str(build_dense_periodic_word(full_shift(2), 2)) == "0011"
    assert str(build_dense_periodic_word(golden_mean_shift(), 2)) == "001"


@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_dense_word_covers_all_cylinders(k):
    for sft in _sfts():
        w = build_dense_periodic_word(sft, k)
        assert sft.is_admissible_cycle(w.symbols)
        want = set(sft.admissible_words(k))
        # direct cyclic scan, independent of cyclic_factors
        s = w.symbols
        n = len(s)
        got = {tuple(s[(i + j) % n] for j in range(k)) for i in range(n)}
        assert got == want
        assert cyclic_factors(w, k) == want


# ------------------------------------------------------------- measures

def test_stationary_examples():
    assert np.allclose(stationary_vector(np.full((2, 2), 0.5)), [0.5, 0.5])
    with pytest.raises(ValueError, match="no unique stationary vector"):
        stationary_vector(np.eye(2))


def test_parry_golden_closed_form():
    mu = parry_measure(golden_mean_shift())
    p0 = GOLDEN_RATIO ** 2 / (1 + GOLDEN_RATIO ** 2)
    assert np.allclose(mu.stationary, [p0, 1 - p0], atol=1e-14)
    assert np.allclose(mu.stationary, oracles.stationary(mu.transition), atol=1e-14)
    # power iteration oracle
    v = np.array([0.5, 0.5])
    for _ in range(200):
        v = v @ mu.transition
    assert np.allclose(mu.stationary, v, atol=1e-12)
    assert mu.is_compatible(golden_mean_shift())


def test_markov_measure_checks():
    with pytest.raises(ValueError):
        MarkovMeasure(np.array([[0.5, 0.6], [0.5, 0.5]]))
    with pytest.raises(ValueError):
        markov_measure(golden_mean_shift(), [[0.5, 0.5], [0.5, 0.5]])


def test_pair_frequencies_sum_to_one():
    mu = parry_measure(builtin("three-symbol").sft)
    f = mu.pair_frequencies()
    assert abs(f.sum() - 1) < 1e-14
    assert np.allclose(f.sum(axis=1), mu.stationary)
    assert np.allclose(f.sum(axis=0), mu.stationary)


def test_sample_length_one_distribution():
    mu = parry_measure(golden_mean_shift())
    first = np.array([sample_typical_word(mu, 1, s)[0] for s in range(100_000)])
    counts = np.bincount(first, minlength=2)
    p = stats.chisquare(counts, mu.stationary * len(first)).pvalue
    assert p > 0.01


def test_sample_first_symbols_chi_square_large():
    mu = bernoulli_measure([0.2, 0.3, 0.5])
    w = sample_typical_word(mu, 100_000, 7)
    counts = np.bincount(w, minlength=3)
    assert stats.chisquare(counts, mu.stationary * len(w)).pvalue > 0.01


def test_sample_deterministic_chain():
    mu = MarkovMeasure(np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0, 0.0, 0.0]]))
    w = sample_typical_word(mu, 30, 3)
    assert all((b - a) % 3 == 1 for a, b in zip(w, w[1:]))


def test_sample_seed_determinism():
    mu = parry_measure(golden_mean_shift())
    a = sample_typical_word(mu, 1000, 11)
    assert np.array_equal(a, sample_typical_word(mu, 1000, 11))
    assert not np.array_equal(a, sample_typical_word(mu, 1000, 12))
    assert all(not (x == 1 and y == 1) for x, y in zip(a, a[1:]))
