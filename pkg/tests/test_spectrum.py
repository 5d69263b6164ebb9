import math

import numpy as np
import pytest

import oracles
from cocyclelab import (
    LinearCocycle, LyapunovSpectrum, MeasureSpec, NoInvariantDirection, SplittingRequired,
    bernoulli_measure, closed_form_diagonal_exponents, continuity_probe, enumerate_orbits_up_to,
    ergodic_average_phi, gap_report, gap_table, measure_lyapunov_exponents, orbit_cocycle,
    parry_measure, periodic_lyapunov_exponents,
)
from cocyclelab.spectrum import measure_seeds, periodic_pair_frequencies
from cocyclelab.systems import builtin

LOG2 = math.log(2)
BERNOULLI = bernoulli_measure([0.5, 0.5])


def _crossing():
    return builtin("diag-crossing").cocycle


# ----------------------------------------------------------- exponents

def test_identity_cocycle_zero():
    c = builtin("identity").cocycle
    sp = measure_lyapunov_exponents(c, BERNOULLI, 10_000, 0)
    assert np.array_equal(sp.exponents, np.zeros(3))
    assert sp.method == "birkhoff_qr"


def test_periodic_measure_is_exact():
    sd = builtin("golden-mixed")
    for w in enumerate_orbits_up_to(sd.sft, 6):
        sp = measure_lyapunov_exponents(sd.cocycle, MeasureSpec.periodic(w))
        assert np.array_equal(sp.exponents, periodic_lyapunov_exponents(orbit_cocycle(sd.cocycle, w)))
        assert sp.method == "periodic_exact" and sp.error_estimate == 0.0


def test_closed_form_example():
    sp = closed_form_diagonal_exponents(_crossing(), BERNOULLI)
    assert np.allclose(sp.exponents, [1.5 * LOG2, 2 * LOG2], atol=1e-15)
    with pytest.raises(ValueError):
        closed_form_diagonal_exponents(builtin("two-fixed-point").cocycle, BERNOULLI)


@pytest.mark.parametrize("name", ["diag-crossing", "golden-mixed", "three-symbol"])
def test_birkhoff_short_runs(name):
    sd = builtin(name)
    mu = BERNOULLI if name == "diag-crossing" else sd.measure()
    ref = oracles.diagonal_exponents(sd.cocycle.generators, oracles.stationary(mu.transition))
    for seed in range(10):
        got = measure_lyapunov_exponents(sd.cocycle, mu, 10_000, seed)
        assert np.abs(got.exponents - ref).max() < 1e-2


def test_error_estimate_is_honest():
    sd = builtin("golden-mixed")
    mu = sd.measure()
    ref = closed_form_diagonal_exponents(sd.cocycle, mu).exponents
    inside = 0
    for seed in range(20):
        got = measure_lyapunov_exponents(sd.cocycle, mu, 20_000, seed)
        inside += bool((np.abs(got.exponents - ref) <= 4 * got.errors + 1e-12).all())
    assert inside >= 18
    short = measure_lyapunov_exponents(sd.cocycle, mu, 10_000, 0).error_estimate
    long = measure_lyapunov_exponents(sd.cocycle, mu, 40_000, 0).error_estimate
    assert long < short


def test_birkhoff_non_diagonal_stable_exponent_and_det_sum():
    # stable block is the constant 1/2; exponents add up to the mean log|det|
    sd = builtin("two-fixed-point")
    mu = MeasureSpec.of_markov(parry_measure(sd.sft))
    got = measure_lyapunov_exponents(sd.cocycle, mu, 50_000, 1)
    assert got.exponents[0] == pytest.approx(-LOG2, abs=1e-12)
    assert np.all(np.isfinite(got.exponents))
    assert got.exponents.sum() == pytest.approx(
        np.mean([np.log(abs(np.linalg.det(g))) for g in sd.cocycle.generators]), abs=0.03)


def test_alphabet_mismatch():
    with pytest.raises(ValueError):
        measure_lyapunov_exponents(builtin("three-symbol").cocycle, BERNOULLI, 100, 0)


def test_spectrum_validation():
    with pytest.raises(ValueError):
        LyapunovSpectrum(np.array([1.0, 0.0]), "periodic_exact")
    with pytest.raises(ValueError):
        LyapunovSpectrum(np.array([0.0, 1.0]), "guess")
    assert np.allclose(LyapunovSpectrum(np.array([0.0, 1.0, 3.0]), "periodic_exact").gaps, [1, 2])


def test_measure_spec():
    with pytest.raises(ValueError):
        MeasureSpec("periodic")
    with pytest.raises(ValueError):
        MeasureSpec("other")
    m = MeasureSpec.periodic("001")
    assert np.allclose(m.symbol_weights(), [2 / 3, 1 / 3])
    f = periodic_pair_frequencies((0, 0, 1), 2)
    assert np.allclose(f, [[1 / 3, 1 / 3], [1 / 3, 0]])


# ------------------------------------------------ directional averages

def test_phi_diagonal_coordinates():
    c = _crossing()
    ref = [1.5 * LOG2, 2 * LOG2]
    for i in (0, 1):
        assert ergodic_average_phi(c, BERNOULLI, i, 100_000, 3) == pytest.approx(ref[i], abs=0.01)


def test_phi_matches_exponents_non_diagonal():
    c = LinearCocycle.from_blocks([[[0.5]], [[0.4]]],
                                  [np.array([[3.0, 0.5], [0.2, 1.2]]), np.array([[2.5, -0.4], [0.3, 1.1]])])
    sp = measure_lyapunov_exponents(c, BERNOULLI, 100_000, 5)
    for i in range(3):
        phi = ergodic_average_phi(c, BERNOULLI, i, 100_000, 5)
        assert phi == pytest.approx(sp.exponents[i], abs=5 * sp.error_estimate + 5e-3)


def test_phi_identity_and_rotation():
    c = builtin("identity").cocycle
    for i in range(3):
        assert ergodic_average_phi(c, BERNOULLI, i, 1000, 0) == 0.0
    rb = builtin("rotation-block").cocycle
    ergodic_average_phi(rb, BERNOULLI, 0, 20_000, 0)
    with pytest.raises(NoInvariantDirection):
        ergodic_average_phi(builtin("two-fixed-point").cocycle, MeasureSpec.periodic("0"), 1, 1000)
    with pytest.raises(ValueError):
        ergodic_average_phi(rb, BERNOULLI, 3)


# ------------------------------------------------------------ continuity

def test_continuity_bernoulli():
    sd = builtin("full2-diagonal")
    tab = continuity_probe(sd.cocycle, BERNOULLI, list(range(2, 13)), sft=sd.sft)
    dev = tab.max_deviation()
    assert dev[-1] < 0.05
    assert tab.margin > 0
    assert tab.rows[2].word == "0011" and dev[2] == pytest.approx(0.0, abs=1e-12)
    assert np.allclose(tab.target.exponents, oracles.diagonal_exponents(sd.cocycle.generators, [0.5, 0.5]))


def test_continuity_periodic_target():
    sd = builtin("full2-diagonal")
    tab = continuity_probe(sd.cocycle, MeasureSpec.periodic("00101"), [3, 4, 5, 6], sft=sd.sft)
    rows = {r.period_cap: r for r in tab.rows}
    assert rows[5].word == "00101" and rows[5].deviations.max() == 0.0
    assert rows[6].deviations.max() == 0.0


def test_continuity_requires_splitting():
    sd = builtin("rotation-block")
    with pytest.raises(SplittingRequired):
        continuity_probe(sd.cocycle, BERNOULLI, [2, 4], sft=sd.sft)
    with pytest.raises(ValueError):
        continuity_probe(sd.cocycle, BERNOULLI, [4, 2], sft=sd.sft)


def test_continuity_records():
    sd = builtin("full2-diagonal")
    tab = continuity_probe(sd.cocycle, BERNOULLI, [2, 3], sft=sd.sft)
    recs = tab.records()
    assert len(recs) == 2 * 3
    assert set(recs[0]) == {"period_cap", "word", "distance", "i", "deviation"}


# ---------------------------------------------------------------- gaps

def test_gap_fixed_point():
    c = LinearCocycle.from_blocks([[[0.5]]], [np.diag([2.0, 8.0])])
    assert gap_report(c, [MeasureSpec.periodic("0")]) == pytest.approx(math.log(4))


def test_gap_empty():
    with pytest.raises(ValueError, match="no measures"):
        gap_report(_crossing(), [])


def test_gap_over_measure_set():
    sd = builtin("full2-diagonal")
    c = sd.cocycle
    measures = [BERNOULLI, MeasureSpec.periodic("0"), MeasureSpec.periodic("1"), MeasureSpec.periodic("01")]
    tab = gap_table(c, measures, 10**5, 0)
    per = []
    for m in measures:
        w = [0.5, 0.5] if m is BERNOULLI else np.bincount(m.word.symbols, minlength=2) / m.word.period
        per.append(np.diff(oracles.diagonal_exponents(c.generators, np.asarray(w))).min())
    assert tab.c_min == pytest.approx(min(per), abs=0.01)
    for sp, ref in zip(tab.spectra[1:], per[1:]):
        assert sp.gaps.min() == pytest.approx(ref, abs=1e-12)
    assert len(tab.records()) == 4 * 3


def test_gap_crossing_diagonal_has_no_splitting():
    with pytest.raises(SplittingRequired):
        gap_report(_crossing(), [BERNOULLI, MeasureSpec.periodic("0"), MeasureSpec.periodic("01")])


def test_measure_seeds():
    a = measure_seeds(5, 4)
    assert a == measure_seeds(5, 4) and len(set(a)) == 4
    assert measure_seeds(5, 2) == a[:2]
