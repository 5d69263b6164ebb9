import math

import numpy as np
import pytest

import oracles
from cocyclelab import (
    BudgetExceeded, LinearCocycle, PeriodTooShort, PerturbationPlan, PeriodicWord, RotationArc,
    Signature, StageError, apply_plan, arc_orbit, classify_dichotomy, force_complex,
    force_real_simple, full_shift, golden_mean_shift, has_simple_spectrum, kill_nilpotent,
    kill_nilpotent_report, make_dense_simple, orbit_cocycle, perturb_generator, perturbation_norms,
    rotation, rotation_arc_experiment, rotation_number, signature_explosion,
    signature_robustness_margin, split_equal_eigenvalues, unstable_signature,
)
from cocyclelab.perturb import dichotomy_case, orientation_signs
from cocyclelab.systems import builtin

D = np.diag
JORDAN = np.array([[2.0, 1.0], [0.0, 2.0]])


def _system(*unstable, stable=0.5):
    return LinearCocycle.from_blocks([[[stable]]] * len(unstable), list(unstable))


def _fixed(unstable):
    return orbit_cocycle(_system(unstable), "0")


def _unstable_product(oc):
    return oracles.word_product(oc.factors, list(range(oc.period)))[1:, 1:]


# ------------------------------------------------------------------ plans

def test_empty_plan_is_identity():
    oc = _fixed(D([2.0, 3.0]))
    out = apply_plan(oc, PerturbationPlan(oc.word, {}, 0.1))
    assert np.array_equal(out.factors, oc.factors)


def test_one_site_rotation():
    oc = _fixed(D([2.0, 3.0]))
    r = rotation(0.05)
    out = apply_plan(oc, PerturbationPlan(oc.word, {0: r}, 0.1))
    got = np.sort_complex(np.linalg.eigvals(_unstable_product(out)))
    assert np.allclose(got, np.sort_complex(np.linalg.eigvals(r @ D([2.0, 3.0]))))


def test_plan_budget_violation():
    oc = _fixed(D([2.0, 3.0]))
    budget = 0.1
    p = np.eye(2) + D([1.5 * budget, 0.0])
    with pytest.raises(BudgetExceeded) as e:
        apply_plan(oc, PerturbationPlan(oc.word, {0: p}, budget))
    assert e.value.site == 0 and e.value.norm == pytest.approx(1.5 * budget)


def test_plan_rejects_foreign_orbit_and_bad_site():
    c = _system(D([2.0, 3.0]), D([3.0, 5.0]))
    oc = orbit_cocycle(c, "01")
    with pytest.raises(ValueError):
        apply_plan(oc, PerturbationPlan(PeriodicWord.parse("0"), {}, 0.1))
    with pytest.raises(ValueError):
        apply_plan(oc, PerturbationPlan(oc.word, {5: np.eye(2)}, 0.1))


def test_plan_then_inverse_plan_restores():
    rng = np.random.default_rng(5)
    c = _system(D([2.0, 3.0]), 2 * rotation(0.4))
    oc = orbit_cocycle(c, "0110")
    ps = {i: np.eye(2) + 0.05 * rng.normal(size=(2, 2)) for i in range(4)}
    out = apply_plan(oc, PerturbationPlan(oc.word, ps, 1.0))
    back = apply_plan(out, PerturbationPlan(oc.word, {i: np.linalg.inv(p) for i, p in ps.items()}, 1.0))
    assert np.allclose(back.factors, oc.factors, atol=1e-14)
    norms = perturbation_norms(oc, out)
    assert np.allclose(norms, [np.linalg.norm(p - np.eye(2), 2) for p in ps.values()])


def test_perturb_generator_global():
    c = _system(D([2.0, 3.0]), D([3.0, 5.0]))
    with pytest.raises(BudgetExceeded):
        perturb_generator(c, 0, np.eye(2) * 1.3, 0.1)


# ------------------------------------------------------- rotation number

def test_rotation_number_examples():
    assert rotation_number(_fixed(3 * rotation(math.pi / 3))) == pytest.approx(1 / 6)
    assert rotation_number(_fixed(D([2.0, 3.0]))) == pytest.approx(0.0)
    with pytest.raises(ValueError):
        rotation_number(orbit_cocycle(LinearCocycle.from_blocks([[[0.5]]], [[[2.0]]]), "0"))


def test_rotation_number_period_four_matches_sweep():
    c = _system(2 * rotation(0.7), D([2.0, 3.0]), 1.5 * rotation(-1.2) @ D([1.3, 1.0]))
    for word in ("0112", "0212", "0012", "0122"):
        oc = orbit_cocycle(c, word)
        ref = oracles.tracked_rotation_number(oc.block_factors("unstable"))
        assert rotation_number(oc) == pytest.approx(ref, abs=0.02), word


def test_rotation_number_random_systems():
    rng = np.random.default_rng(17)
    for _ in range(20):
        gens = [rotation(rng.uniform(-3, 3)) @ D(rng.uniform(1.1, 3, 2)) @ rotation(rng.uniform(-3, 3))
                for _ in range(2)]
        c = _system(*gens)
        oc = orbit_cocycle(c, "01")
        rho = rotation_number(oc)
        assert rho == pytest.approx(oracles.tracked_rotation_number(oc.block_factors("unstable")), abs=0.02)
        # the lift is additive over repetitions of the period
        assert rotation_number(oc.repeat(3)) == pytest.approx(3 * rho, abs=1e-9)


def test_rotation_number_conformal_additivity():
    c = _system(2 * rotation(0.4), 3 * rotation(1.1))
    assert rotation_number(orbit_cocycle(c, "01")) == pytest.approx((0.4 + 1.1) / (2 * math.pi))


def test_orientation_signs():
    c = _system(D([2.0, -3.0]), D([2.0, 3.0]))
    assert orientation_signs(orbit_cocycle(c, "0110")) == (-1, -1, -1, 1)


def test_arc_orbit_signs():
    oc = orbit_cocycle(_system(D([2.0, 3.0]), D([3.0, 4.0])), "01")
    a = arc_orbit(oc, RotationArc((0, 1), 0.1, signs=(1, -1)), 1.0)
    assert np.allclose(a.factors[0, 1:, 1:], rotation(0.1) @ D([2.0, 3.0]))
    assert np.allclose(a.factors[1, 1:, 1:], rotation(-0.1) @ D([3.0, 4.0]))


# ---------------------------------------------------------- rotation arcs

def test_arc_constant_rejected():
    sd = builtin("rotation-arc")
    with pytest.raises(ValueError, match="arc is constant"):
        rotation_arc_experiment(sd.cocycle, sd.sft, 0, 0.0)


def test_arc_growth_rate_and_threshold():
    sd = builtin("rotation-arc")
    xi = 0.2
    ex = rotation_arc_experiment(sd.cocycle, sd.sft, 0, xi)
    assert abs(ex.m_t - math.ceil(2 * math.pi / xi)) <= 1
    assert ex.slope == pytest.approx(xi / (2 * math.pi), rel=0.02)
    assert ex.eigen_gap_at_t_star <= 1e-6 and ex.imag_at_t_star <= 1e-6
    assert ex.rho_at_t_star == pytest.approx(round(ex.rho_at_t_star))


def test_arc_budget():
    sd = builtin("rotation-arc")
    with pytest.raises(BudgetExceeded):
        rotation_arc_experiment(sd.cocycle, sd.sft, 0, 0.5, eps=0.1)


def test_arc_needs_conformal_marked_block():
    sd = builtin("two-fixed-point")
    with pytest.raises(ValueError):
        rotation_arc_experiment(sd.cocycle, sd.sft, 1, 0.1)


# -------------------------------------------------------------- surgery

def test_split_examples():
    out = split_equal_eigenvalues(_fixed(D([2.0, 2.0])), 0.01, 0.02)
    lam = np.sort(np.linalg.eigvals(_unstable_product(out)).real)
    assert np.allclose(lam, [2.02, 2.04])
    assert unstable_signature(out) == Signature((1, 1))
    with pytest.raises(ValueError):
        split_equal_eigenvalues(_fixed(2 * rotation(0.3)), 0.01, 0.02)
    with pytest.raises(ValueError, match="kill nilpotent first"):
        split_equal_eigenvalues(_fixed(JORDAN), 0.01, 0.02)
    with pytest.raises(ValueError):
        split_equal_eigenvalues(_fixed(D([2.0, 2.0])), 0.01, 0.01)


def _shear_orbit(ratio, period):
    s = ratio / period
    g = 2 * np.array([[1.0, s], [0.0, 1.0]])
    c = _system(g, g)
    return orbit_cocycle(c, PeriodicWord((0,) * (period - 1) + (1,)))


def test_kill_nilpotent_schedule_length():
    oc = _shear_orbit(3.0, 100)
    m = _unstable_product(oc)
    assert m[0, 1] / m[0, 0] == pytest.approx(3.0)
    rep = kill_nilpotent_report(oc, 0.05)
    assert rep.mode == "A2" and rep.required == 60 and len(rep.sites) == 60
    assert max(rep.norms) <= 0.05 * (1 + 1e-12)
    out = _unstable_product(rep.perturbed)
    # direct recomputation: a multiple of the identity up to rounding
    assert abs(out[0, 1]) / abs(out[0, 0]) <= 1e-9
    assert abs(out[1, 0]) / abs(out[0, 0]) <= 1e-9
    assert out[0, 0] == pytest.approx(out[1, 1], rel=1e-9)
    assert perturbation_norms(oc, rep.perturbed).max() <= 0.05 * (1 + 1e-9)


def test_kill_nilpotent_period_too_short():
    oc = _shear_orbit(3.0, 100)
    with pytest.raises(PeriodTooShort) as e:
        kill_nilpotent(oc, 0.01)
    assert e.value.required_period == 300


def test_kill_stretch_mode():
    oc = orbit_cocycle(_system(D([2.0, 2.1]), D([2.0, 2.1])), PeriodicWord((0,) * 9 + (1,)))
    rep = kill_nilpotent_report(oc, 0.1)
    assert rep.mode == "A1"
    assert rep.required == math.ceil(10 * math.log(2.1 / 2) / math.log(1.1))
    lam = np.abs(np.linalg.eigvals(_unstable_product(rep.perturbed)))
    assert lam.max() / lam.min() == pytest.approx(1.0, abs=1e-8)


def test_kill_rejects_complex():
    with pytest.raises(ValueError):
        kill_nilpotent(_fixed(2 * rotation(0.3)), 0.1)


# ---------------------------------------------------------- dense orbits

def test_dense_simple_already_simple():
    c = _system(D([2.0, 3.0]), D([4.0, 7.0]))
    res = make_dense_simple(c, full_shift(2), 2, 0.1)
    assert str(res.word) == "0011"
    assert res.max_factor_norm == 0.0
    assert np.array_equal(res.perturbed.factors, res.original.factors)


def test_dense_simple_tiny_budget():
    sd = builtin("rotation-block")
    with pytest.raises(StageError) as e:
        make_dense_simple(sd.cocycle, sd.sft, 2, 1e-9)
    assert e.value.stage == "rotation"


def test_dense_simple_rotation_block_stages():
    sd = builtin("rotation-block")
    res = make_dense_simple(sd.cocycle, sd.sft, 2, 0.2)
    assert [s["stage"] for s in res.stages] == ["rotation", "kill_nilpotent", "split"]
    assert has_simple_spectrum(res.perturbed)
    assert unstable_signature(res.perturbed) == Signature((1, 1))


# ------------------------------------------------------- forcing signatures

def test_force_complex_on_real_orbit():
    oc = _fixed(D([2.0, 2.05]))
    log = []
    got = force_complex(oc, 0.1, log=log)
    assert got is not None
    pert, margin = got
    assert unstable_signature(pert) == Signature((2,)) and margin > 0
    assert perturbation_norms(oc, pert).max() <= 0.1 * (1 + 1e-9)
    assert log == ["rotation"]


def test_force_real_simple_nilpotent():
    oc = orbit_cocycle(builtin("nilpotent").cocycle, "0")
    log = []
    pert, margin = force_real_simple(orbit_cocycle(builtin("nilpotent").cocycle, "0001"), 0.1, log=log)
    assert log == ["kill_nilpotent+split"]
    assert unstable_signature(pert) == Signature((1, 1)) and margin > 0
    assert unstable_signature(oc) == Signature((2,))


def test_force_as_is():
    log = []
    oc = _fixed(D([2.0, 3.0]))
    pert, _ = force_real_simple(oc, 0.1, log=log)
    assert pert is oc and log == ["as-is"]


# -------------------------------------------------------------- explosion

def test_explosion_n3():
    sd = builtin("two-fixed-point")
    res = signature_explosion(sd.cocycle, sd.sft, "1", "0", 3, 0.1, seed=0, period_cap=12)
    assert len(res.P1) == 3 and len(res.P2) == 3
    for mo in res.P1 + res.P2:
        assert mo.margin > 0
        assert unstable_signature(mo.perturbed) == mo.signature
        assert signature_robustness_margin(mo.perturbed, 100, 123) > 0


def test_explosion_n1_and_errors():
    sd = builtin("two-fixed-point")
    res = signature_explosion(sd.cocycle, sd.sft, "1", "0", 1, 0.1)
    assert [str(m.word) for m in res.P1] == ["1"] and [str(m.word) for m in res.P2] == ["0"]
    with pytest.raises(ValueError):
        signature_explosion(sd.cocycle, sd.sft, "0", "0", 3, 0.1)
    with pytest.raises(ValueError, match="period cap 2"):
        signature_explosion(sd.cocycle, sd.sft, "1", "0", 10, 0.1, period_cap=2)


# -------------------------------------------------------------- dichotomy

def test_dichotomy_case_labels():
    assert dichotomy_case(["complex", "complex"]) == "1"
    assert dichotomy_case(["complex", "simple"]) == "2"
    assert dichotomy_case(["simple"]) == "3a"
    assert dichotomy_case(["simple", "equal", "nilpotent"]) == "3b"
    assert dichotomy_case(["nilpotent", "simple"]) == "3c"


def test_dichotomy_dominated():
    sd = builtin("golden-mixed")
    rep = classify_dichotomy(sd.cocycle, sd.sft)
    assert rep.outcome == "dominated" and rep.dims == (1, 1, 1) and rep.margin > 0


def test_dichotomy_equal_eigenvalues():
    c = _system(D([2.0, 2.0]), D([3.0, 3.0]))
    rep = classify_dichotomy(c, golden_mean_shift(), 0.1)
    assert rep.outcome == "cycle" and rep.case == "3b"
    assert rep.mechanism_p == "kill_nilpotent+split"
    assert rep.perturbation_norm <= 0.1 * (1 + 1e-9)
    rec = rep.as_record()
    assert rec["sig_p"] == "(1,1)" and rec["sig_q"] == "(2)"


def test_dichotomy_rotation_case1():
    c = _system(2 * rotation(0.3), 2.5 * rotation(0.8))
    rep = classify_dichotomy(c, golden_mean_shift(), 0.1)
    assert rep.case == "1" and rep.outcome == "cycle"
    assert rep.mechanism_q == "as-is"
