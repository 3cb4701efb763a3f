import itertools
from fractions import Fraction

import numpy as np
import pytest

from theta_forge.errors import DomainError, NumericalDegeneracyError
from theta_forge.symplectic import (
    Characteristic,
    SiegelPoint,
    SymplecticElement,
    act_on_char,
    act_on_tau,
    all_characteristics,
    char_set_predicates,
    essentially_independent,
    even_characteristics,
    generate_subgroup_element,
    membership,
    odd_characteristics,
    parity,
    phi_factor,
    phi_rational,
    sample_siegel_point,
    symplectic_form,
)

from oracles import brute_essentially_independent, classify_triples


def _inversion(g):
    eye = np.eye(g, dtype=int)
    zero = np.zeros((g, g), dtype=int)
    return SymplecticElement.from_blocks(zero, -eye, eye, zero)


def _upper(B):
    B = np.asarray(B)
    g = B.shape[0]
    return SymplecticElement.from_blocks(np.eye(g, dtype=int), B, np.zeros((g, g), dtype=int), np.eye(g, dtype=int))


# ---------------------------------------------------------------------------
# construction and invariants


def test_symplectic_relation_enforced():
    with pytest.raises(DomainError):
        SymplecticElement(np.eye(4, dtype=int) * 2)
    eye = SymplecticElement.identity(2)
    J = symplectic_form(2)
    assert (eye.mat.T @ J @ eye.mat == J).all()


def test_blocks_and_inverse():
    g = 2
    gamma = generate_subgroup_element("Gamma(2)", g, 5, 6)
    assert gamma.A.shape == (g, g)
    prod = gamma @ gamma.inverse()
    assert prod == SymplecticElement.identity(g)


def test_siegel_point_validation():
    with pytest.raises(DomainError):
        SiegelPoint(np.array([[1.0 + 0j, 2.0], [2.1, 3.0]]) + 1j * np.eye(2))
    with pytest.raises(DomainError):
        SiegelPoint(np.array([[1.0 - 1j]]))
    p = SiegelPoint(np.array([[0.25 + 1j]]))
    assert p.g == 1


def test_json_round_trips(rng):
    gamma = generate_subgroup_element("Gamma(2,4)", 2, 9, 5)
    assert SymplecticElement.from_json(gamma.to_json()) == gamma
    point = sample_siegel_point(3, rng)
    back = SiegelPoint.from_json(point.to_json())
    assert np.allclose(back.tau, point.tau)


# ---------------------------------------------------------------------------
# actions


def test_act_on_tau_identity_and_inversion_fixed_point():
    tau = SiegelPoint(np.array([[1j]]))
    assert np.allclose(act_on_tau(SymplecticElement.identity(1), tau).tau, tau.tau)
    assert np.allclose(act_on_tau(_inversion(1), tau).tau, [[1j]])


def test_act_on_tau_composition(rng):
    for g in (1, 2, 3):
        t = sample_siegel_point(g, rng)
        g1 = generate_subgroup_element("Gamma(2)", g, 31, 5)
        g2 = generate_subgroup_element("Gamma(2)", g, 32, 5)
        lhs = act_on_tau(g1 @ g2, t).tau
        rhs = act_on_tau(g1, act_on_tau(g2, t)).tau
        assert np.max(np.abs(lhs - rhs)) < 1e-10


def test_act_on_tau_preserves_invariants(rng):
    t = sample_siegel_point(2, rng)
    gamma = generate_subgroup_element("Gamma(2)", 2, 77, 6)
    moved = act_on_tau(gamma, t)
    assert np.max(np.abs(moved.tau - moved.tau.T)) < 1e-12
    assert np.all(np.linalg.eigvalsh(moved.tau.imag) > 0)


def test_act_on_tau_degenerate_denominator():
    tau = SiegelPoint(np.diag([1e-14j, 1j]))
    with pytest.raises(NumericalDegeneracyError):
        act_on_tau(_inversion(2), tau)


def test_act_on_char_inversion_example():
    m = Characteristic((1,), (0,))
    assert act_on_char(_inversion(1), m) == Characteristic((0,), (1,))


def test_act_on_char_trivial_on_level_two(rng):
    for g in (1, 2, 3):
        gamma = generate_subgroup_element("Gamma(2)", g, 13, 6)
        for m in all_characteristics(g):
            assert act_on_char(gamma, m) == m


def _generic_words(g, seed, length=6):
    rng = np.random.default_rng(seed)
    eye = np.eye(g, dtype=int)
    zero = np.zeros((g, g), dtype=int)
    gens = [_inversion(g)]
    for i in range(g):
        E = np.zeros((g, g), dtype=int)
        E[i, i] = 1
        gens.append(_upper(E))
        gens.append(SymplecticElement.from_blocks(eye, zero, E, eye))
    w = SymplecticElement.identity(g)
    for _ in range(length):
        w = w @ gens[int(rng.integers(len(gens)))]
    return w


def test_act_on_char_preserves_parity_and_composes():
    for g in (1, 2):
        for seed in range(6):
            e1 = _generic_words(g, seed)
            e2 = _generic_words(g, 100 + seed)
            for m in all_characteristics(g):
                assert parity(act_on_char(e1, m)) == parity(m)
                assert act_on_char(e1 @ e2, m) == act_on_char(e1, act_on_char(e2, m))


# ---------------------------------------------------------------------------
# parity and characteristic enumeration


def test_parity_values():
    assert parity(Characteristic((0,), (0,))) == 0
    assert parity(Characteristic((1,), (1,))) == 1
    assert len(odd_characteristics(2)) == 6
    assert len(even_characteristics(2)) == 10
    assert len(all_characteristics(3)) == 64
    assert len(odd_characteristics(3)) == 28


def test_characteristic_validation_and_addition():
    with pytest.raises(DomainError):
        Characteristic((2,), (0,))
    with pytest.raises(DomainError):
        Characteristic((0, 1), (0,))
    s = Characteristic((1, 0), (1, 1)) + Characteristic((1, 1), (0, 1))
    assert s == Characteristic((0, 1), (1, 0))


# ---------------------------------------------------------------------------
# membership


def test_identity_in_all_groups():
    eye = SymplecticElement.identity(2)
    for grp in ("Sp", "Gamma(2)", "Gamma(4)", "Gamma(2,4)", "Gamma(4,8)"):
        assert membership(eye, grp)


def test_upper_translation_membership_depends_on_diagonal():
    # B = 2S lands in the level-(2,4) group exactly when diag(B) is 0 mod 4
    S_odd_diag = np.array([[1, 0], [0, 1]])
    S_even_diag = np.array([[2, 1], [1, 2]])
    gamma_odd = _upper(2 * S_odd_diag)
    gamma_even = _upper(2 * S_even_diag)
    assert membership(gamma_odd, "Gamma(2)")
    assert not membership(gamma_odd, "Gamma(2,4)")
    assert membership(gamma_even, "Gamma(2,4)")


def test_containment_chain():
    for g in (1, 2, 3):
        for seed in range(4):
            e48 = generate_subgroup_element("Gamma(4,8)", g, seed, 5)
            assert membership(e48, "Gamma(2,4)")
            assert membership(e48, "Gamma(2)")
            e24 = generate_subgroup_element("Gamma(2,4)", g, seed, 5)
            assert membership(e24, "Gamma(2)")


def test_starred_membership_of_deep_words(rng):
    # words of level-(4,8) generators measure a trivial squared multiplier
    from theta_forge.identities import conditioned_words

    for g in (1, 2):
        base = sample_siegel_point(g, rng)
        gamma = conditioned_words("Gamma(4,8)", g, [base], 1, 3, length=3)[0]
        assert membership(gamma, "Gamma(2,4)*", tau=base)


def test_unknown_group_rejected():
    with pytest.raises(DomainError):
        membership(SymplecticElement.identity(1), "Gamma(3,5)")


# ---------------------------------------------------------------------------
# generators


def test_generated_words_deterministic_and_member():
    a = generate_subgroup_element("Gamma(2,4)", 2, 11, 7)
    b = generate_subgroup_element("Gamma(2,4)", 2, 11, 7)
    assert a == b
    assert membership(a, "Gamma(2,4)")
    assert generate_subgroup_element("Gamma(2)", 2, 1, 0) == SymplecticElement.identity(2)


def test_generator_pool_rejects_unknown_group():
    with pytest.raises(DomainError):
        generate_subgroup_element("Gamma(8,16)", 2, 0, 3)


# ---------------------------------------------------------------------------
# multiplier phase


def test_phi_identity_is_one():
    eye = SymplecticElement.identity(2)
    for m in all_characteristics(2):
        assert phi_factor(m, eye) == pytest.approx(1.0)


def test_phi_translation_hand_values():
    t2 = _upper(np.array([[2]]))
    assert phi_rational(Characteristic((0,), (0,)), t2) == 0
    assert phi_rational(Characteristic((1,), (0,)), t2) == Fraction(1, 4)
    assert phi_factor(Characteristic((1,), (0,)), t2) == pytest.approx(1j)


def test_phi_trivial_on_deep_level():
    for g in (1, 2, 3):
        for seed in range(3):
            gamma = generate_subgroup_element("Gamma(4,8)", g, 40 + seed, 6)
            for m in all_characteristics(g):
                assert abs(phi_factor(m, gamma) - 1.0) < 1e-12


# ---------------------------------------------------------------------------
# characteristic-set predicates


def test_predicates_require_three():
    odds = odd_characteristics(2)
    with pytest.raises(DomainError):
        char_set_predicates(odds[:2])


def test_pair_essential_independence():
    odds = odd_characteristics(2)
    assert essentially_independent([odds[0], odds[1]])
    assert not essentially_independent([odds[0], odds[0]])


def test_azygetic_triple_example():
    trip = [
        Characteristic((1, 0), (1, 0)),
        Characteristic((0, 1), (0, 1)),
        Characteristic((1, 1), (0, 1)),
    ]
    assert all(t.is_odd for t in trip)
    res = char_set_predicates(trip)
    assert res["azygetic"] and not res["syzygetic"]


def test_exhaustive_triple_classification_matches_brute_force():
    odds = odd_characteristics(2)
    counts = {"azygetic": 0, "syzygetic": 0, "neither": 0}
    for trip in itertools.combinations(odds, 3):
        res = char_set_predicates(trip)
        brute = classify_triples(trip)
        assert res["azygetic"] == (brute == {0})
        assert res["syzygetic"] == (brute == {1})
        if res["azygetic"]:
            counts["azygetic"] += 1
        elif res["syzygetic"]:
            counts["syzygetic"] += 1
        else:
            counts["neither"] += 1
        assert res["essentially_independent"] == brute_essentially_independent(trip)
    assert counts["azygetic"] + counts["syzygetic"] + counts["neither"] == 20
    # triples of distinct odd characteristics in genus 2 are never mixed
    assert counts["neither"] == 0


# ---------------------------------------------------------------------------
# base-point sampling


def test_sample_siegel_point_conditioning(rng):
    for g in (1, 2, 3, 4):
        for _ in range(5):
            p = sample_siegel_point(g, rng)
            assert np.min(np.linalg.eigvalsh(p.tau.imag)) >= 0.5
            assert np.max(np.abs(p.tau.real)) <= 0.5
