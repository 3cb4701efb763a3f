import itertools
import json

import numpy as np
import pytest

from theta_forge.errors import DomainError
from theta_forge.forms import theta_constant_product
from theta_forge.identities import (
    HESSIAN_BRIDGE,
    IdentityReport,
    check_exact_layer,
    check_gsm_backward,
    check_gsm_forward,
    check_jacobi,
    check_main_theorem,
    check_omega_consistency,
    conditioned_words,
    reports_to_json,
    run_suite,
)
from theta_forge.symplectic import (
    Characteristic,
    even_characteristics,
    odd_characteristics,
    sample_siegel_point,
)
from theta_forge.theta import TruncationPolicy


def test_gsm_forward_example_g1(rng):
    t = sample_siegel_point(1, rng)
    rep = check_gsm_forward(Characteristic((1,), (1,)), t)
    assert rep.passed and rep.residual < 1e-10
    assert rep.identity_name == "gsm_forward"


def test_gsm_forward_rejects_even(tau_g2):
    with pytest.raises(DomainError):
        check_gsm_forward(Characteristic((0, 0), (0, 0)), tau_g2)


def test_gsm_exhaustive_g2(rng):
    t = sample_siegel_point(2, rng)
    for n in odd_characteristics(2):
        assert check_gsm_forward(n, t).residual < 1e-10
    for eps in itertools.product((0, 1), repeat=2):
        for delta in itertools.product((0, 1), repeat=2):
            assert check_gsm_backward(eps, delta, t).residual < 1e-10


def test_gsm_round_trip_consistency(rng):
    # composing the two directions closes on the A-form values at genus 1
    t = sample_siegel_point(1, rng)
    f = check_gsm_forward(Characteristic((1,), (1,)), t)
    b1 = check_gsm_backward((1,), (0,), t)
    b2 = check_gsm_backward((0,), (1,), t)
    assert f.passed and b1.passed and b2.passed


def test_jacobi_g1_constant(rng):
    taus = [sample_siegel_point(1, rng) for _ in range(5)]
    rep = check_jacobi(1, taus)
    assert rep.passed
    fitted = complex(*rep.params["fitted_constant"])
    assert fitted == pytest.approx(-np.pi, rel=1e-9)
    assert rep.params["constant_error"] < 1e-9


def test_jacobi_g2_ratio_constancy(rng):
    taus = [sample_siegel_point(2, rng) for _ in range(4)]
    rep = check_jacobi(2, taus)
    assert rep.passed
    assert rep.params["pairs"] == 15
    # quartic ratio magnitude is the square of the one-dimensional constant
    assert rep.params["mean_ratio_magnitude"] == pytest.approx(np.pi**2, rel=1e-7)


def test_jacobi_fit_stable_under_policy_refinement(rng):
    taus = [sample_siegel_point(1, rng) for _ in range(3)]
    c_default = complex(*check_jacobi(1, taus).params["fitted_constant"])
    tight = TruncationPolicy(target_tol=1e-14, adaptive=False)
    c_tight = complex(*check_jacobi(1, taus, policy=tight).params["fitted_constant"])
    assert abs(c_default - c_tight) < 1e-9


def test_jacobi_rejects_higher_genus(rng):
    with pytest.raises(DomainError):
        check_jacobi(3, [sample_siegel_point(3, rng)])


def test_main_theorem_g2_k1(rng):
    taus = [sample_siegel_point(2, rng) for _ in range(3)]
    pairs = [((0, 0), (1, 0))]
    rep = check_main_theorem(2, 1, pairs, taus)
    assert rep.passed
    fitted = complex(*rep.params["fitted_constant"])
    assert fitted == pytest.approx(-1j * np.pi / 8, rel=1e-9)
    assert rep.params["constant_error"] < 1e-9


def test_main_theorem_g3_k2(rng):
    taus = [sample_siegel_point(3, rng) for _ in range(3)]
    pairs = [((0, 0, 0), (1, 1, 0)), ((1, 0, 0), (0, 1, 0))]
    rep = check_main_theorem(3, 2, pairs, taus)
    assert rep.passed
    expected = (-1j * np.pi / 16) ** 2 / 2
    assert complex(*rep.params["fitted_constant"]) == pytest.approx(expected, rel=1e-8)


def test_main_theorem_constant_universal(rng):
    taus = [sample_siegel_point(2, rng) for _ in range(3)]
    cs = []
    for pairs in ([((0, 0), (1, 0))], [((0, 1), (1, 1))], [((1, 0), (0, 1))]):
        rep = check_main_theorem(2, 1, pairs, taus)
        assert rep.passed
        cs.append(complex(*rep.params["fitted_constant"]))
    spread = max(abs(c - cs[0]) for c in cs)
    assert spread < 1e-9


def test_main_theorem_fit_stable_under_policy_refinement(rng):
    taus = [sample_siegel_point(2, rng) for _ in range(2)]
    pairs = [((0, 0), (1, 0))]
    c_default = complex(
        *check_main_theorem(2, 1, pairs, taus).params["fitted_constant"]
    )
    tight = TruncationPolicy(target_tol=1e-14, adaptive=False)
    c_tight = complex(
        *check_main_theorem(2, 1, pairs, taus, policy=tight).params["fitted_constant"]
    )
    assert abs(c_default - c_tight) < 1e-9


def test_main_theorem_validation(rng):
    taus = [sample_siegel_point(2, rng)]
    with pytest.raises(DomainError):
        check_main_theorem(2, 2, [((0, 0), (1, 0)), ((0, 0), (0, 1))], taus)
    with pytest.raises(DomainError):
        check_main_theorem(2, 1, [((0, 0), (1, 0)), ((0, 0), (0, 1))], taus)
    with pytest.raises(DomainError):
        check_main_theorem(2, 1, [((0, 0), (0, 0))], taus)  # degenerate


def test_omega_consistency_checks(rng):
    from theta_forge.forms import pairing_bracket, partial_bracket

    for g in (2, 3):
        t = sample_siegel_point(g, rng)
        evens = even_characteristics(g)
        F = theta_constant_product(g, evens[0])
        H = theta_constant_product(g, evens[1])
        rep = check_omega_consistency(g, F, H, t)
        assert rep.passed and rep.residual < 1e-9
        # identical inputs: both sides vanish, up to cancellation noise
        # measured against the scale of one uncancelled term
        from theta_forge.multilinear import star_product

        same_lhs = pairing_bracket(F.power(g - 1), F.power(g - 1), g - 1, t)
        first = partial_bracket(F.power(g - 1), 1, t)
        rest = partial_bracket(F.power(g - 1), g - 2, t)
        term_scale = star_product(first, rest).max_abs()
        assert same_lhs.max_abs() <= 1e-13 * max(1.0, term_scale)


def test_exact_layer_clean(rng):
    reports = check_exact_layer(instances=40, seed=3)
    assert len(reports) == 6
    for rep in reports:
        assert rep.passed and rep.residual == 0.0
        assert rep.params["failures"] == 0


def test_conditioned_words_deterministic(rng):
    t = sample_siegel_point(2, rng)
    a = conditioned_words("Gamma(2)", 2, [t], 3, 5)
    b = conditioned_words("Gamma(2)", 2, [t], 3, 5)
    assert a == b


# ---------------------------------------------------------------------------
# suite driver


def test_run_suite_genus_validation():
    with pytest.raises(DomainError):
        run_suite([5], seed=0)


def test_run_suite_filter(rng):
    reports = run_suite([1], seed=3, name_filter="gsm_*")
    assert reports
    assert all(r.identity_name.startswith("gsm_") for r in reports)


def test_run_suite_deterministic_json():
    a = run_suite([1], seed=11)
    b = run_suite([1], seed=11)
    assert reports_to_json(a) == reports_to_json(b)


def test_run_suite_threaded_matches_sequential():
    a = run_suite([1], seed=5, max_workers=1)
    b = run_suite([1], seed=5, max_workers=4)
    assert reports_to_json(a) == reports_to_json(b)


def test_report_serialization_contract():
    rep = IdentityReport(
        identity_name="x",
        genus=2,
        params={"a": 1},
        residual=1e-9,
        tolerance=1e-8,
        passed=True,
        runtime_ms=12.5,
        seed=7,
    )
    payload = json.loads(reports_to_json([rep], config={"genus": 2}))
    assert payload["schema"] == "theta-forge/report/1"
    entry = payload["reports"][0]
    assert set(entry) == {
        "identity_name",
        "genus",
        "params",
        "residual",
        "tolerance",
        "passed",
        "runtime_ms",
        "seed",
    }
    assert entry["runtime_ms"] == 0.0  # zeroed for byte-stable output
    timed = json.loads(reports_to_json([rep], embed_timings=True))
    assert timed["reports"][0]["runtime_ms"] == 12.5


def test_report_pass_iff_residual_below_tolerance():
    reports = run_suite([1], seed=2)
    for rep in reports:
        assert rep.passed == (rep.residual < rep.tolerance)


def test_bridge_constant_value():
    assert HESSIAN_BRIDGE == pytest.approx(8j * np.pi)
