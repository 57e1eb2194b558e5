import math

import pytest

import wflevy


def reference_env(a):
    return wflevy.Environment(0.8, [(a, 0.8)] if a else [])


def test_environment():
    env = wflevy.Environment(0.8, [(0.1, 0.8)])
    assert env.total_mass == pytest.approx(0.8)
    assert env.moment(1) == pytest.approx(0.08)
    assert env.tau(2, 3) == pytest.approx(-0.176)
    with pytest.raises(ValueError):
        wflevy.Environment(0.8, [(1.5, 0.8)])


def test_stationary_law():
    pi = wflevy.compute_pi(reference_env(0.1), 64)
    assert len(pi.pi) == 64
    assert pi(2) / pi(1) == pytest.approx(0.8, rel=1e-14)
    assert pi.pi1_bracket.lower <= pi.pi1_bracket.upper
    with pytest.raises(wflevy.CutoffTooSmall):
        wflevy.compute_pi(wflevy.Environment(3.0, [(0.5, 3.0)]), 4)


def test_coefficients():
    ratios = wflevy.b_ratios(reference_env(0.1), 60)
    assert ratios[1] == pytest.approx(0.36, rel=1e-13)
    b = wflevy.normalize_b(ratios)
    assert b is not None
    assert abs(b[0] - 0.6830193) < 5e-7
    assert wflevy.normalize_b(wflevy.b_ratios(wflevy.Environment(5.0, [(-0.9, 5.0)]), 60)) is None
    ode = wflevy.extract_b_ode(reference_env(0.1), 16)
    assert abs(ode[1] - 0.2458870) < 1e-6


def test_fixation_series():
    series = wflevy.make_series(reference_env(0.0), 32)
    value, err = series.h(0.5)
    assert abs(value - wflevy.closed_form_no_env(0.5, 0.8)) <= err + 1e-6
    assert series.h(0.0)[0] == 0.0
    assert wflevy.closed_form_no_env(0.5, 0.8) == pytest.approx(math.expm1(0.4) / math.expm1(0.8))


def test_monte_carlo_is_reproducible():
    env = reference_env(0.1)
    a = wflevy.estimate_fixation(env, 0.5, 200, seed=3)
    b = wflevy.estimate_fixation(env, 0.5, 200, seed=3, threads=2)
    assert a.h == b.h
    m, se = wflevy.estimate_moment(env, 0.3, 2, 0.0, 10)
    assert m == pytest.approx(0.09)
    assert se == 0.0
    d = wflevy.estimate_duality_coeffs(env, 1, 1, 0.0, 10)
    assert d["R"] == {(1, 1): (1.0, 0.0)}


def test_validation_subset():
    results = wflevy.run_validation([2, 3])
    assert [r.id for r in results] == [2, 3]
    assert all(r.passed for r in results)
