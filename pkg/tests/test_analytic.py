import pytest
from hypothesis import given, settings, strategies as st

from ipersea.analytic import (AnalyticInputs, DegenerateInputs, analytic_fp_random,
                              analytic_fp_trusted, analytic_path_length,
                              expected_malicious_friends, malice_sequence)

HAMSTER = AnalyticInputs(e_p=2 * 16631 / 2426, a_h=1.0)
FACEBOOK = AnalyticInputs(e_p=2 * 1545686 / 63731, a_h=1.0)


def oracle_path_length(e_p, a_h, alpha=5, beta=7, l_c=0.001, cap=50):
    """Written from the recursion directly, without the library's helpers."""
    r = a_h / e_p
    m = alpha * beta * r + (1 - alpha * r) * beta * r
    still_failing = 1.0
    for j in range(1, cap + 1):
        still_failing *= min(1.0, max(0.0, m / (alpha * beta)))
        if still_failing <= l_c:
            return j
        m = m + (alpha - m / beta) * beta * r
    return cap


def test_hamsterster_hand_values():
    steps = malice_sequence(HAMSTER, 4)
    assert [round(s.m, 3) for s in steps] == pytest.approx([2.877, 5.220, 7.392, 9.406], abs=0.002)
    assert steps[0].q == pytest.approx(0.0822, abs=0.001)
    assert steps[3].P == pytest.approx(6.96e-4, rel=0.01)
    assert analytic_path_length(HAMSTER) == (4, False)
    assert oracle_path_length(HAMSTER.e_p, 1.0) == 4
    assert analytic_fp_trusted(HAMSTER) == pytest.approx(0.0822, abs=0.001)


def test_facebook_hand_values():
    assert FACEBOOK.e_p == pytest.approx(48.51, abs=0.01)
    assert analytic_fp_trusted(FACEBOOK) == pytest.approx(0.0243, abs=0.001)
    assert analytic_fp_random(FACEBOOK) == pytest.approx(0.0440, abs=0.001)


def test_no_attackers():
    z = AnalyticInputs(e_p=10, a_h=0)
    assert all(s.m == 0 and s.q == 0 and s.P == 0 for s in malice_sequence(z, 10))
    assert analytic_path_length(z).hops == 1
    assert analytic_fp_trusted(z) == 0 and analytic_fp_random(z) == 0
    assert expected_malicious_friends(z) == 0


def test_degenerate_and_invalid():
    with pytest.raises(DegenerateInputs):
        analytic_fp_random(AnalyticInputs(e_p=2, a_h=3))
    with pytest.raises(DegenerateInputs):
        analytic_path_length(AnalyticInputs(e_p=2, a_h=3))
    with pytest.raises(ValueError):
        AnalyticInputs(e_p=0, a_h=1)
    with pytest.raises(ValueError):
        AnalyticInputs(e_p=5, a_h=1, l_c=1.5)
    eq = AnalyticInputs(e_p=4, a_h=4)
    assert analytic_fp_random(eq) == analytic_fp_trusted(eq)


def test_cap_reported():
    heavy = AnalyticInputs(e_p=4, a_h=4)
    assert analytic_path_length(heavy, max_iter=20) == (20, True)


inputs = st.builds(
    lambda e_p, frac, alpha, beta, l_c: AnalyticInputs(e_p, e_p * frac, alpha, beta, l_c),
    st.floats(1.0, 200.0), st.floats(0.0, 1.0), st.integers(1, 10), st.integers(1, 12),
    st.floats(1e-6, 0.5))


@settings(max_examples=300, deadline=None)
@given(inputs)
def test_properties(x):
    steps = malice_sequence(x, 30)
    assert all(0.0 <= s.q <= 1.0 for s in steps)
    assert all(a.m <= b.m + 1e-9 for a, b in zip(steps, steps[1:]))
    assert all(a.P >= b.P for a, b in zip(steps, steps[1:]))
    assert analytic_fp_random(x) >= analytic_fp_trusted(x) - 1e-12
    assert analytic_path_length(x).hops == oracle_path_length(x.e_p, x.a_h, x.alpha, x.beta, x.l_c)


@settings(max_examples=100, deadline=None)
@given(inputs, st.floats(1e-6, 0.5))
def test_path_length_monotone_in_threshold(x, other):
    lo, hi = sorted((x.l_c, other))
    strict = AnalyticInputs(x.e_p, x.a_h, x.alpha, x.beta, lo)
    loose = AnalyticInputs(x.e_p, x.a_h, x.alpha, x.beta, hi)
    assert analytic_path_length(loose).hops <= analytic_path_length(strict).hops
