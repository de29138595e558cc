import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from thinprimes import regvar
from thinprimes.errors import ConfigError, NumericDomainError
from thinprimes.regvar import FunctionPair, ModelFunction

MODELS = [ModelFunction(Fraction(3, 2)), ModelFunction(Fraction(6, 5), 0.5),
          ModelFunction(Fraction(11, 10), 1.0), ModelFunction(Fraction(1), 2.0),
          ModelFunction(Fraction(9, 5), 0.0)]


def test_inverse_exact_power_and_identity():
    assert regvar.inverse_phi(ModelFunction(Fraction(3, 2)), 8.0) == pytest.approx(4.0, rel=1e-15)
    assert regvar.inverse_phi(ModelFunction(Fraction(3, 2)), 8, "extended") == 4
    # h(x) = x is excluded, but c = 1 with a log factor is allowed
    with pytest.raises(ConfigError):
        ModelFunction(Fraction(1), 0.0)


def test_inverse_forward_check():
    f = ModelFunction(Fraction(11, 10), 1.0)
    x = regvar.inverse_phi(f, 1000.0)
    assert abs(f.h(x) - 1000.0) <= 1e-14 * 1000
    xe = regvar.inverse_phi(f, 1000, "extended")
    with mpmath.workprec(128):
        assert abs(f.h_mp(xe) - 1000) <= mpmath.mpf("1e-28") * 1000
    assert float(xe) == pytest.approx(x, rel=1e-14)


@pytest.mark.parametrize("f", MODELS, ids=lambda f: f"c={f.c},A={f.A}")
@settings(max_examples=60, deadline=None)
@given(e=st.floats(min_value=0.5, max_value=15.0))
def test_round_trip(f, e):
    y = max(10.0**e, f.y_min * 1.01)
    x = regvar.inverse_phi(f, y)
    assert abs(f.h(x) / y - 1) <= 1e-12
    assert abs(f.h(float(f.phi(y))) / y - 1) <= 1e-12


def test_domain_errors():
    f = ModelFunction(Fraction(6, 5), 0.5)
    with pytest.raises(NumericDomainError):
        regvar.inverse_phi(f, f.y_min / 2)
    with pytest.raises(ConfigError):
        ModelFunction(Fraction(2))
    with pytest.raises(ConfigError):
        ModelFunction(Fraction(3, 2), -1.0)


def test_power_rule_derivatives():
    f = ModelFunction(Fraction(3, 2))
    for y in (2.0, 100.0, 1e6):
        assert regvar.phi_derivative(f, 1, y) == pytest.approx(2 / 3 * y ** (-1 / 3), rel=1e-13)
        assert regvar.phi_derivative(f, 2, y) == pytest.approx(-2 / 9 * y ** (-4 / 3), rel=1e-13)
    with pytest.raises(ConfigError):
        regvar.phi_derivative(f, 5, 10.0, d=2)


def test_derivative_finite_difference_example():
    f = ModelFunction(Fraction(6, 5), 0.5)
    h = 1e-3 * 1e4
    fd = (regvar.inverse_phi(f, 1e4 + h) - regvar.inverse_phi(f, 1e4 - h)) / (2 * h)
    assert regvar.phi_derivative(f, 1, 1e4) == pytest.approx(fd, rel=1e-6)


@pytest.mark.parametrize("f", MODELS, ids=lambda f: f"c={f.c},A={f.A}")
def test_series_matches_numerical_derivatives(f):
    for x in (1e2, 1e4, 1e7):
        x = max(x, f.y_min * 2)
        for k in range(6):
            s = regvar.phi_derivative(f, k, x)
            n = regvar.phi_derivative(f, k, x, mode="fd")
            assert s == pytest.approx(n, rel=1e-5), (k, x)


@pytest.mark.parametrize("f", MODELS, ids=lambda f: f"c={f.c},A={f.A}")
def test_derivative_scale_relation(f):
    """phi^(k)(x) x^k / (phi(x) sigma(x)) stays in a fixed band for k >= 1."""
    xs = np.geomspace(1e2, 1e8, 25)
    for k in range(1, 5):
        r = np.array([abs(regvar.phi_derivative(f, k, x)) * x**k / (f.phi(x) * f.sigma(x)) for x in xs])
        C = max(r.max(), 1 / r.min())
        assert np.all(r > 0) and C < 50, (k, C)


def test_sigma_doubling():
    for f in MODELS:
        xs = np.geomspace(1e2, 1e8, 30)
        q = f.sigma(2 * xs) / f.sigma(xs)
        assert np.all((q > 0.5) & (q <= 1.0 + 1e-15))


def test_psi_examples(pair32):
    assert regvar.window_psi(pair32, 2.0) == pytest.approx(3 ** (2 / 3) - 2 ** (2 / 3), rel=1e-14)
    assert regvar.window_psi(pair32, 2.0) == pytest.approx(0.4927, abs=1e-4)
    ratio = regvar.window_psi(pair32, 1e6) / regvar.phi_derivative(pair32.h2, 1, 1e6)
    assert abs(ratio - 1) <= 1e-4


def test_psi_derivatives_against_mpmath(pair32):
    for k in (1, 2, 3):
        num = float(mpmath.diff(lambda t: pair32.psi_mp(t), mpmath.mpf(50), k))
        assert regvar.window_psi(pair32, 50.0, k) == pytest.approx(num, rel=1e-8)


@pytest.mark.parametrize("c2,A2", [(Fraction(3, 2), 0.0), (Fraction(6, 5), 0.5), (Fraction(1), 2.0),
                                   (Fraction(19, 10), 0.0)])
def test_psi_bounds_and_trend(c2, A2):
    pair = FunctionPair(ModelFunction(Fraction(3, 2)), ModelFunction(c2, A2))
    xs = np.geomspace(pair.x_psi, 1e9, 60)
    psi = pair.psi(xs)
    assert np.all(psi > 0) and np.all(psi <= 0.5 + 1e-15)
    ratio = np.array([pair.psi(x) / regvar.phi_derivative(pair.h2, 1, x) for x in xs[xs > 10]])
    dev = np.abs(ratio - 1)
    assert dev[-1] < dev[0] and dev[-1] < 1e-6
    with pytest.raises(NumericDomainError, match="x_psi"):
        regvar.window_psi(pair, pair.x_psi / 2)


def test_psi_quadrature_against_mpmath():
    pair = FunctionPair(ModelFunction(Fraction(3, 2)), ModelFunction(Fraction(6, 5), 0.5))
    for x in (50.0, 1e4, 1e8):
        assert float(pair.psi(x)) == pytest.approx(float(pair.psi_mp(x)), rel=1e-12)


def test_exponent_examples():
    r = regvar.check_exponent_conditions(1, 1, 1, "thm3")
    assert r["admissible"] and r["max_epsilon_exact"] == Fraction(1, 84)
    r = regvar.check_exponent_conditions(1, Fraction(100, 105), Fraction(100, 105), "section1")
    assert r["admissible"] and r["max_epsilon"] == math.inf
    g = 1 - Fraction(100, 105)
    assert g + 15 * g < 1 and 3 * g + 12 * g < 2
    r = regvar.check_exponent_conditions(10, 1, Fraction(1000, 1001), "thm3")
    slack = Fraction(2, 3630) - (1 + Fraction(1, 330)) * (1 - Fraction(1000, 1001))
    assert r["admissible"] == (slack > 0)
    assert r["slacks"][0] == pytest.approx(float(slack), rel=1e-12)
    r = regvar.check_exponent_conditions(1, Fraction(2, 3), Fraction(2, 3), "thm3")
    assert not r["admissible"] and r["max_epsilon"] == 0


def test_exponent_table_disagreement_flag():
    # 3(1-g1) + b(1-g2) < 3 with 1-g1 = 0: admissible for b=52 only when 52t < 3 <= 62t
    g2 = 1 - Fraction(1, 19)
    r3 = regvar.check_exponent_conditions(2, 1, g2, "thm3")
    r4 = regvar.check_exponent_conditions(2, 1, g2, "thm4")
    assert r3["warnings"] and r4["warnings"]


@settings(max_examples=200, deadline=None)
@given(d=st.integers(1, 14), t1=st.fractions(0, Fraction(1, 4)), t2=st.fractions(0, Fraction(1, 40)),
       s1=st.fractions(0, Fraction(1, 50)), s2=st.fractions(0, Fraction(1, 500)),
       table=st.sampled_from(["section1", "thm3", "thm4"]))
def test_exponent_monotone(d, t1, t2, s1, s2, table):
    g1, g2 = 1 - t1, 1 - t2
    base = regvar.check_exponent_conditions(d, g1, g2, table)["max_epsilon"]
    lower = regvar.check_exponent_conditions(d, g1 - s1, g2 - s2, table)["max_epsilon"]
    assert lower <= base
