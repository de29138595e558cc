import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from thinprimes import thinset
from thinprimes.errors import ConfigError
from thinprimes.presets import canonical_thin, make_pair
from thinprimes.thinset import Diagnostics, ThinSetSpec


def test_p2_in_minus_set(thin_minus):
    assert math.ceil(2 ** (2 / 3)) - 2 ** (2 / 3) == pytest.approx(0.4126, abs=1e-4)
    assert thinset.is_member(thin_minus, 2)
    assert thinset.floor_characterization(thin_minus, 2)


def test_composites_never_members(thin_minus, thin_plus, small_tables):
    for n in (1, 4, 9, 15, 27, 1000, 9999):
        for spec in (thin_minus, thin_plus):
            assert not thinset.is_member(spec, n, small_tables)
            assert not thinset.floor_characterization(spec, n)


def test_floor_of_power_primes_are_members(thin_minus, tables):
    for n in range(1, 10**4 + 1):
        v = thinset.iroot(n**3, 2)
        if v >= 2 and tables.is_prime[v]:
            assert thinset.is_member(thin_minus, v, tables), v


def test_iroot_exact():
    for x in [0, 1, 2, 7, 8, 9, 10**30, 10**30 - 1, 2**200 + 1]:
        for k in (1, 2, 3, 5):
            r = thinset.iroot(x, k)
            assert r**k <= x < (r + 1) ** k


def test_seven_is_an_exact_tie(thin_minus):
    # 4**3 = (7 + 1)**2 puts p = 7 exactly on the boundary; the strict
    # inequality excludes it and the integer certificate proves it
    diag = Diagnostics()
    assert not thinset.is_member(thin_minus, 7, diag=diag)
    assert diag.resolved_ties == [7]


def test_dual_enumeration_small(thin_minus, tables):
    a = thinset.enumerate_members(thin_minus, 100, tables)
    b = thinset.enumerate_dual(thin_minus, 100, tables)
    # floor(n**1.5), n = 1..21: 1 2 5 8 11 14 18 22 27 31 36 41 46 52 58 64 70 76 82 89 96
    assert a.tolist() == b.tolist() == [2, 5, 11, 31, 41, 89]
    big_a = thinset.enumerate_members(thin_minus, 10**6, tables)
    assert np.array_equal(big_a, thinset.enumerate_dual(thin_minus, 10**6, tables))


def test_dual_needs_matching_pair(thin_plus, tables):
    with pytest.raises(ConfigError):
        thinset.enumerate_dual(thin_plus, 100, tables)


def test_streaming_matches_tables(thin_minus, tables):
    a = thinset.enumerate_members(thin_minus, 10**6, tables)
    b = thinset.enumerate_members(thin_minus, 10**6, None, segment_size=2**15)
    assert np.array_equal(a, b)


def test_limit_one_and_two(thin_minus):
    assert thinset.enumerate_members(thin_minus, 1).size == 0
    r = thinset.count_vs_integral(thin_minus, 2)
    assert r["count"] in (0, 1) and r["integral"] == 0 and math.isnan(r["ratio"]) and r["degenerate"]


CONFIGS = [(Fraction(3, 2), 0.0, Fraction(3, 2), 0.0), (Fraction(6, 5), 0.0, Fraction(7, 5), 0.5),
           (Fraction(1), 2.0, Fraction(11, 10), 1.0)]


@pytest.mark.parametrize("cfg", CONFIGS)
@pytest.mark.parametrize("sign", ["plus", "minus"])
@settings(max_examples=30, deadline=None)
@given(idx=st.integers(min_value=0, max_value=78_000))
def test_floor_form_agrees(cfg, sign, idx):
    t = __import__("thinprimes.arith", fromlist=["get_tables"]).get_tables(10**6)
    p = int(t.primes[idx])
    for precision in ("standard", "extended"):
        spec = ThinSetSpec(sign, make_pair(*cfg), precision)
        assert thinset.is_member(spec, p, t) == thinset.floor_characterization(spec, p, t)


@pytest.mark.parametrize("c1", [Fraction(6, 5), Fraction(3, 2), Fraction(9, 5)])
def test_thinness_trend(c1, tables):
    spec = ThinSetSpec("minus", make_pair(c1), "standard")
    grid = [10**3, 10**4, 10**5, 10**6]
    members = thinset.enumerate_members(spec, grid[-1], tables)
    dens = [np.searchsorted(members, N, side="right") / tables.primes_upto(N).size for N in grid]
    assert all(b < a for a, b in zip(dens, dens[1:])), dens


def test_simpson_against_scipy(thin_minus):
    fn = lambda x: thin_minus.pair.psi(x) / np.log(x)
    for lo, hi in ((2.0, 50.0), (2.0, 1e4), (10.0, 1e6)):
        ref, _ = integrate.quad(lambda x: float(fn(np.array([x]))[0]), lo, hi, epsabs=0, epsrel=1e-12, limit=500)
        assert thinset.adaptive_simpson(fn, lo, hi) == pytest.approx(ref, rel=1e-9)


def test_count_partial_summation_identity(thin_minus, tables):
    gaps = [abs(thinset.count_vs_integral(thin_minus, N, tables)["prime_psi_sum_rel_gap"])
            for N in (10**4, 10**6)]
    assert gaps[-1] < 0.01 and gaps[-1] < gaps[0]
