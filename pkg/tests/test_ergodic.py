import cmath
import math
from fractions import Fraction

import numpy as np
import pytest

from thinprimes import ergodic, thinset
from thinprimes.ergodic import SignalOnZ
from thinprimes.errors import ConfigError, NumericDomainError
from thinprimes.expsum import IntPolynomial

LINEAR = IntPolynomial((1,))
QUAD = IntPolynomial((1, 1))      # n + n^2
CUBIC = IntPolynomial((0, 0, 1))  # n^3, odd


def random_signal(rng, n=20, spread=200, complex_=False):
    pts = rng.integers(-spread, spread, size=n)
    vals = rng.normal(size=n) + (1j * rng.normal(size=n) if complex_ else 0)
    return SignalOnZ(pts, vals)


@pytest.mark.parametrize("source", ["A", "M", "M_prime"])
@pytest.mark.parametrize("N", [10, 10**3, 10**5])
def test_normalisation(tables, thin_minus, source, N):
    k = ergodic.build_kernel(thin_minus, QUAD, N, source, tables)
    assert abs(k.l1_norm - 1) <= 1e-14
    assert k.info["theta_N"] == tables.theta(N)


def test_empty_set_rejected(tables, thin_minus):
    with pytest.raises(NumericDomainError):
        ergodic.build_kernel(thin_minus, LINEAR, 1, "A", tables)
    with pytest.raises(ConfigError):
        ergodic.build_kernel(thin_minus, LINEAR, 10, "B", tables)


def test_average_of_delta(tables, thin_minus):
    k = ergodic.build_kernel(thin_minus, QUAD, 10**4, "A", tables)
    members = thinset.enumerate_members(thin_minus, 10**4, tables)
    out = ergodic.apply(k, SignalOnZ.delta(0))
    assert out.points.tolist() == sorted(int(QUAD(int(p))) for p in members)
    assert np.all(out.values == 1 / members.size)
    assert out.get(np.array([1, 3]))[0] == 0


def test_single_member_shifts(tables, thin_minus):
    k = ergodic.build_kernel(thin_minus, QUAD, 4, "A", tables)  # only p = 2
    assert k.offsets.tolist() == [6]
    f = random_signal(np.random.default_rng(0))
    g = ergodic.apply(k, f)
    assert np.array_equal(g.points, f.points + 6) and np.array_equal(g.values, f.values)


def test_collisions_accumulate(tables, thin_minus):
    # P(n) = n^2 - n has P(3) = P(-2) = 6, so the +3 and -2 weights share an offset
    k = ergodic.build_kernel(thin_minus, IntPolynomial((-1, 1)), 10, "H_prime", tables)
    w = dict(zip(k.offsets.tolist(), k.weights.tolist()))
    assert w[6] == pytest.approx(math.log(3) / 3 - math.log(2) / 2, rel=1e-15)
    assert np.all(np.diff(k.offsets) > 0)
    f = SignalOnZ(np.array([5, 5, 7]), np.array([1.0, 2.0, 4.0]))
    assert f.points.tolist() == [5, 7] and f.values.tolist() == [3.0, 4.0]


@pytest.mark.parametrize("source", ["A", "M"])
def test_contraction(tables, thin_minus, source):
    rng = np.random.default_rng(5)
    k = ergodic.build_kernel(thin_minus, QUAD, 10**4, source, tables)
    for _ in range(10):
        f = random_signal(rng, complex_=bool(rng.integers(2)))
        g = ergodic.apply(k, f)
        for s in (1, 2, 4):
            assert g.norm(s) <= f.norm(s) * (1 + 1e-12)


@pytest.mark.parametrize("poly", [LINEAR, CUBIC, IntPolynomial((1, 0, 1))])
def test_hilbert_antisymmetry(tables, thin_minus, poly):
    k = ergodic.build_kernel(thin_minus, poly, 10**4, "H", tables)
    w = dict(zip(k.offsets.tolist(), k.weights.tolist()))
    assert all(w[-o] == -v for o, v in w.items())
    assert abs(ergodic.multiplier(k, [Fraction(0)])[0]) <= 1e-15
    out = ergodic.apply(k, SignalOnZ.delta(0))
    assert np.array_equal(out.points, k.offsets) and np.array_equal(out.values, k.weights)


def test_hilbert_weights(tables, thin_minus):
    k = ergodic.build_kernel(thin_minus, LINEAR, 100, "H", tables)
    for p in (2, 5, 11, 31, 41, 89):
        w = math.log(p) / (p * thin_minus.pair.psi(float(p)))
        assert dict(zip(k.offsets.tolist(), k.weights.tolist()))[p] == pytest.approx(w, rel=1e-15)


def test_multiplier_against_direct(tables, thin_minus):
    k = ergodic.build_kernel(thin_minus, QUAD, 10**3, "M", tables)
    grid = [Fraction(a, 17) for a in range(17)] + [Fraction(1, 3), Fraction(5, 512)]
    m = ergodic.multiplier(k, grid)
    for xi, val in zip(grid, m):
        ref = sum(w * cmath.exp(2j * math.pi * float(Fraction(int(o)) * xi % 1))
                  for o, w in zip(k.offsets, k.weights))
        assert abs(val - ref) <= 1e-13
    assert m[0] == pytest.approx(1.0, abs=1e-15)
    assert np.all(np.abs(m) <= k.l1_norm * (1 + 1e-14))


def test_multiplier_thread_independence(tables, thin_minus):
    k = ergodic.build_kernel(thin_minus, QUAD, 10**4, "M", tables)
    grid = ergodic.xi_grid(64) + [Fraction(1, 7), Fraction(2, 9)]
    assert np.array_equal(ergodic.multiplier(k, grid, 1), ergodic.multiplier(k, grid, 6))


def test_plancherel_with_slack(tables, thin_minus):
    rng = np.random.default_rng(9)
    km = ergodic.build_kernel(thin_minus, LINEAR, 10**3, "M", tables)
    kp = ergodic.build_kernel(thin_minus, LINEAR, 10**3, "M_prime", tables)
    diff = ergodic.multiplier_difference(km, kp, ergodic.xi_grid(4096))
    for _ in range(10):
        f = random_signal(rng, n=30, spread=50)
        a, b = ergodic.apply(km, f), ergodic.apply(kp, f)
        g = SignalOnZ(np.concatenate([a.points, b.points]), np.concatenate([a.values, -b.values]))
        assert g.norm(2) <= (diff["sup"] + diff["lipschitz_slack"]) * f.norm(2)


@pytest.mark.parametrize("source", ["M", "H"])
def test_incremental_mass_matches_direct(tables, thin_minus, source):
    for k in (3, 8, 12, 20, 30):
        r = ergodic.short_variation_kernel_mass(thin_minus, 0.5, k, source, tables, QUAD, check_direct=True)
        assert r["mass"] == pytest.approx(r["mass_direct"], rel=1e-12, abs=1e-300)


def test_hilbert_mass_zero_without_new_members(tables, thin_minus):
    # block 6 for rho = 0.4 is [N_5, N_6) = [4, 4]; no member > 4 up to 4
    r = ergodic.short_variation_kernel_mass(thin_minus, 0.4, 6, "H", tables)
    assert r["new_members"] == [] and r["mass"] == 0


def test_m_mass_closed_form(tables, thin_minus):
    r = ergodic.short_variation_kernel_mass(thin_minus, 0.5, 30, "M", tables)
    members = thinset.enumerate_members(thin_minus, r["N_hi"], tables)
    w = np.log(members.astype(float)) / thin_minus.pair.psi(members.astype(float))
    expect = sum(2 * w[i] / math.fsum(w[: i + 1]) for i in range(members.size) if members[i] > r["N_lo"])
    assert r["mass"] == pytest.approx(expect, rel=1e-13)


def test_psi_mass_against_theta(tables, thin_minus):
    vals = []
    for N in (10**4, 10**5, 10**6):
        k = ergodic.build_kernel(thin_minus, LINEAR, N, "M", tables)
        vals.append(abs(k.info["Psi_N"] - k.info["theta_N"]) / N)
    assert max(vals) < 0.25


def test_variation_experiment_zero_signal(tables, thin_minus):
    rep = ergodic.variation_experiment(thin_minus, LINEAR, SignalOnZ.zero(), 3, 0.4, [100, 1000], tables)
    assert rep["ratios"] == [0.0, 0.0]


def test_variation_experiment_delta(tables, thin_minus):
    rep = ergodic.variation_experiment(thin_minus, LINEAR, SignalOnZ.delta(0), 3, 0.4, [10**3, 10**4], tables)
    r = rep["ratios"]
    assert all(x > 0 for x in r) and r[1] <= r[0] * 1.2
    for row in rep["rows"]:
        assert row["norm"] <= 3 * (row["long_norm"] + row["short_norm"])
        assert row["sandwich_C"] > 0
    rep2 = ergodic.variation_experiment(thin_minus, LINEAR, SignalOnZ.delta(0), 2, 0.4, [100], tables)
    assert rep2["warnings"]


def test_variation_experiment_thread_independence(tables, thin_minus):
    f = random_signal(np.random.default_rng(1), n=4, spread=5)
    a = ergodic.variation_experiment(thin_minus, LINEAR, f, 3, 0.4, [2000], tables, "H", threads=1)
    b = ergodic.variation_experiment(thin_minus, LINEAR, f, 3, 0.4, [2000], tables, "H", threads=3)
    assert a == b
