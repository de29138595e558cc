"""Exponential sums with phase F(t) = xi*P(t) + m*(phi1(t) - tau*psi(t)).

The polynomial part of the phase is reduced modulo one exactly: xi = a/q is
rational and xi*P(n) mod 1 = (a * (P(n) mod q) mod q) / q, evaluated with
int64 Horner steps whose operands never exceed q < 2**31.  Only the smooth
part m*(phi1 - tau*psi) is carried in floating point.

Sums are reduced with :mod:`._summation`, so their values do not depend on
the order of terms or on the number of worker threads.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import arith
from ._summation import EPS, csum, fsum
from .errors import ConfigError, NumericDomainError
from .regvar import FunctionPair, check_exponent_conditions
from .thinset import Diagnostics, ThinSetSpec, member_mask

TWO_PI = 2.0 * math.pi
MAX_Q = 2**31


@dataclass(frozen=True)
class IntPolynomial:
    """P(n) = c1*n + c2*n**2 + ... + cd*n**d with 64-bit integer coefficients."""

    coeffs: tuple[int, ...]

    def __post_init__(self):
        coeffs = tuple(int(c) for c in self.coeffs)
        object.__setattr__(self, "coeffs", coeffs)
        if not coeffs or coeffs[-1] == 0:
            raise ConfigError("leading coefficient must be nonzero")
        if any(abs(c) >= 2**63 for c in coeffs):
            raise ConfigError("coefficients must fit in 64-bit signed integers")

    @classmethod
    def parse(cls, text: str) -> "IntPolynomial":
        """Parse ``"c1,c2,...,cd"``."""
        try:
            return cls(tuple(int(t) for t in text.split(",") if t.strip()))
        except ValueError as exc:
            raise ConfigError(f"bad polynomial {text!r}: {exc}") from None

    @property
    def degree(self) -> int:
        return len(self.coeffs)

    def __call__(self, n: int) -> int:
        acc = 0
        for c in reversed(self.coeffs):
            acc = (acc + c) * n
        return acc

    def values(self, n: np.ndarray) -> np.ndarray:
        """P(n) as int64 (caller guarantees no overflow)."""
        n = np.asarray(n, dtype=np.int64)
        acc = np.zeros_like(n)
        for c in reversed(self.coeffs):
            acc = (acc + c) * n
        return acc

    def mod(self, n: np.ndarray, q: int) -> np.ndarray:
        """P(n) mod q for q <= 2**31, exact for any int64 n."""
        if not 1 <= q <= MAX_Q:
            raise ConfigError(f"modulus {q} outside [1, 2**31]")
        nm = np.mod(np.asarray(n, dtype=np.int64), q)
        acc = np.zeros_like(nm)
        for c in reversed(self.coeffs):
            acc = np.mod(acc + c % q, q)
            acc = np.mod(acc * nm, q)
        return acc


@dataclass(frozen=True)
class PhaseSpec:
    xi: Fraction
    m: int
    tau: int
    poly: IntPolynomial
    pair: FunctionPair

    def __post_init__(self):
        xi = Fraction(self.xi)
        object.__setattr__(self, "xi", xi)
        if not (0 <= xi < 1) or xi.denominator > MAX_Q:
            raise ConfigError("xi must be a/q with 0 <= a < q <= 2**31")
        if self.tau not in (0, 1):
            raise ConfigError("tau must be 0 or 1")

    @property
    def phase_mode(self) -> str:
        if self.m == 0:
            return "exact-rational"
        return "float" if self.xi == 0 else "mixed"


@dataclass
class SumResult:
    """A compensated complex sum.

    ``error_bound`` bounds the effect of phase and rounding errors on the value.
    """

    value: complex
    terms: int
    phase_mode: str
    error_bound: float = 0.0
    extra: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        out = {"re": self.value.real, "im": self.value.imag, "abs": abs(self.value),
               "terms": self.terms, "phase_mode": self.phase_mode, "error_bound": self.error_bound}
        out.update(self.extra)
        return out


def _poly_phase(spec: PhaseSpec, n: np.ndarray) -> np.ndarray:
    q = spec.xi.denominator
    a = spec.xi.numerator
    if a == 0:
        return np.zeros(np.shape(n))
    r = np.mod(a * spec.poly.mod(n, q), q)
    return r / q


def _smooth_phase(spec: PhaseSpec, n: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """frac(m*(phi1 - tau*psi)) and its absolute error estimate."""
    x = np.asarray(n, dtype=np.float64)
    if spec.m == 0:
        return np.zeros(x.shape), np.zeros(x.shape)
    if np.any(x < spec.pair.h1.y_min) or (spec.tau and np.any(x < spec.pair.x_psi)):
        raise NumericDomainError("phase argument below the domain of phi1/psi")
    val = spec.pair.h1.phi(x)
    if spec.tau:
        val = val - spec.pair.psi(x)
    val = spec.m * val
    err = 8 * EPS * np.abs(val) + 4 * EPS
    return val - np.floor(val), err


def phase_mod1(spec: PhaseSpec, n):
    """{xi*P(n) + m*(phi1(n) - tau*psi(n))} in [0, 1); n may be an int or array."""
    arr = np.asarray(n, dtype=np.int64)
    if np.any(arr < 1):
        raise ConfigError("n must be >= 1")
    ph, _ = _smooth_phase(spec, arr)
    out = _poly_phase(spec, arr) + ph
    out = out - np.floor(out)
    return float(out) if out.ndim == 0 else out


def _unimodular(spec: PhaseSpec, n: np.ndarray) -> tuple[np.ndarray, float]:
    """e(F(n)) and a bound on the per-term error."""
    ph, err = _smooth_phase(spec, n)
    total = _poly_phase(spec, n) + ph
    total = total - np.floor(total)
    e = np.exp(1j * TWO_PI * total)
    per_term = TWO_PI * (float(err.max()) if err.size else 0.0) + 4 * EPS
    return e, per_term


# ---------------------------------------------------------------------------
# closed-form bounds
# ---------------------------------------------------------------------------

def default_epsilon(spec: PhaseSpec, table: str = "thm3") -> tuple[float, bool]:
    """epsilon for bound expressions: the admissible maximum, or 0 when the
    exponent system fails (second value False)."""
    res = check_exponent_conditions(spec.poly.degree, spec.pair.gamma1, spec.pair.gamma2, table)
    eps = res["max_epsilon"]
    if not res["admissible"]:
        return 0.0, False
    return (eps if math.isfinite(eps) else 0.0), True


def progression_bounds(spec: PhaseSpec, j: int, K: int, epsilon: float) -> dict:
    """Both progression-sum bound expressions at jK."""
    if spec.m == 0:
        raise ConfigError("progression bounds need m != 0")
    d = spec.poly.degree
    x = float(j * K)
    phs = spec.pair.h1.phi(x) * spec.pair.h1.sigma(x)
    m = abs(spec.m)
    b1 = m ** (1 / (2 * (2**d - 1))) * x ** (1 + epsilon) * phs ** (-1 / 2**d)
    b2 = m ** (1 / (d * (d + 1))) * x ** (1 + epsilon) * phs ** (-2 / (d * (d + 1) ** 2))
    return {"weyl": b1, "vinogradov": b2, "epsilon": epsilon}


def mangoldt_bound(spec: PhaseSpec, X: float, epsilon: float) -> dict:
    """Closed-form bound for the von Mangoldt weighted sum over (X, 2X] and the
    cut u suggested by balancing its terms."""
    if spec.m == 0:
        raise ConfigError("the bound needs m != 0")
    d = spec.poly.degree
    m = abs(spec.m)
    ps = float(spec.pair.h1.phi(X) * spec.pair.h1.sigma(X))
    if d == 1:
        terms = [m ** 0.25 * X ** (-1 / 12), m ** (1 / 14) * ps ** (-1 / 14), X ** (1 / 12) * ps ** (-0.25)]
        u = m ** (-3 / 7) * ps ** (3 / 7)
    elif d == 2:
        terms = [m ** (1 / 12) * X ** (-1 / 16), m ** (1 / 30) * ps ** (-1 / 20), X ** (1 / 32) * ps ** (-1 / 8)]
        u = m ** (-2 / 15) * ps ** 0.2
    elif d <= 9:
        D = 2**d - 1
        terms = [X ** (-1 / (4 * 2**d)),
                 m ** (1 / (4 * D)) * X ** (-(d - 1) / (8 * D)),
                 m ** (1 / (6 * D)) * ps ** (-1 / (3 * 2**d))]
        u = m ** (-2 / (6 * D)) * ps ** ((2 / 3) / 2**d)
    else:
        e = d * (d + 1)
        terms = [X ** (-1 / (4 * e)),
                 m ** (1 / (2 * e)) * X ** (-(d - 1) / (4 * e)),
                 m ** (1 / (3 * e)) * ps ** (-2 / (3 * e * (d + 1)))]
        u = m ** (-2 / (3 * e)) * ps ** (4 / (3 * e * (d + 1)))
    scale = X ** (1 + epsilon)
    u_max = X ** (1 / 3)
    return {
        "bound": scale * fsum(terms),
        "terms": [scale * t for t in terms],
        "dominant_term": int(np.argmax(terms)),
        "u_selected": u,
        "u_selected_clipped": min(max(u, 1.0), u_max),
        "epsilon": epsilon,
    }


def vdc_terms(k: int, N: float, eta: float, variant: str, epsilon: float = 0.0) -> list[float]:
    """The three terms of a van der Corput type bound (already multiplied out)."""
    if eta <= 0:
        raise ConfigError("eta must be positive")
    if variant == "classical":
        if k < 2:
            raise ConfigError("classical bound needs k >= 2")
        K = 2**k
        return [N * eta ** (1 / (K - 2)), N * N ** (-2 / K), N * (N**k * eta) ** (-2 / K)]
    if variant == "heathbrown":
        if k < 3:
            raise ConfigError("Heath-Brown bound needs k >= 3")
        s = N ** (1 + epsilon)
        return [s * eta ** (1 / (k * (k - 1))), s * N ** (-1 / (k * (k - 1))),
                s * (N**k * eta) ** (-2 / (k * k * (k - 1)))]
    raise ConfigError(f"unknown variant {variant!r}")


def vdc_bound(k: int, N: float, eta: float, variant: str = "classical", epsilon: float = 0.0) -> float:
    """Value of the bound; ``variant="min"`` takes the smaller of the two where
    both apply (k >= 3) and the classical one otherwise."""
    if variant == "min":
        vals = [vdc_bound(k, N, eta, "classical", epsilon)]
        if k >= 3:
            vals.append(vdc_bound(k, N, eta, "heathbrown", epsilon))
        return min(vals)
    return fsum(vdc_terms(k, N, eta, variant, epsilon))


def vdc_exponent_comparison(k: int) -> dict:
    """Compare the N-exponents of the second and third terms of both bounds.

    Smaller exponent means a stronger estimate.  Exponents are exact fractions
    of the exponent of N in N * N**(-a) and N * (N**k * eta)**(-b) at fixed eta.
    """
    K = 2**k
    cl2, cl3 = Fraction(2, K), Fraction(2, K)
    hb2 = Fraction(1, k * (k - 1))
    hb3 = Fraction(2, k * k * (k - 1))
    return {
        "k": k,
        "classical_second_saving": cl2,
        "heathbrown_second_saving": hb2,
        "classical_third_saving_per_k": cl3,
        "heathbrown_third_saving_per_k": hb3,
        "second_classical_better": cl2 > hb2,
        "third_classical_better": cl3 > hb3,
    }


# ---------------------------------------------------------------------------
# sums
# ---------------------------------------------------------------------------

def direct_progression_sum(spec: PhaseSpec, j: int, K: int, epsilon: float | None = None,
                           with_bounds: bool = True) -> SumResult:
    """T(K) = sum_{1 <= k <= K} e(F(jk)), with both progression bounds attached."""
    if j < 1 or K < 0:
        raise ConfigError("need j >= 1 and K >= 0")
    n = j * np.arange(1, K + 1, dtype=np.int64)
    e, per_term = _unimodular(spec, n) if K else (np.zeros(0, complex), 0.0)
    res = SumResult(csum(e), K, spec.phase_mode, K * per_term + K * EPS)
    if with_bounds and K:
        eps, ok = (epsilon, True) if epsilon is not None else default_epsilon(spec)
        res.extra["bounds"] = progression_bounds(spec, j, K, eps)
        res.extra["admissible"] = ok
    return res


def _check_range(tables: arith.SieveTables, X: int, Xp: int) -> None:
    if not (1 <= X < Xp <= 2 * X):
        raise ConfigError(f"need 1 <= X < X' <= 2X, got X={X}, X'={Xp}")
    tables.check(Xp)


def mangoldt_sum_direct(spec: PhaseSpec, X: int, Xp: int, tables: arith.SieveTables) -> SumResult:
    """S(X, X') = sum_{X < n <= X'} Lambda(n) e(F(n))."""
    _check_range(tables, X, Xp)
    n = np.arange(X + 1, Xp + 1, dtype=np.int64)
    lam = tables.mangoldt(X + 1, Xp)
    e, per_term = _unimodular(spec, n)
    mass = fsum(lam)
    return SumResult(csum(lam * e), int(n.size), spec.phase_mode,
                     mass * (per_term + 4 * EPS), {"mangoldt_mass": mass})


def _chunks(seq: list, parts: int) -> list[list]:
    size = max(1, math.ceil(len(seq) / max(parts, 1)))
    return [seq[i:i + size] for i in range(0, len(seq), size)]


def vaughan_decompose(spec: PhaseSpec, X: int, Xp: int, u: int, tables: arith.SieveTables,
                      threads: int = 1) -> dict:
    """Four-term decomposition of S(X, X') for the cut u.

    sigma1 = sum_{j <= u} mu(j) sum_k e(F(jk)) log k
    sigma21 = sum_{j <= u} b_j sum_k e(F(jk))
    sigma22 = sum_{u < j <= u^2} b_j sum_k e(F(jk))
    sigma3 = sum_{u < j <= X'/u} a_j sum_{k > u} Lambda(k) e(F(jk))
    with k ranging over X/j < k <= X'/j.  Each inner sum is reduced exactly
    (correctly rounded) per j and the per-j totals are combined with fsum, so
    the result is independent of ``threads``.
    """
    _check_range(tables, X, Xp)
    if u < 1 or u**3 > X:
        raise ConfigError(f"cut u={u} must satisfy 1 <= u <= X^(1/3)")
    n = np.arange(X + 1, Xp + 1, dtype=np.int64)
    E, per_term = _unimodular(spec, n)
    j3_max = Xp // u
    a = arith.vaughan_a(tables, u, j3_max)
    b_terms = arith.vaughan_b_terms(tables, u)
    b = {j: math.fsum(c * math.log(p) for p, c in row.items()) for j, row in b_terms.items()}
    mu = tables.mobius
    lam_k = tables.mangoldt(1, max(Xp // (u + 1), 1))  # Lambda(k) for k >= 1

    def k_range(j):
        return X // j + 1, Xp // j

    def inner(j, kind):
        k0, k1 = k_range(j)
        if kind == "s3":
            k0 = max(k0, u + 1)
        if k1 < k0:
            return 0j
        k = np.arange(k0, k1 + 1, dtype=np.int64)
        e = E[j * k - (X + 1)]
        if kind == "s1":
            return csum(e * np.log(k.astype(np.float64)))
        if kind == "s3":
            return csum(e * lam_k[k - 1])
        return csum(e)

    jobs = {
        "sigma1": [(j, "s1", int(mu[j])) for j in range(1, u + 1) if mu[j]],
        "sigma21": [(j, "b", b[j]) for j in range(1, u + 1) if b.get(j, 0.0)],
        "sigma22": [(j, "b", b[j]) for j in range(u + 1, u * u + 1) if b.get(j, 0.0)],
        "sigma3": [(j, "s3", int(a[j])) for j in range(u + 1, j3_max + 1) if a[j]],
    }

    def run(batch):
        return [w * inner(j, kind) for j, kind, w in batch]

    parts = {}
    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        for name, batch in jobs.items():
            vals = [v for chunk in pool.map(run, _chunks(batch, threads)) for v in chunk]
            parts[name] = csum(vals) if vals else 0j

    lam = tables.mangoldt(X + 1, Xp)
    mass = fsum(lam)
    recombined = parts["sigma1"] - parts["sigma21"] - parts["sigma22"] + parts["sigma3"]
    direct = csum(lam * E)
    log_max = math.log(Xp)
    # all four sums have absolute weight mass bounded by a divisor-type count
    weight = (len(jobs["sigma1"]) + len(jobs["sigma21"]) + len(jobs["sigma22"]) + len(jobs["sigma3"]) + 1)
    bound = (mass + n.size * log_max * math.log(max(weight, 2))) * (per_term + 16 * EPS)
    out = {name: SumResult(v, len(jobs[name]), spec.phase_mode) for name, v in parts.items()}
    out["recombined"] = SumResult(recombined, int(n.size), spec.phase_mode, bound)
    out["direct"] = SumResult(direct, int(n.size), spec.phase_mode, mass * (per_term + 4 * EPS))
    out["difference"] = abs(recombined - direct)
    out["mangoldt_mass"] = mass
    out["u"] = u
    if spec.m != 0:
        eps, _ = default_epsilon(spec)
        out["mangoldt_bound"] = mangoldt_bound(spec, float(X), eps)
    return out


# ---------------------------------------------------------------------------
# sawtooth expansion
# ---------------------------------------------------------------------------

def sawtooth(x):
    x = np.asarray(x, dtype=np.float64)
    return x - np.floor(x) - 0.5


def sawtooth_truncation(x: float, M: int) -> dict:
    """Truncated Fourier series of {x} - 1/2 over 0 < |m| <= M.

    The complex series is summed term by term; its imaginary part is pure
    rounding residue and is returned for inspection.
    """
    if M < 1:
        raise ConfigError("M must be >= 1")
    m = np.concatenate([np.arange(1, M + 1), -np.arange(1, M + 1)]).astype(np.float64)
    xr = x - math.floor(x)
    terms = np.exp(-1j * TWO_PI * np.mod(m * xr, 1.0)) / (1j * TWO_PI * m)
    total = csum(terms)
    dist = abs(xr - round(xr))
    bound = 1.0 if dist == 0 else min(1.0, 1.0 / (M * dist))
    return {"approx": total.real, "imag_residue": total.imag, "bound": bound,
            "exact": float(sawtooth(x)), "error": abs(float(sawtooth(x)) - total.real)}


def sawtooth_fit(M: int, xs) -> dict:
    """Largest ratio |error| / bound over a grid and the largest imaginary residue."""
    ratios, resid = [], []
    for x in xs:
        r = sawtooth_truncation(float(x), M)
        ratios.append(r["error"] / r["bound"])
        resid.append(abs(r["imag_residue"]))
    return {"M": M, "fitted_C": max(ratios), "max_imag_residue": max(resid), "points": len(ratios)}


def sawtooth_coefficient_bound(m: int, M: int) -> float:
    """min{log M / M, 1/|m|, M/m^2} for the smoothed coefficients."""
    am = abs(m)
    return min(math.log(M) / M if M > 1 else 1.0, 1 / am, M / am**2)


# ---------------------------------------------------------------------------
# transfer errors
# ---------------------------------------------------------------------------

def _members_and_primes(thin: ThinSetSpec, N: int, tables: arith.SieveTables):
    primes = tables.primes_upto(N)
    primes = primes[primes >= thin.domain_start]
    diag = Diagnostics()
    mask = member_mask(thin, primes, diag)
    return primes, mask, diag


def _xi_phase(xi: Fraction, poly: IntPolynomial, n: np.ndarray) -> np.ndarray:
    q, a = xi.denominator, xi.numerator
    if a == 0:
        return np.ones(n.shape, dtype=complex)
    r = np.mod(a * poly.mod(n, q), q)
    return np.exp(1j * TWO_PI * (r / q))


def transfer_error_psi_weighted(xi, poly: IntPolynomial, thin: ThinSetSpec, N: int,
                        tables: arith.SieveTables) -> dict:
    """Thin-set sum of e(xi P(p)) log p against the psi-weighted sum over all primes."""
    xi = Fraction(xi)
    primes, mask, diag = _members_and_primes(thin, N, tables)
    e = _xi_phase(xi, poly, primes)
    logp = np.log(primes.astype(np.float64))
    psi = thin.pair.psi(primes.astype(np.float64)) if primes.size else np.zeros(0)
    lhs = csum((e * logp)[mask])
    rhs = csum(e * logp * psi)
    err = abs(lhs - rhs)
    res = check_exponent_conditions(poly.degree, thin.pair.gamma1, thin.pair.gamma2, "thm3")
    return {"N": N, "lhs": lhs, "rhs": rhs, "err": err,
            "scaled": err / float(thin.pair.h2.phi(float(N))),
            "members": int(mask.sum()), "admissible": res["admissible"],
            "boundary_cases": len(diag.boundary_cases)}


def transfer_error_reweighted(xi, poly: IntPolynomial, thin: ThinSetSpec, N: int,
                        tables: arith.SieveTables, weighting: str = "hilbert") -> dict:
    """Thin-set sums reweighted by 1/psi against plain prime sums.

    ``hilbert``: weights log p / (p psi(p)) vs log p / p, err unscaled.
    ``average``: weights log p / psi(p) vs log p, scaled by N.
    """
    if weighting not in ("hilbert", "average"):
        raise ConfigError("weighting must be 'hilbert' or 'average'")
    xi = Fraction(xi)
    primes, mask, diag = _members_and_primes(thin, N, tables)
    x = primes.astype(np.float64)
    e = _xi_phase(xi, poly, primes)
    w = np.log(x) / x if weighting == "hilbert" else np.log(x)
    psi = thin.pair.psi(x) if primes.size else np.zeros(0)
    lhs = csum((e * w / psi)[mask]) if primes.size else 0j
    rhs = csum(e * w)
    err = abs(lhs - rhs)
    scale = 1.0 if weighting == "hilbert" else float(N)
    res = check_exponent_conditions(poly.degree, thin.pair.gamma1, thin.pair.gamma2, "thm4")
    return {"N": N, "weighting": weighting, "lhs": lhs, "rhs": rhs, "err": err,
            "scaled": err / scale, "members": int(mask.sum()), "admissible": res["admissible"],
            "warnings": res["warnings"], "boundary_cases": len(diag.boundary_cases)}


SWEEP_HEADER = ["N", "lhs_re", "lhs_im", "rhs_re", "rhs_im", "err", "scaled"]


def write_sweep_csv(rows: list[dict], path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SWEEP_HEADER)
        for r in rows:
            w.writerow([r["N"], repr(r["lhs"].real), repr(r["lhs"].imag), repr(r["rhs"].real),
                        repr(r["rhs"].imag), repr(r["err"]), repr(r["scaled"])])


# ---------------------------------------------------------------------------
# bound fitting
# ---------------------------------------------------------------------------

def fit_constants(xs, values, bounds) -> dict:
    """C_i = |value_i| / bound_i and the slope of log C against log x."""
    xs = np.asarray(xs, dtype=np.float64)
    c = np.abs(np.asarray(values)) / np.asarray(bounds, dtype=np.float64)
    slope = float(np.polyfit(np.log(xs), np.log(c), 1)[0]) if xs.size >= 2 and np.all(c > 0) else math.nan
    return {"constants": c.tolist(), "max_constant": float(c.max()), "log_slope": slope}


def progression_bound_fit(spec: PhaseSpec, j: int, Ks, epsilon: float | None = None) -> dict:
    """Fit |T(K)| <= C * bound for both progression bounds along Ks."""
    vals, b1, b2 = [], [], []
    for K in Ks:
        r = direct_progression_sum(spec, j, int(K), epsilon)
        vals.append(abs(r.value))
        b1.append(r.extra["bounds"]["weyl"])
        b2.append(r.extra["bounds"]["vinogradov"])
    return {"K": [int(k) for k in Ks], "abs_T": vals,
            "weyl": fit_constants(Ks, vals, b1), "vinogradov": fit_constants(Ks, vals, b2)}
