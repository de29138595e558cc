"""Regularly varying model functions h(x) = x**c * log(x)**A and their inverses.

A :class:`ModelFunction` carries the exponent ``c`` (a rational in [1, 2)) and
the log power ``A``.  Its inverse ``phi`` is evaluated three ways:

* vectorised float64 (the workhorse for sieving-scale loops),
* scalar Newton iteration with a bisection fallback (:func:`inverse_phi`),
* mpmath at :data:`EXT_PREC` bits for near-tie re-evaluation.

Derivatives of the inverse come from reverting the Taylor series of ``h``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property

import mpmath
import numpy as np

from .errors import ConfigError, NumericDomainError

# working precision (bits) of the extended path
EXT_PREC = 128

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(16)


def as_fraction(value) -> Fraction:
    """Interpret a user supplied exponent; decimal strings and floats keep their
    decimal meaning (``1.05`` -> 21/20)."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(repr(value))
    return Fraction(str(value).strip())


# ---------------------------------------------------------------------------
# truncated power series helpers (coefficient arrays, index = power)
# ---------------------------------------------------------------------------

def _series_pow(a: np.ndarray, alpha: float, n: int) -> np.ndarray:
    """Coefficients of a(u)**alpha up to u**n (a[0] != 0), J.C.P. Miller recurrence."""
    b = np.zeros(n + 1)
    b[0] = a[0] ** alpha
    for m in range(1, n + 1):
        k = np.arange(1, min(m, a.size - 1) + 1)
        b[m] = np.sum(((alpha + 1) * k - m) * a[k] * b[m - k]) / (m * a[0])
    return b


def _series_mul(a: np.ndarray, b: np.ndarray, n: int) -> np.ndarray:
    return np.convolve(a, b)[: n + 1]


def _series_revert(h: np.ndarray, n: int) -> np.ndarray:
    """Compositional inverse g of h (h[0] = 0, h[1] != 0): h(g(v)) = v + O(v**(n+1))."""
    g = np.zeros(n + 1)
    g[1] = 1.0 / h[1]
    for m in range(2, n + 1):
        comp = np.zeros(n + 1)
        power = g.copy()
        for k in range(1, m + 1):
            comp += h[k] * power
            power = _series_mul(power, g, n)
        g[m] = -comp[m] / h[1]
    return g


@dataclass(frozen=True)
class ModelFunction:
    """h(x) = x**c * log(x)**A on [x_min, oo).

    ``c`` must lie in [1, 2); ``c == 1`` requires ``A > 0`` so that the slowly
    varying factor tends to infinity.  ``x_min`` defaults to 1 when ``A == 0``
    and otherwise to the first point >= e from which h is increasing and convex.
    """

    c: Fraction
    A: float = 0.0
    x_min: float | None = None
    _memo: dict = field(default_factory=dict, repr=False, compare=False, hash=False)

    def __post_init__(self):
        c = as_fraction(self.c)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "A", float(self.A))
        if not (1 <= c < 2):
            raise ConfigError(f"exponent c must lie in [1, 2), got {c}")
        if self.A < 0:
            raise ConfigError("log power A must be >= 0")
        if c == 1 and self.A <= 0:
            raise ConfigError("c = 1 requires A > 0 (slowly varying part must grow)")
        if self.x_min is None:
            object.__setattr__(self, "x_min", self._default_x_min())
        elif self.x_min < 1:
            raise ConfigError("x_min must be >= 1")
        grid = np.geomspace(max(self.x_min, 1.0 + 1e-9), 1e12, 400)
        if np.any(self.h_second(grid) < -1e-12 * np.abs(self.h(grid)) / grid**2):
            raise ConfigError(f"h is not convex on [{self.x_min}, oo)")

    def _default_x_min(self) -> float:
        if self.A == 0:
            return 1.0
        c, A = float(self.c), self.A
        # h'' has the sign of c(c-1)L^2 + A(2c-1)L + A(A-1), L = log x
        if c == 1:
            root = 1.0 - A
        else:
            qa, qb, qc = c * (c - 1), A * (2 * c - 1), A * (A - 1)
            disc = qb * qb - 4 * qa * qc
            root = (-qb + math.sqrt(disc)) / (2 * qa) if disc >= 0 else -math.inf
        return max(math.e, math.exp(root) if root > 0 else 0.0)

    # -- basic quantities ----------------------------------------------------
    @property
    def gamma(self) -> Fraction:
        return 1 / self.c

    @property
    def is_algebraic(self) -> bool:
        """True when h is a pure rational power (exact integer certificates exist)."""
        return self.A == 0

    @cached_property
    def y_min(self) -> float:
        return float(self.h(self.x_min))

    def h(self, x):
        x = np.asarray(x, dtype=np.float64)
        out = x ** float(self.c)
        if self.A:
            out = out * np.log(x) ** self.A
        return out if out.ndim else float(out)

    def h_prime(self, x):
        x = np.asarray(x, dtype=np.float64)
        c, A = float(self.c), self.A
        if not A:
            return c * x ** (c - 1)
        L = np.log(x)
        return x ** (c - 1) * L ** (A - 1) * (c * L + A)

    def h_second(self, x):
        x = np.asarray(x, dtype=np.float64)
        c, A = float(self.c), self.A
        if not A:
            return c * (c - 1) * x ** (c - 2)
        L = np.log(x)
        return x ** (c - 2) * L ** (A - 2) * (c * (c - 1) * L * L + A * (2 * c - 1) * L + A * (A - 1))

    def h_mp(self, x):
        x = mpmath.mpf(x)
        val = x ** (mpmath.mpf(self.c.numerator) / self.c.denominator)
        if self.A:
            val *= mpmath.log(x) ** mpmath.mpf(self.A)
        return val

    def sigma(self, y):
        """Correction factor: 1 when c > 1, min(1, A / log y) when c == 1."""
        y = np.asarray(y, dtype=np.float64)
        if self.c > 1:
            out = np.ones_like(y)
        else:
            out = np.minimum(1.0, self.A / np.log(y))
        return out if out.ndim else float(out)

    # -- inverse -------------------------------------------------------------
    def phi(self, y):
        """Vectorised float64 inverse of h (no domain check)."""
        y = np.asarray(y, dtype=np.float64)
        if not self.A:
            out = y ** float(self.gamma)
            return out if out.ndim else float(out)
        c, A = float(self.c), self.A
        logy = np.log(y)
        t = np.maximum(logy / c, 1.0)
        for _ in range(60):
            g = c * t + A * np.log(t) - logy
            step = g / (c + A / t)
            t = np.maximum(t - step, 1e-300)
            if np.all(np.abs(step) <= 4e-16 * t):
                break
        x = np.exp(t)
        # final correction in x-space removes the error amplified by exp
        x = x - (self.h(x) - y) / self.h_prime(x)
        return x if x.ndim else float(x)

    def phi_mp(self, y):
        """Inverse of h at :data:`EXT_PREC` bits or the ambient mpmath precision,
        whichever is higher (y may be int, float or mpf)."""
        with mpmath.workprec(max(EXT_PREC, mpmath.mp.prec)):
            if not self.A:
                a, b = self.c.numerator, self.c.denominator
                if isinstance(y, (int, np.integer)):
                    return mpmath.root(mpmath.mpf(int(y)) ** b, a)
                return mpmath.mpf(y) ** (mpmath.mpf(b) / a)
            yv = mpmath.mpf(y)
            x = mpmath.mpf(self.phi(float(yv)))
            for _ in range(12):
                hx = self.h_mp(x)
                L = mpmath.log(x)
                dh = x ** (mpmath.mpf(self.c.numerator) / self.c.denominator - 1) * \
                    L ** (mpmath.mpf(self.A) - 1) * (mpmath.mpf(self.c.numerator) / self.c.denominator * L + self.A)
                step = (hx - yv) / dh
                x -= step
                if abs(step) <= abs(x) * mpmath.mpf(2) ** (-mpmath.mp.prec + 4):
                    break
            return +x

    def phi_taylor(self, y: float, order: int) -> np.ndarray:
        """Derivatives phi^(k)(y) for k = 0..order from series reversion."""
        x0 = float(self.phi(y))
        c, A = float(self.c), self.A
        n = order
        k = np.arange(n + 1)
        # (1 + u)**c
        binom = np.ones(n + 1)
        for m in range(1, n + 1):
            binom[m] = binom[m - 1] * (c - m + 1) / m
        H = binom
        if A:
            L0 = math.log(x0)
            s = np.zeros(n + 1)
            s[0] = 1.0
            s[1:] = ((-1.0) ** (k[1:] + 1)) / k[1:] / L0
            H = _series_mul(H, _series_pow(s, A, n), n)
        v = H.copy()
        v[0] = 0.0
        g = _series_revert(v, n)
        y0 = float(self.h(x0))
        fact = np.array([math.factorial(int(j)) for j in k], dtype=np.float64)
        out = fact * x0 * g / y0 ** k
        out[0] = x0
        return out


def inverse_phi(f: ModelFunction, y: float, precision: str = "standard"):
    """x with h(x) = y.

    Standard precision returns a float with relative residual <= 1e-14 using
    Newton steps safeguarded by a bracketing interval.  Extended precision
    returns an ``mpmath.mpf`` with relative residual <= 1e-28.
    """
    if y < f.y_min * (1 - 1e-15):
        raise NumericDomainError(f"y={y} lies below h(x_min)={f.y_min}")
    if precision == "extended":
        x = f.phi_mp(y)
        with mpmath.workprec(EXT_PREC):
            if abs(f.h_mp(x) - y) > mpmath.mpf("1e-28") * abs(mpmath.mpf(y)):
                raise NumericDomainError(f"extended inverse did not converge at y={y}")
        return x
    if precision != "standard":
        raise ConfigError(f"unknown precision {precision!r}")
    y = float(y)
    lo, hi = f.x_min, max(f.x_min * 2, 2.0)
    while f.h(hi) < y:
        lo, hi = hi, hi * 2
    x = min(max(float(f.phi(y)), lo), hi)
    for _ in range(200):
        r = f.h(x) - y
        if abs(r) <= 1e-14 * abs(y):
            return x
        if r > 0:
            hi = x
        else:
            lo = x
        step = x - r / f.h_prime(x)
        x = step if lo < step < hi else 0.5 * (lo + hi)
    raise NumericDomainError(f"Newton/bisection did not converge at y={y}")


def phi_derivative(f: ModelFunction, k: int, x: float, d: int | None = None,
                   mode: str = "series") -> float:
    """k-th derivative of the inverse function at x.

    ``mode="series"`` reverts the Taylor series of h; ``mode="fd"`` is the
    cross-check: high precision numerical differentiation of the mpmath inverse.
    """
    kmax = (d + 2) if d is not None else 12
    if not 0 <= k <= kmax:
        raise ConfigError(f"derivative order {k} outside [0, {kmax}]")
    if x < f.y_min:
        raise NumericDomainError(f"x={x} lies below h(x_min)={f.y_min}")
    if mode == "series":
        return float(f.phi_taylor(x, max(k, 1))[k])
    if mode == "fd":
        with mpmath.workprec(EXT_PREC):
            return float(mpmath.diff(f.phi_mp, mpmath.mpf(x), k))
    raise ConfigError(f"unknown mode {mode!r}")


@dataclass(frozen=True)
class FunctionPair:
    """h1 drives the fractional part condition, h2 the window psi."""

    h1: ModelFunction
    h2: ModelFunction

    @property
    def gamma1(self) -> Fraction:
        return self.h1.gamma

    @property
    def gamma2(self) -> Fraction:
        return self.h2.gamma

    def sigma1(self, y):
        return self.h1.sigma(y)

    def sigma2(self, y):
        return self.h2.sigma(y)

    @cached_property
    def x_psi(self) -> float:
        """Smallest x from which the canonical window satisfies psi(x) <= 1/2."""
        lo = self.h2.y_min
        if self.psi(lo) <= 0.5:
            return lo
        hi = lo + 1.0
        while self.psi(hi) > 0.5:
            hi = lo + 2 * (hi - lo)
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if self.psi(mid) > 0.5:
                lo = mid
            else:
                hi = mid
        return hi

    def psi(self, x):
        """Canonical window phi2(x + 1) - phi2(x), evaluated without cancellation."""
        f = self.h2
        x = np.asarray(x, dtype=np.float64)
        if not f.A:
            g = float(f.gamma)
            out = x ** g * np.expm1(g * np.log1p(1.0 / x))
        else:
            out = np.zeros_like(x)
            flat = x.ravel()
            res = out.ravel()
            for start in range(0, flat.size, 1 << 16):
                xs = flat[start:start + (1 << 16)]
                s = xs[:, None] + 0.5 * (_GL_NODES[None, :] + 1.0)
                dphi = 1.0 / f.h_prime(f.phi(s))
                res[start:start + xs.size] = 0.5 * dphi @ _GL_WEIGHTS
            out = res.reshape(x.shape)
        return out if out.ndim else float(out)

    def psi_mp(self, x):
        with mpmath.workprec(max(EXT_PREC, mpmath.mp.prec)):
            return self.h2.phi_mp(x + 1) - self.h2.phi_mp(x)


def window_psi(pair: FunctionPair, x: float, k: int = 0) -> float:
    """k-th derivative of the canonical window at x (x >= pair.x_psi)."""
    if x < pair.x_psi:
        raise NumericDomainError(f"x={x} lies below x_psi={pair.x_psi:.12g}, where psi <= 1/2 starts")
    if k == 0:
        return float(pair.psi(x))
    if k < 0:
        raise ConfigError("k must be >= 0")
    a = pair.h2.phi_taylor(x + 1.0, k)[k]
    b = pair.h2.phi_taylor(x, k)[k]
    return float(a - b)


# ---------------------------------------------------------------------------
# exponent conditions
# ---------------------------------------------------------------------------
# Each row is (coef of 1-gamma1, coef of 1-gamma2, coef of epsilon, rhs) and
# means  a(1-g1) + b(1-g2) + e*eps < rhs.  Coefficients are exact.

def _rows(d: int, table: str) -> list[tuple[Fraction, Fraction, Fraction, Fraction]]:
    F = Fraction
    eps_coef = {
        "section1": {1: (0, 0), 2: (0, 0), "mid": (0, 0), "high": (0,)},
        "thm3": {1: (84, 60), 2: (360, 160), "mid": (6, 4), "high": (6,)},
        "thm4": {1: (164, 120), 2: (720, 320), "mid": (12, 8), "high": (12,)},
    }
    if table not in eps_coef:
        raise ConfigError(f"unknown table {table!r}")
    e = eps_coef[table]
    if d == 1:
        return [(F(1), F(15), F(e[1][0]), F(1)), (F(3), F(12), F(e[1][1]), F(2))]
    if d == 2:
        # the (1-gamma2) coefficient of the first row differs between tables
        b = F(52) if table == "thm4" else F(62)
        return [(F(3), b, F(e[2][0]), F(3)), (F(4), F(32), F(e[2][1]), F(3))]
    if 3 <= d <= 9:
        t = F(1, 3 * 2**d)
        return [(t, 1 + F(1, 6 * (2**d - 1)), F(e["mid"][0]), t),
                (F(0), F(1), F(e["mid"][1]), F(1, 4 * 2**d))]
    t = F(2, 3 * d * (d + 1) ** 2)
    return [(t, 1 + F(1, 3 * d * (d + 1)), F(e["high"][0]), t)]


def check_exponent_conditions(d: int, gamma1, gamma2, table: str = "thm3") -> dict:
    """Evaluate the exponent system for polynomial degree d.

    Returns ``admissible``, ``max_epsilon`` (the supremum of admissible epsilon;
    ``inf`` for the epsilon-free table when admissible, 0 when infeasible),
    ``max_epsilon_exact`` as a Fraction, the index of the binding row and the
    slack of every row at epsilon = 0.
    """
    if d < 1:
        raise ConfigError("degree d must be >= 1")
    g1, g2 = Fraction(gamma1), Fraction(gamma2)
    if not (0 < g1 <= 1 and 0 < g2 <= 1):
        raise ConfigError("gamma values must lie in (0, 1]")
    rows = _rows(d, table)
    slacks = [rhs - a * (1 - g1) - b * (1 - g2) for a, b, _, rhs in rows]
    admissible = all(s > 0 for s in slacks)
    result = {
        "d": d,
        "table": table,
        "admissible": admissible,
        "slacks": [float(s) for s in slacks],
        "binding_constraint": None,
        "warnings": [],
    }
    if not admissible:
        result["binding_constraint"] = min(range(len(rows)), key=lambda i: slacks[i])
        result.update(max_epsilon=0.0, max_epsilon_exact=Fraction(0))
    else:
        bounds = [(s / e, i) for (_, _, e, _), s, i in zip(rows, slacks, range(len(rows))) if e > 0]
        if bounds:
            best, idx = min(bounds)
            result.update(max_epsilon=float(best), max_epsilon_exact=best, binding_constraint=idx)
        else:
            result.update(max_epsilon=math.inf, max_epsilon_exact=None)
    if d == 2:
        first = [3 * (1 - g1) + coef * (1 - g2) < 3 for coef in (62, 52)]
        if first[0] != first[1]:
            result["warnings"].append(
                "coefficient 62 vs 52 on (1-gamma2) in the first d=2 row changes admissibility")
    return result
