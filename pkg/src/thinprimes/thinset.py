"""Thin prime sets P+ and P-: primes p with {+-phi1(p)} < psi(p).

Membership is decided in float64 first.  Under the ``extended`` and
``exact-boundary`` policies every comparison whose float margin is inside the
error window of the float evaluation is redone with mpmath; ``exact-boundary``
additionally reports comparisons that remain within 2**-90 as boundary cases,
unless an exact integer certificate settles them (rational power, h1 = h2,
minus sign).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import mpmath
import numpy as np

from . import arith
from ._summation import EPS, fsum
from .errors import ConfigError
from .regvar import EXT_PREC, FunctionPair

PRECISIONS = ("standard", "extended", "exact-boundary")
RECHECK_WINDOW = 2.0**-40
BOUNDARY_WINDOW = 2.0**-90


@dataclass(frozen=True)
class ThinSetSpec:
    sign: str
    pair: FunctionPair
    precision: str = "standard"

    def __post_init__(self):
        if self.sign not in ("plus", "minus"):
            raise ConfigError(f"sign must be 'plus' or 'minus', got {self.sign!r}")
        if self.precision not in PRECISIONS:
            raise ConfigError(f"precision must be one of {PRECISIONS}")

    @property
    def domain_start(self) -> float:
        """Smallest argument where phi1 and the canonical window are both defined."""
        return max(self.pair.h1.y_min, self.pair.x_psi)

    @property
    def is_dual(self) -> bool:
        """True when P- coincides with the primes of the form floor(h(n))."""
        return self.sign == "minus" and self.pair.h1 == self.pair.h2


@dataclass
class Diagnostics:
    """Counters collected while classifying primes."""

    checked: int = 0
    rechecked: int = 0
    resolved_ties: list = field(default_factory=list)
    boundary_cases: list = field(default_factory=list)

    def merge(self, other: "Diagnostics") -> None:
        self.checked += other.checked
        self.rechecked += other.rechecked
        self.resolved_ties.extend(other.resolved_ties)
        self.boundary_cases.extend(other.boundary_cases)

    def as_dict(self) -> dict:
        return {
            "checked": self.checked,
            "rechecked": self.rechecked,
            "resolved_ties": [int(p) for p in self.resolved_ties],
            "boundary_cases": len(self.boundary_cases),
            "boundary_primes": [int(p) for p in self.boundary_cases],
        }


def iroot(x: int, k: int) -> int:
    """floor(x ** (1/k)) for integers x >= 0, k >= 1."""
    if x < 0:
        raise ValueError("negative radicand")
    if k == 1 or x < 2:
        return x
    if k == 2:
        return math.isqrt(x)
    r = 1 << ((x.bit_length() + k - 1) // k)  # r**k >= x
    while True:
        s = ((k - 1) * r + x // r ** (k - 1)) // k
        if s >= r:
            break
        r = s
    while r**k > x:
        r -= 1
    while (r + 1) ** k <= x:
        r += 1
    return r


def _float_margins(spec: ThinSetSpec, p: np.ndarray):
    """Float64 phi1(p), psi(p), the margin frac - psi and its error window."""
    x = p.astype(np.float64)
    phi1 = spec.pair.h1.phi(x)
    psi = spec.pair.psi(x)
    if spec.sign == "plus":
        frac = phi1 - np.floor(phi1)
    else:
        frac = np.ceil(phi1) - phi1
    margin = frac - psi
    window = RECHECK_WINDOW + 64 * EPS * (np.abs(phi1) + 1.0)
    return phi1, psi, margin, window


def _mp_margin(spec: ThinSetSpec, p: int):
    """margin {+-phi1(p)} - psi(p) at EXT_PREC bits."""
    with mpmath.workprec(EXT_PREC):
        phi1 = spec.pair.h1.phi_mp(p)
        psi = spec.pair.psi_mp(p)
        frac = phi1 - mpmath.floor(phi1) if spec.sign == "plus" else mpmath.ceil(phi1) - phi1
        return frac - psi


def _exact_minus_certificate(spec: ThinSetSpec, p: int) -> bool | None:
    """Exact membership for the dual configuration with a rational power.

    With h(x) = x**(a/b) and the minus sign, p is a member iff the least
    integer n >= phi(p) satisfies n < phi(p + 1), i.e. n**a < (p + 1)**b.
    Returns None when no certificate applies.
    """
    if not (spec.is_dual and spec.pair.h1.is_algebraic):
        return None
    a, b = spec.pair.h1.c.numerator, spec.pair.h1.c.denominator
    n = iroot(p**b, a)
    if n**a < p**b:
        n += 1
    return n**a < (p + 1) ** b


def _refine(spec: ThinSetSpec, p: np.ndarray, member: np.ndarray, near: np.ndarray,
            diag: Diagnostics) -> None:
    for idx in np.flatnonzero(near):
        q = int(p[idx])
        diag.rechecked += 1
        m = _mp_margin(spec, q)
        if spec.precision == "exact-boundary" and abs(m) < BOUNDARY_WINDOW:
            cert = _exact_minus_certificate(spec, q)
            if cert is None:
                diag.boundary_cases.append(q)
                member[idx] = bool(m < 0)
            else:
                diag.resolved_ties.append(q)
                member[idx] = cert
        else:
            member[idx] = bool(m < 0)


def member_mask(spec: ThinSetSpec, primes: np.ndarray, diag: Diagnostics | None = None) -> np.ndarray:
    """Membership of each entry of ``primes`` (assumed prime) in the thin set."""
    primes = np.asarray(primes, dtype=np.int64)
    diag = diag if diag is not None else Diagnostics()
    member = np.zeros(primes.size, dtype=bool)
    ok = primes >= spec.domain_start
    p = primes[ok]
    diag.checked += int(p.size)
    if p.size == 0:
        return member
    _, _, margin, window = _float_margins(spec, p)
    sub = margin < 0
    if spec.precision != "standard":
        _refine(spec, p, sub, np.abs(margin) <= window, diag)
    member[ok] = sub
    return member


def _check_prime(tables: arith.SieveTables | None, p: int) -> bool:
    if tables is None:
        return p >= 2 and all(p % q for q in range(2, math.isqrt(p) + 1))
    tables.check(p)
    return bool(tables.is_prime[p])


def is_member(spec: ThinSetSpec, p: int, tables: arith.SieveTables | None = None,
              diag: Diagnostics | None = None) -> bool:
    """True iff p is prime and {+-phi1(p)} < psi(p) under the spec's precision."""
    if p < 2 or not _check_prime(tables, p):
        return False
    return bool(member_mask(spec, np.array([p]), diag)[0])


def floor_mask(spec: ThinSetSpec, primes: np.ndarray, diag: Diagnostics | None = None) -> np.ndarray:
    """Floor form of the membership test: floor(s) - floor(s - psi) == 1 with s = +-phi1(p)."""
    primes = np.asarray(primes, dtype=np.int64)
    diag = diag if diag is not None else Diagnostics()
    out = np.zeros(primes.size, dtype=bool)
    ok = primes >= spec.domain_start
    p = primes[ok]
    diag.checked += int(p.size)
    if p.size == 0:
        return out
    x = p.astype(np.float64)
    s = spec.pair.h1.phi(x)
    if spec.sign == "minus":
        s = -s
    psi = spec.pair.psi(x)
    t = s - psi
    sub = (np.floor(s) - np.floor(t)) == 1
    if spec.precision != "standard":
        window = RECHECK_WINDOW + 64 * EPS * (np.abs(s) + 1.0)
        near = (np.abs(s - np.rint(s)) <= window) | (np.abs(t - np.rint(t)) <= window)
        for idx in np.flatnonzero(near):
            q = int(p[idx])
            diag.rechecked += 1
            with mpmath.workprec(EXT_PREC):
                sv = spec.pair.h1.phi_mp(q)
                if spec.sign == "minus":
                    sv = -sv
                tv = sv - spec.pair.psi_mp(q)
                val = mpmath.floor(sv) - mpmath.floor(tv) == 1
                tight = abs(tv - mpmath.nint(tv)) < BOUNDARY_WINDOW
            if spec.precision == "exact-boundary" and tight:
                cert = _exact_minus_certificate(spec, q)
                if cert is None:
                    diag.boundary_cases.append(q)
                else:
                    diag.resolved_ties.append(q)
                    val = cert
            sub[idx] = bool(val)
    out[ok] = sub
    return out


def floor_characterization(spec: ThinSetSpec, p: int, tables: arith.SieveTables | None = None) -> bool:
    """Membership through the floor difference; agrees with :func:`is_member` on primes."""
    if p < 2 or not _check_prime(tables, p):
        return False
    return bool(floor_mask(spec, np.array([p]))[0])


def enumerate_members(spec: ThinSetSpec, limit: int, tables: arith.SieveTables | None = None,
                      diag: Diagnostics | None = None,
                      segment_size: int = arith.DEFAULT_SEGMENT) -> np.ndarray:
    """All members of the thin set in [1, limit], ascending.

    With ``tables`` the primes are read from the sieve; otherwise the sieve is
    streamed segment by segment so memory stays proportional to the segment.
    """
    diag = diag if diag is not None else Diagnostics()
    if limit < 2:
        return np.zeros(0, dtype=np.int64)
    if tables is not None:
        tables.check(limit)
        chunks = [tables.primes_upto(limit)]
    else:
        chunks = arith.iter_prime_segments(limit, segment_size)
    parts = [p[member_mask(spec, p, diag)] for p in chunks]
    return np.concatenate(parts) if parts else np.zeros(0, dtype=np.int64)


def floor_values(spec: ThinSetSpec, limit: int) -> np.ndarray:
    """floor(h(n)) for all n >= 1 with floor(h(n)) <= limit (h = h1), ascending.

    Rational powers use exact integer roots; log factors use float64 with an
    mpmath recheck whenever h(n) is within rounding distance of an integer.
    """
    f = spec.pair.h1
    n_max = int(math.floor(f.phi(float(limit) + 1.0))) + 2
    if f.is_algebraic:
        a, b = f.c.numerator, f.c.denominator
        vals = [iroot(n**a, b) for n in range(1, n_max + 1)]
        arr = np.array(vals, dtype=np.int64)
    else:
        n = np.arange(max(1, int(math.ceil(f.x_min))), n_max + 1, dtype=np.float64)
        hv = f.h(n)
        arr = np.floor(hv).astype(np.int64)
        near = np.abs(hv - np.rint(hv)) <= 64 * EPS * hv
        for idx in np.flatnonzero(near):
            with mpmath.workprec(EXT_PREC):
                arr[idx] = int(mpmath.floor(f.h_mp(int(n[idx]))))
    arr = arr[arr <= limit]
    return np.unique(arr)


def enumerate_dual(spec: ThinSetSpec, limit: int, tables: arith.SieveTables) -> np.ndarray:
    """Second enumeration of P- as {floor(h(n))} intersected with the primes."""
    if not spec.is_dual:
        raise ConfigError("dual enumeration needs sign=minus and h1 == h2")
    if limit < 2:
        return np.zeros(0, dtype=np.int64)
    tables.check(limit)
    vals = floor_values(spec, limit)
    vals = vals[(vals >= 2) & (vals >= spec.domain_start)]
    return vals[tables.is_prime[vals]]


# ---------------------------------------------------------------------------
# counting
# ---------------------------------------------------------------------------

def _simpson_panel(fn, a, b, fa, fm, fb, whole, tol, depth, out):
    m = 0.5 * (a + b)
    lm, rm = 0.5 * (a + m), 0.5 * (m + b)
    flm, frm = fn(np.array([lm, rm]))
    left = (m - a) / 6 * (fa + 4 * flm + fm)
    right = (b - m) / 6 * (fm + 4 * frm + fb)
    if depth <= 0 or abs(left + right - whole) <= 15 * tol:
        out.append(left + right + (left + right - whole) / 15)
        return
    _simpson_panel(fn, a, m, fa, flm, fm, left, tol / 2, depth - 1, out)
    _simpson_panel(fn, m, b, fm, frm, fb, right, tol / 2, depth - 1, out)


def adaptive_simpson(fn, a: float, b: float, rel_tol: float = 1e-10, panels_per_decade: int = 16) -> float:
    """Adaptive composite Simpson rule on geometrically spaced panels.

    ``fn`` is vectorised.  Each panel is refined until its Richardson error
    estimate is below ``rel_tol`` times the panel's own magnitude; the panel
    totals are added with :func:`fsum`.
    """
    if b <= a:
        return 0.0
    n_panels = max(1, int(math.ceil(panels_per_decade * math.log10(b / a))))
    edges = np.geomspace(a, b, n_panels + 1)
    edges[0], edges[-1] = a, b
    out: list[float] = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        mid = 0.5 * (lo + hi)
        flo, fmid, fhi = fn(np.array([lo, mid, hi]))
        whole = (hi - lo) / 6 * (flo + 4 * fmid + fhi)
        _simpson_panel(fn, lo, hi, flo, fmid, fhi, whole, rel_tol * abs(whole), 40, out)
    return fsum(out)


def psi_over_log_integral(spec: ThinSetSpec, lo: float, hi: float, rel_tol: float = 1e-10) -> float:
    """Integral of psi(x)/log(x) over [lo, hi]."""
    pair = spec.pair
    return adaptive_simpson(lambda x: pair.psi(x) / np.log(x), lo, hi, rel_tol)


def count_vs_integral(spec: ThinSetSpec, limit: int, tables: arith.SieveTables | None = None) -> dict:
    """Member count against the integral of psi/log over [2, limit].

    Also reports the intermediate prime sum of psi(p) over all primes <= limit
    and its relative gap to the integral.  A vanishing integral gives NaN ratios
    with ``degenerate`` set.
    """
    diag = Diagnostics()
    members = enumerate_members(spec, limit, tables, diag)
    lo = max(2.0, spec.domain_start)
    integral = psi_over_log_integral(spec, lo, float(limit)) if limit > lo else 0.0
    if tables is not None:
        primes = tables.primes_upto(limit)
    else:
        primes = np.concatenate(list(arith.iter_prime_segments(limit))) if limit >= 2 else np.zeros(0, np.int64)
    primes = primes[primes >= spec.domain_start]
    psi_sum = fsum(spec.pair.psi(primes.astype(np.float64))) if primes.size else 0.0
    degenerate = not integral > 0
    ratio = members.size / integral if not degenerate else math.nan
    return {
        "count": int(members.size),
        "prime_count": int(primes.size),
        "integral": integral,
        "ratio": ratio,
        "prime_psi_sum": psi_sum,
        "prime_psi_sum_rel_gap": (psi_sum - integral) / integral if not degenerate else math.nan,
        "integral_lower_limit": lo,
        "degenerate": degenerate,
        "boundary_cases": len(diag.boundary_cases),
        "diagnostics": diag.as_dict(),
    }
