"""Arithmetic tables: primes, Moebius, von Mangoldt and Chebyshev theta.

The tables are produced by a segmented sieve.  Each segment only needs the
primes up to the square root of the limit plus the segment itself, so the
working memory of the sieve is O(sqrt(limit) + segment); the returned tables
are of course O(limit).

The von Mangoldt function is stored exactly as the pair (p, e) with n = p**e.
Logarithms are taken only where a sum is formed.
"""

from __future__ import annotations

import csv
import functools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator

import numpy as np

from ._summation import fsum, prefix_sum
from .errors import ConfigError

MAX_LIMIT = 2**34
DEFAULT_SEGMENT = 2**20


@dataclass(frozen=True, eq=False)
class SieveTables:
    """Arithmetic tables over [1, limit], indexed directly by n (index 0 unused).

    Attributes:
        limit: largest n covered.
        is_prime: bool array.
        mobius: int8 array with values in {-1, 0, 1}.
        mangoldt_p: prime p with n = p**e, or 0 when n is not a prime power.
        mangoldt_e: exponent e, or 0.
        theta_prefix: theta(n) = sum of log p over p <= n (compensated).
    """

    limit: int
    is_prime: np.ndarray
    mobius: np.ndarray
    mangoldt_p: np.ndarray
    mangoldt_e: np.ndarray
    theta_prefix: np.ndarray
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def primes(self) -> np.ndarray:
        if "primes" not in self._cache:
            self._cache["primes"] = np.flatnonzero(self.is_prime).astype(np.int64)
        return self._cache["primes"]

    def primes_upto(self, n: int) -> np.ndarray:
        self.check(n)
        ps = self.primes
        return ps[: np.searchsorted(ps, n, side="right")]

    def mangoldt(self, lo: int = 1, hi: int | None = None) -> np.ndarray:
        """Lambda(n) for lo <= n <= hi as floats (log p on prime powers, else 0)."""
        hi = self.limit if hi is None else hi
        self.check(hi)
        p = self.mangoldt_p[lo:hi + 1]
        out = np.zeros(p.size, dtype=np.float64)
        nz = p > 0
        out[nz] = np.log(p[nz].astype(np.float64))
        return out

    def theta(self, n: int) -> float:
        self.check(n)
        return float(self.theta_prefix[n]) if n >= 1 else 0.0

    def check(self, n: int) -> None:
        if n > self.limit:
            raise ConfigError(f"n={n} exceeds sieve limit {self.limit}")


def _small_primes(n: int) -> np.ndarray:
    """Primes <= n by a plain sieve (n is at most sqrt of the table limit)."""
    if n < 2:
        return np.zeros(0, dtype=np.int64)
    flags = np.ones(n + 1, dtype=bool)
    flags[:2] = False
    for p in range(2, math.isqrt(n) + 1):
        if flags[p]:
            flags[p * p::p] = False
    return np.flatnonzero(flags).astype(np.int64)


def _sieve_segment(lo: int, hi: int, small: np.ndarray):
    """Moebius and prime-power data for lo <= n < hi."""
    n = np.arange(lo, hi, dtype=np.int64)
    rem = n.copy()
    mu = np.ones(hi - lo, dtype=np.int8)
    mp = np.zeros(hi - lo, dtype=np.int64)
    me = np.zeros(hi - lo, dtype=np.uint8)
    for p in small.tolist():
        start = (-lo) % p
        rem[start::p] //= p
        mu[start::p] *= -1
        p2 = p * p
        if p2 < hi:
            start2 = (-lo) % p2
            mu[start2::p2] = 0
        pe, e = p, 1
        while pe < hi:
            if pe >= lo:
                mp[pe - lo] = p
                me[pe - lo] = e
            pe *= p
            e += 1
    # one prime factor above sqrt(hi) may remain
    big = rem > 1
    mu[big] *= -1
    isnew = (rem == n) & (n > 1)
    mp[isnew] = n[isnew]
    me[isnew] = 1
    if lo == 0:
        mu[0] = 0
    return mu, mp, me


def iter_segments(limit: int, segment_size: int = DEFAULT_SEGMENT) -> Iterator[tuple]:
    """Yield ``(lo, hi, mobius, mangoldt_p, mangoldt_e)`` for consecutive
    segments covering [0, limit]."""
    small = _small_primes(math.isqrt(limit))
    for lo in range(0, limit + 1, segment_size):
        hi = min(lo + segment_size, limit + 1)
        yield (lo, hi) + _sieve_segment(lo, hi, small)


def _prime_segments(limit: int, segment_size: int):
    small = _small_primes(math.isqrt(limit))
    for lo in range(0, limit + 1, segment_size):
        hi = min(lo + segment_size, limit + 1)
        flags = np.ones(hi - lo, dtype=bool)
        if lo == 0:
            flags[: min(2, hi)] = False
        for p in small.tolist():
            p2 = p * p
            if p2 >= hi:
                break
            start = max(p2, ((lo + p - 1) // p) * p)
            flags[start - lo::p] = False
        yield lo, hi, np.flatnonzero(flags).astype(np.int64) + lo


def iter_prime_segments(limit: int, segment_size: int = DEFAULT_SEGMENT) -> Iterator[np.ndarray]:
    """Yield the primes <= limit segment by segment, in increasing order."""
    for _, _, primes in _prime_segments(limit, segment_size):
        yield primes


def build_sieve(limit: int, segment_size: int = DEFAULT_SEGMENT, threads: int = 1) -> SieveTables:
    """Build the arithmetic tables up to ``limit`` with a segmented sieve.

    Segments are independent and may be processed by several threads; they are
    always stitched together in increasing order.
    """
    limit = int(limit)
    if not 2 <= limit <= MAX_LIMIT:
        raise ConfigError(f"sieve limit must lie in [2, 2**34], got {limit}")
    if segment_size < 16:
        raise ConfigError("segment_size must be at least 16")
    small = _small_primes(math.isqrt(limit))
    bounds = [(lo, min(lo + segment_size, limit + 1)) for lo in range(0, limit + 1, segment_size)]

    mobius = np.empty(limit + 1, dtype=np.int8)
    ptype = np.uint32 if limit < 2**32 else np.int64
    mangoldt_p = np.empty(limit + 1, dtype=ptype)
    mangoldt_e = np.empty(limit + 1, dtype=np.uint8)

    def work(b):
        lo, hi = b
        mu, mp, me = _sieve_segment(lo, hi, small)
        mobius[lo:hi] = mu
        mangoldt_p[lo:hi] = mp
        mangoldt_e[lo:hi] = me

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(work, bounds))
    else:
        for b in bounds:
            work(b)

    idx = np.arange(limit + 1, dtype=np.int64)
    is_prime = (mangoldt_e == 1) & (mangoldt_p.astype(np.int64) == idx)
    logs = np.zeros(limit + 1, dtype=np.float64)
    logs[is_prime] = np.log(idx[is_prime].astype(np.float64))
    theta = prefix_sum(logs)
    return SieveTables(limit, is_prime, mobius, mangoldt_p, mangoldt_e, theta)


@functools.lru_cache(maxsize=4)
def get_tables(limit: int) -> SieveTables:
    """Process-wide cache of sieve tables (tables are immutable)."""
    return build_sieve(limit)


def mertens_sum(tables: SieveTables, N: int) -> float:
    """Sum of log(p)/p over primes p <= N, correctly rounded."""
    tables.check(N)
    ps = tables.primes_upto(N).astype(np.float64)
    return fsum(np.log(ps) / ps)


def mertens_partial_sums(checkpoints, segment_size: int = DEFAULT_SEGMENT) -> dict[int, float]:
    """Sum of log(p)/p up to each checkpoint, streaming the primes.

    Used for limits too large to hold full tables in memory.  Segment totals
    are exactly rounded and combined with ``fsum``.
    """
    pending = sorted(int(c) for c in checkpoints)
    out: dict[int, float] = {}
    totals: list[float] = []
    for lo, hi, primes in _prime_segments(pending[-1], segment_size):
        terms = np.log(primes.astype(np.float64)) / primes
        while pending and pending[0] < hi:
            c = pending.pop(0)
            out[c] = fsum(totals + [fsum(terms[primes <= c])])
        totals.append(fsum(terms))
    return out


def mertens_constant_estimate(checkpoints=(10**5, 10**6, 10**7, 10**8)) -> dict:
    """Empirical limit of log N - sum_{p<=N} log(p)/p over a decade grid.

    The estimate is the value at the largest checkpoint; ``increments`` holds
    the successive changes, whose shrinking magnitude is the stability check.
    """
    sums = mertens_partial_sums(checkpoints)
    diffs = {n: math.log(n) - s for n, s in sums.items()}
    ns = sorted(diffs)
    inc = [diffs[b] - diffs[a] for a, b in zip(ns, ns[1:])]
    return {
        "estimate": diffs[ns[-1]],
        "differences": {str(n): diffs[n] for n in ns},
        "increments": inc,
        "stable": all(abs(b) <= abs(a) for a, b in zip(inc, inc[1:])) if len(inc) > 1 else True,
    }


def mobius_divisor_sums(tables: SieveTables, n_max: int) -> np.ndarray:
    """Exact integer array s[n] = sum_{d | n} mu(d) for n <= n_max."""
    tables.check(n_max)
    s = np.zeros(n_max + 1, dtype=np.int64)
    mu = tables.mobius
    for d in np.flatnonzero(mu[1:n_max + 1]).tolist():
        d += 1
        s[d::d] += int(mu[d])
    return s


def mangoldt_divisor_sums(tables: SieveTables, n_max: int) -> np.ndarray:
    """s[n] = sum_{d | n} Lambda(d) for n <= n_max (fsum per entry is not
    needed: each n has at most ~log2(n) nonzero terms)."""
    tables.check(n_max)
    s = np.zeros(n_max + 1, dtype=np.float64)
    mp = tables.mangoldt_p[: n_max + 1].astype(np.int64)
    for d in np.flatnonzero(mp).tolist():
        s[d::d] += math.log(int(mp[d]))
    return s


@dataclass(frozen=True)
class VaughanCoefficients:
    """Coefficients a_j (j in a range) and b_j (j <= u**2) for a cut u.

    ``b_terms[j]`` maps each prime p to the integer c with b_j = sum c * log p,
    the exact symbolic form; ``b`` holds the reduced floating values.
    """

    u: int
    j_lo: int
    a: np.ndarray
    b: np.ndarray
    b_terms: dict


def vaughan_a(tables: SieveTables, u: int, j_max: int) -> np.ndarray:
    """a_j = sum_{d > u, d | j} mu(d) for 0 <= j <= j_max (exact integers)."""
    tables.check(j_max)
    a = np.zeros(j_max + 1, dtype=np.int64)
    mu = tables.mobius
    # sum over all d | j is [j == 1]; subtract the d <= u part
    for d in range(1, min(u, j_max) + 1):
        if mu[d]:
            a[d::d] -= int(mu[d])
    if j_max >= 1:
        a[1] += 1
    a[0] = 0
    return a


def vaughan_b_terms(tables: SieveTables, u: int) -> dict[int, dict[int, int]]:
    """Symbolic b_j = sum_{d, l <= u, d l = j} mu(d) Lambda(l) as {j: {p: coeff}}."""
    tables.check(max(u, 1))
    terms: dict[int, dict[int, int]] = {}
    mu = tables.mobius
    for ell in range(2, u + 1):
        p = int(tables.mangoldt_p[ell])
        if not p:
            continue
        for d in range(1, u + 1):
            m = int(mu[d])
            if m:
                row = terms.setdefault(d * ell, {})
                row[p] = row.get(p, 0) + m
    return {j: {p: c for p, c in row.items() if c} for j, row in terms.items()}


def vaughan_coefficients(tables: SieveTables, u: int, J: range) -> VaughanCoefficients:
    """Coefficients of Vaughan's identity with cut ``u`` over the index range J."""
    if u < 1:
        raise ConfigError("u must be >= 1")
    j_lo, j_hi = J.start, J.stop - 1
    if j_lo < 1 or j_hi > tables.limit:
        raise ConfigError(f"range {J} outside [1, {tables.limit}]")
    a_full = vaughan_a(tables, u, j_hi)
    terms = vaughan_b_terms(tables, u)
    b = np.zeros(j_hi - j_lo + 1, dtype=np.float64)
    for j, row in terms.items():
        if j_lo <= j <= j_hi:
            b[j - j_lo] = math.fsum(c * math.log(p) for p, c in row.items())
    return VaughanCoefficients(u, j_lo, a_full[j_lo:j_hi + 1].copy(), b, terms)


def write_csv(tables: SieveTables, path, limit: int | None = None) -> None:
    """Dump the tables as ``n,is_prime,mobius,mangoldt_p,mangoldt_e``."""
    limit = tables.limit if limit is None else limit
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["n", "is_prime", "mobius", "mangoldt_p", "mangoldt_e"])
        for n in range(1, limit + 1):
            p = int(tables.mangoldt_p[n])
            w.writerow([n, int(tables.is_prime[n]), int(tables.mobius[n]),
                        p if p else "", int(tables.mangoldt_e[n]) if p else ""])
