"""r-variation of finite sequences.

V_r(a) = sup over increasing index chains k_0 < ... < k_J of
(sum_j |a_{k_j} - a_{k_{j-1}}|**r)**(1/r).

:func:`vr_exact` is an O(n^2) dynamic program on r-th powers.
:func:`vr_bruteforce` enumerates every subsequence and serves as the oracle for
short inputs.  :func:`vr_split` computes the long variation over the lacunary
set Z_rho = {floor(2**(k**rho)) : k >= 0} and the short variation inside the
blocks between consecutive points of Z_rho.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from fractions import Fraction

import mpmath
import numpy as np

from ._summation import fsum
from .errors import ConfigError

# relative slack used when comparing DP candidates for the lexicographic tie-break
TIE_TOL = 1e-12


@dataclass
class VariationResult:
    value: float
    subsequence: list[int]
    r: float
    extra: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        out = {"value": self.value, "subsequence": self.subsequence, "r": self.r}
        out.update(self.extra)
        return out


def _as_array(seq) -> np.ndarray:
    a = np.asarray(seq)
    if a.ndim != 1 or a.size == 0:
        raise ConfigError("sequence must be one dimensional and non-empty")
    if not np.all(np.isfinite(a)):
        raise ConfigError("sequence entries must be finite")
    return a.astype(np.complex128) if np.iscomplexobj(a) else a.astype(np.float64)


def _check_r(r: float) -> None:
    if not r >= 1:
        raise ConfigError(f"r must be >= 1, got {r}")


def turning_points(a: np.ndarray) -> np.ndarray:
    """Indices of the first element, the last element and every strict local
    extremum of a real sequence (plateaus represented by their first index).

    Restricting to these indices does not change V_r for r >= 1: along a
    monotone stretch the single jump between its ends dominates any split.
    """
    keep = np.flatnonzero(np.concatenate(([True], np.diff(a) != 0)))
    b = a[keep]
    if b.size <= 2:
        return keep
    d = np.sign(np.diff(b))
    turn = np.flatnonzero(d[1:] != d[:-1]) + 1
    return keep[np.concatenate(([0], turn, [b.size - 1]))]


def _dp(a: np.ndarray, r: float) -> tuple[float, list[int]]:
    n = a.size
    g = np.zeros(n)
    nxt = np.full(n, -1, dtype=np.int64)
    for i in range(n - 2, -1, -1):
        cand = np.abs(a[i + 1:] - a[i]) ** r + g[i + 1:]
        best = cand.max()
        if best > 0:
            j = int(np.argmax(cand >= best * (1 - TIE_TOL)))
            g[i] = cand[j]
            nxt[i] = i + 1 + j
    top = g.max()
    if top <= 0:
        return 0.0, [0]
    i = int(np.argmax(g >= top * (1 - TIE_TOL)))
    chain = [i]
    while nxt[i] >= 0:
        i = int(nxt[i])
        chain.append(i)
    jumps = np.abs(np.diff(a[chain])) ** r
    return fsum(jumps), chain


def vr_exact(seq, r: float, reduce: bool = False) -> VariationResult:
    """Exact V_r with an optimal chain.

    Ties are broken towards the lexicographically smallest index list.  With
    ``reduce`` (real input only) the DP runs on :func:`turning_points`, which
    keeps the value and maps the chain back to original indices.  r = 1 uses
    the closed form: the full sum of consecutive differences.
    """
    _check_r(r)
    a = _as_array(seq)
    if r == 1:
        d = np.abs(np.diff(a))
        nz = np.flatnonzero(d)
        chain = list(range(int(nz[-1]) + 2)) if nz.size else [0]
        return VariationResult(fsum(d), chain, 1.0)
    idx = None
    if reduce and not np.iscomplexobj(a):
        idx = turning_points(a)
        a = a[idx]
    total, chain = _dp(a, r)
    if idx is not None:
        chain = [int(idx[k]) for k in chain]
    return VariationResult(total ** (1 / r), chain, float(r), {"r_power": total})


@functools.lru_cache(maxsize=16)
def _pair_matrix(n: int) -> np.ndarray:
    """Rows: all non-empty subsets of range(n); columns: pairs (i<j).

    Entry 1 when i and j are consecutive elements of the subset."""
    pairs = {(i, j): c for c, (i, j) in enumerate((i, j) for i in range(n) for j in range(i + 1, n))}
    mat = np.zeros((2**n, len(pairs)), dtype=np.float64)
    for mask in range(1, 2**n):
        elems = [i for i in range(n) if mask >> i & 1]
        for i, j in zip(elems, elems[1:]):
            mat[mask, pairs[(i, j)]] = 1.0
    return mat


def vr_bruteforce(seq, r: float) -> float:
    """V_r by enumerating all 2**n subsequences (n <= 14)."""
    _check_r(r)
    a = _as_array(seq)
    n = a.size
    if n > 14:
        raise ConfigError("brute force limited to n <= 14")
    if n == 1:
        return 0.0
    i, j = np.triu_indices(n, 1)
    w = np.abs(a[j] - a[i]) ** r
    return float((_pair_matrix(n) @ w).max()) ** (1 / r)


def z_value(rho: float, k: int) -> int:
    """N_k = floor(2**(k**rho)), exact.

    When k**rho is an integer the power of two is exact; otherwise the floor is
    confirmed with mpmath whenever the float value is close to an integer.
    """
    frac = Fraction(rho).limit_denominator(10**6)
    t = k**rho
    m = round(t)
    if abs(t - m) < 1e-9 and k ** frac.numerator == m ** frac.denominator:
        return 2**m
    v = 2.0**t
    if abs(v - round(v)) < 1e-6 * max(1.0, v) or v > 2**52:
        with mpmath.workprec(200):
            return int(mpmath.floor(mpmath.mpf(2) ** (mpmath.mpf(k) ** mpmath.mpf(rho))))
    return int(math.floor(v))


def z_rho(rho: float, limit: int) -> list[int]:
    """Distinct values N_k <= limit for k = 0, 1, 2, ..., ascending."""
    if not 0 < rho < 1:
        raise ConfigError("rho must lie in (0, 1)")
    return list(_z_rho_cached(float(rho), int(limit)))


@functools.lru_cache(maxsize=64)
def _z_rho_cached(rho: float, limit: int) -> tuple[int, ...]:
    out: list[int] = []
    k = 0
    while True:
        val = z_value(rho, k)
        if val > limit:
            break
        if not out or val != out[-1]:
            out.append(val)
        k += 1
    return tuple(out)


def vr_split(seq, r: float, rho: float, start: int = 1, reduce: bool = False) -> dict:
    """Long and short variation of a sequence indexed by start, start+1, ...

    long: V_r of the values at indices in Z_rho (plus the first index as an
    anchor when it is not itself in Z_rho).
    short: l^r combination of V_r over the blocks [N_{k-1}, N_k), including
    the partial block before the first point of Z_rho and the trailing block
    that reaches the end of the data.
    """
    _check_r(r)
    a = _as_array(seq)
    end = start + a.size - 1
    zs = [z for z in z_rho(rho, end) if z >= start]
    anchors = zs if zs and zs[0] == start else [start] + zs
    long_res = vr_exact(a[np.array(anchors) - start], r)
    edges = anchors + [end + 1]
    blocks = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        res = vr_exact(a[lo - start:hi - start], r, reduce=reduce)
        blocks.append({"lo": lo, "hi": hi - 1, "value": res.value})
    short = fsum([b["value"] ** r for b in blocks]) ** (1 / r)
    return {"long": long_res.value, "short": short, "blocks": blocks,
            "long_indices": [anchors[k] for k in long_res.subsequence], "z_points": len(zs)}


def vr_split_steps(breaks, values, r: float, rho: float, end: int, reduce: bool = True) -> dict:
    """:func:`vr_split` for a step sequence given by its change points.

    The sequence equals ``values[i]`` for breaks[i] <= n < breaks[i+1] and is
    indexed from breaks[0] to ``end``.  Sampling at the union of the change
    points and Z_rho loses nothing: between two samples the sequence is
    constant.
    """
    _check_r(r)
    breaks = np.asarray(breaks, dtype=np.int64)
    a = _as_array(values)
    if breaks.size != a.size or np.any(np.diff(breaks) <= 0) or end < breaks[-1]:
        raise ConfigError("breaks must be increasing, one per value, and end >= last break")
    start = int(breaks[0])
    zs = np.array([z for z in z_rho(rho, end) if z >= start], dtype=np.int64)
    anchors = zs if zs.size and zs[0] == start else np.concatenate(([start], zs)).astype(np.int64)
    samples = np.union1d(breaks, anchors)
    sval = a[np.searchsorted(breaks, samples, side="right") - 1]
    long_vals = sval[np.searchsorted(samples, anchors)]
    long_res = vr_exact(long_vals, r, reduce=reduce)
    edges = np.searchsorted(samples, anchors)
    edges = np.append(edges, samples.size)
    # blocks holding a single sample are constant and contribute nothing
    block_vals = [vr_exact(sval[lo:hi], r, reduce=reduce).value if hi - lo > 1 else 0.0
                  for lo, hi in zip(edges[:-1], edges[1:])]
    short = fsum([v**r for v in block_vals]) ** (1 / r)
    return {"long": long_res.value, "short": short, "blocks": len(block_vals), "z_points": int(zs.size)}
