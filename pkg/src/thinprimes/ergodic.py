"""Radon-type averages and truncated Hilbert transforms on the integers.

Every operator is a convolution with a sparse kernel supported on the offsets
P(p), p running over a thin prime set (or all primes):

======== ===================================== ==========================
source   weight at P(p)                        p ranges over
======== ===================================== ==========================
A        1 / |P_N|                             thin set up to N
M        log p / psi(p) / Psi_N                thin set up to N
M_prime  log p / theta(N)                      primes up to N
H        +-log p / (p psi(p)) at P(+-p)        thin set up to N
H_prime  +-log p / p at P(+-p)                 primes up to N
======== ===================================== ==========================

with Psi_N the sum of log p / psi(p) over the thin set.  Offsets that collide
have their weights added.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import arith
from ._summation import csum, fsum
from .errors import ConfigError, NumericDomainError
from .expsum import IntPolynomial
from .thinset import Diagnostics, ThinSetSpec, enumerate_members
from .variation import vr_exact, vr_split_steps, z_value

SOURCES = ("A", "M", "M_prime", "H", "H_prime")


@dataclass
class SignalOnZ:
    """Finitely supported function on the integers (sorted support)."""

    points: np.ndarray
    values: np.ndarray
    _norms: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.int64)
        vals = np.asarray(self.values)
        order = np.argsort(pts, kind="stable")
        self.points, self.values = _aggregate(pts[order], vals[order])

    @classmethod
    def delta(cls, at: int = 0) -> "SignalOnZ":
        return cls(np.array([at]), np.array([1.0]))

    @classmethod
    def zero(cls) -> "SignalOnZ":
        return cls(np.zeros(0, dtype=np.int64), np.zeros(0))

    @classmethod
    def from_dict(cls, d: dict) -> "SignalOnZ":
        keys = sorted(d)
        return cls(np.array(keys, dtype=np.int64), np.array([d[k] for k in keys]))

    def norm(self, s: float) -> float:
        if s not in self._norms:
            if s == math.inf:
                self._norms[s] = float(np.abs(self.values).max()) if self.values.size else 0.0
            else:
                self._norms[s] = fsum(np.abs(self.values) ** s) ** (1 / s) if self.values.size else 0.0
        return self._norms[s]

    def get(self, x: np.ndarray) -> np.ndarray:
        """f(x) for an array of integers."""
        x = np.asarray(x, dtype=np.int64)
        pos = np.searchsorted(self.points, x)
        pos = np.minimum(pos, max(self.points.size - 1, 0))
        out = np.zeros(x.shape, dtype=self.values.dtype if self.values.size else np.float64)
        if self.points.size:
            hit = self.points[pos] == x
            out[hit] = self.values[pos[hit]]
        return out


def _aggregate(points: np.ndarray, values: np.ndarray):
    """Merge equal sorted keys by summing their values in the given order."""
    if points.size == 0:
        return points, values
    starts = np.flatnonzero(np.concatenate(([True], points[1:] != points[:-1])))
    if starts.size == points.size:
        return points, values
    if np.iscomplexobj(values):
        sums = np.array([csum(values[a:b]) for a, b in zip(starts, np.append(starts[1:], points.size))])
    else:
        sums = np.array([fsum(values[a:b]) for a, b in zip(starts, np.append(starts[1:], points.size))])
    return points[starts], sums


@dataclass
class Kernel:
    offsets: np.ndarray
    weights: np.ndarray
    source: str
    N: int
    l1_norm: float
    info: dict = field(default_factory=dict)


def _offsets(poly: IntPolynomial, n: np.ndarray) -> np.ndarray:
    nmax = int(np.abs(n).max()) if n.size else 0
    if nmax and sum(abs(c) for c in poly.coeffs) * float(nmax) ** poly.degree >= 2**62:
        raise NumericDomainError("offsets P(p) overflow 64-bit integers")
    return poly.values(n)


def thin_weights(thin: ThinSetSpec, members: np.ndarray) -> np.ndarray:
    """log p / psi(p) for each member."""
    x = members.astype(np.float64)
    return np.log(x) / thin.pair.psi(x)


def build_kernel(thin: ThinSetSpec, poly: IntPolynomial, N: int, source: str,
                 tables: arith.SieveTables, diag: Diagnostics | None = None) -> Kernel:
    """Sparse kernel of the requested operator at truncation N."""
    if source not in SOURCES:
        raise ConfigError(f"source must be one of {SOURCES}")
    tables.check(N)
    info: dict = {"theta_N": tables.theta(N)}
    if source in ("M_prime", "H_prime"):
        ps = tables.primes_upto(N)
    else:
        ps = enumerate_members(thin, N, tables, diag)
        info["members"] = int(ps.size)
        if ps.size:
            psi_w = thin_weights(thin, ps)
            info["Psi_N"] = fsum(psi_w)
    if ps.size == 0 and source in ("A", "M", "M_prime"):
        raise NumericDomainError(f"empty set at N={N}: the average is undefined")
    x = ps.astype(np.float64)
    if source == "A":
        offs, w = _offsets(poly, ps), np.full(ps.size, 1.0 / ps.size)
    elif source == "M":
        offs, w = _offsets(poly, ps), psi_w / info["Psi_N"]
    elif source == "M_prime":
        offs, w = _offsets(poly, ps), np.log(x) / info["theta_N"]
    else:
        base = np.log(x) / x
        if source == "H":
            base = base / thin.pair.psi(x) if ps.size else base
        offs = np.concatenate([_offsets(poly, ps), _offsets(poly, -ps)])
        w = np.concatenate([base, -base])
    order = np.argsort(offs, kind="stable")
    offs, w = _aggregate(offs[order], w[order])
    return Kernel(offs, w, source, N, fsum(np.abs(w)), info)


def apply(kernel: Kernel, f: SignalOnZ) -> SignalOnZ:
    """(k * f)(x) = sum_o w(o) f(x - o)."""
    if f.points.size == 0 or kernel.offsets.size == 0:
        return SignalOnZ.zero()
    pts = (f.points[:, None] + kernel.offsets[None, :]).ravel()
    vals = (f.values[:, None] * kernel.weights[None, :]).ravel()
    return SignalOnZ(pts, vals)


def xi_grid(n: int) -> list[Fraction]:
    """Uniform rational grid a/n, a = 0..n-1."""
    return [Fraction(a, n) for a in range(n)]


def multiplier(kernel: Kernel, grid, threads: int = 1) -> np.ndarray:
    """m(xi) = sum_o w(o) e(xi o) at each rational xi of the grid, exact phases.

    Weights are first binned by o mod q (one correctly rounded sum per
    residue), after which each grid point is a finite sum over residues.
    """
    grid = [Fraction(g) for g in grid]
    out = np.zeros(len(grid), dtype=complex)
    by_q: dict[int, list[int]] = {}
    for i, g in enumerate(grid):
        by_q.setdefault(g.denominator, []).append(i)

    def one_q(item):
        q, idxs = item
        res = np.mod(kernel.offsets, q)
        order = np.argsort(res, kind="stable")
        r_sorted, w_sorted = res[order], kernel.weights[order]
        cuts = np.flatnonzero(np.concatenate(([True], r_sorted[1:] != r_sorted[:-1])))
        ends = np.append(cuts[1:], r_sorted.size)
        residues = r_sorted[cuts]
        bins = np.array([fsum(w_sorted[a:b]) for a, b in zip(cuts, ends)])
        roots = np.exp(2j * np.pi * np.arange(q) / q)
        return [(i, csum(bins * roots[np.mod(grid[i].numerator * residues, q)])) for i in idxs]

    with ThreadPoolExecutor(max_workers=max(threads, 1)) as pool:
        for part in pool.map(one_q, sorted(by_q.items())):
            for i, v in part:
                out[i] = v
    return out


def multiplier_difference(k1: Kernel, k2: Kernel, grid, threads: int = 1) -> dict:
    """sup over the grid of |m1 - m2| and a Lipschitz slack for off-grid points."""
    grid = [Fraction(g) for g in grid]
    diff = np.abs(multiplier(k1, grid, threads) - multiplier(k2, grid, threads))
    step = 1.0 / max(g.denominator for g in grid) if grid else 0.0
    lip = 2 * np.pi * (fsum(np.abs(k1.weights) * np.abs(k1.offsets.astype(float)))
                       + fsum(np.abs(k2.weights) * np.abs(k2.offsets.astype(float))))
    return {"sup": float(diff.max()), "argmax": str(grid[int(diff.argmax())]),
            "lipschitz_slack": lip * step / 2, "grid_size": len(grid)}


# ---------------------------------------------------------------------------
# kernel masses over lacunary blocks
# ---------------------------------------------------------------------------

def block_edges(rho: float, k: int) -> tuple[int, int]:
    """(N_{k-1}, N_k) for block k >= 1."""
    if k < 1:
        raise ConfigError("block index k must be >= 1")
    return z_value(rho, k - 1), z_value(rho, k)


def short_variation_kernel_mass(thin: ThinSetSpec, rho: float, k: int, source: str,
                                tables: arith.SieveTables, poly: IntPolynomial | None = None,
                                check_direct: bool = False) -> dict:
    """Sum over N_{k-1} <= n < N_k of the l1 norm of m_{n+1} - m_n.

    Only a new member x0 = n + 1 changes the kernel.  For the normalised M
    kernel the change has l1 norm 2 w(x0) / Psi_{n+1} (w = log p / psi(p)); for
    the Hilbert kernel it is 2 log x0 / (x0 psi(x0)).  With ``check_direct`` the
    kernels at n and n + 1 are rebuilt and compared entry by entry.
    """
    if source not in ("M", "H"):
        raise ConfigError("source must be 'M' or 'H'")
    lo, hi = block_edges(rho, k)
    tables.check(hi)
    members = enumerate_members(thin, hi, tables)
    new = members[members > lo]
    terms = []
    if new.size:
        xs = new.astype(np.float64)
        if source == "M":
            w_all = thin_weights(thin, members)
            for x0 in new:
                i = int(np.searchsorted(members, x0))
                terms.append(2 * w_all[i] / fsum(w_all[: i + 1]))
        else:
            terms = (2 * np.log(xs) / (xs * thin.pair.psi(xs))).tolist()
    mass = fsum(terms)
    out = {"k": k, "N_lo": lo, "N_hi": hi, "new_members": [int(x) for x in new], "mass": mass,
           "reference": float(k) ** (rho - 1), "source": source}
    if check_direct:
        poly = poly or IntPolynomial((1,))
        direct = []
        for x0 in new:
            x0 = int(x0)
            if source == "M" and x0 == int(members[0]):
                # the kernel is undefined before the first member; the change is the full kernel
                kb = build_kernel(thin, poly, x0, "M", tables)
                direct.append(2 * kb.l1_norm)
                continue
            src = "M" if source == "M" else "H"
            ka = build_kernel(thin, poly, x0 - 1, src, tables) if source == "H" or x0 - 1 >= members[0] else None
            kb = build_kernel(thin, poly, x0, src, tables)
            direct.append(_l1_difference(ka, kb))
        out["mass_direct"] = fsum(direct)
    return out


def _l1_difference(ka: Kernel | None, kb: Kernel) -> float:
    if ka is None or ka.offsets.size == 0:
        return kb.l1_norm
    pts = np.concatenate([kb.offsets, ka.offsets])
    vals = np.concatenate([kb.weights, -ka.weights])
    order = np.argsort(pts, kind="stable")
    _, diff = _aggregate(pts[order], vals[order])
    return fsum(np.abs(diff))


def kernel_mass_fit(thin: ThinSetSpec, rho: float, ks, source: str, tables: arith.SieveTables) -> dict:
    """Masses over a range of blocks, fitted against k**(rho - 1)."""
    rows = [short_variation_kernel_mass(thin, rho, int(k), source, tables) for k in ks]
    masses = np.array([r["mass"] for r in rows])
    ks_arr = np.array([r["k"] for r in rows], dtype=np.float64)
    ref = ks_arr ** (rho - 1)
    pos = masses > 0
    slope = float(np.polyfit(np.log(ks_arr[pos]), np.log(masses[pos]), 1)[0]) if pos.sum() >= 2 else math.nan
    return {
        "source": source,
        "rho": rho,
        "k": [int(k) for k in ks_arr],
        "mass": masses.tolist(),
        "fitted_C": float((masses / ref).max()),
        "positive_blocks": int(pos.sum()),
        "log_slope": slope,
        "target_slope": rho - 1,
    }


# ---------------------------------------------------------------------------
# pointwise variation of operator sequences
# ---------------------------------------------------------------------------

def _event_sequences(thin: ThinSetSpec, poly: IntPolynomial, f: SignalOnZ, operator: str,
                     members: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Values of T_N f(x) at the member events N = p_1 < p_2 < ... .

    Returns (xs, seqs) with seqs[i, t] = T_{p_t} f(xs[i]).  Between two
    consecutive members the operator does not change, so these columns carry
    the full information of the sequence indexed by N >= p_1.
    """
    M = members.size
    signs = [1, -1] if operator == "H" else [1]
    offs = [(s, _offsets(poly, s * members)) for s in signs]
    xs = np.unique(np.concatenate([(f.points[:, None] + o[None, :]).ravel() for _, o in offs]))
    contrib = np.zeros((xs.size, M), dtype=f.values.dtype if f.values.size else np.float64)
    w = thin_weights(thin, members)
    if operator == "H":
        x = members.astype(np.float64)
        w = np.log(x) / (x * thin.pair.psi(x))
    for s, o in offs:
        for fp, fv in zip(f.points, f.values):
            pos = np.searchsorted(xs, fp + o)
            if operator == "A":
                contrib[pos, np.arange(M)] += fv
            else:
                contrib[pos, np.arange(M)] += s * fv * w
    seqs = np.cumsum(contrib, axis=1)
    if operator == "A":
        seqs = seqs / np.arange(1, M + 1)
    elif operator == "M":
        seqs = seqs / np.cumsum(w)
    return xs, seqs


def variation_experiment(thin: ThinSetSpec, poly: IntPolynomial, f: SignalOnZ, r: float, rho: float,
                         N_grid, tables: arith.SieveTables, operator: str = "A", s: float = 2.0,
                         threads: int = 1, compare_M: bool = True) -> dict:
    """l^s norm over x of V_r(T_N f(x) : N <= N_max) for each N_max of the grid.

    Reports the ratio to ||f||_s for each N_max, the long/short split norms,
    and (for the A operator) the pointwise constant C with V_r(A) <= C V_r(M).
    """
    if operator not in ("A", "M", "H"):
        raise ConfigError("operator must be A, M or H")
    N_grid = sorted(int(n) for n in N_grid)
    warnings = []
    if r <= 2:
        warnings.append("r <= 2 lies outside the regime r > 2")
    fnorm = f.norm(s)
    rows = []
    for N in N_grid:
        members = enumerate_members(thin, N, tables)
        if f.points.size == 0 or members.size == 0:
            rows.append({"N_max": N, "members": int(members.size), "norm": 0.0, "ratio": 0.0 if fnorm == 0 else math.nan})
            continue
        xs, seqs = _event_sequences(thin, poly, f, operator, members)

        def pointwise(batch):
            return [(vr_exact(seqs[i], r, reduce=not np.iscomplexobj(seqs)).value,
                     vr_split_steps(members, seqs[i], r, rho, N, reduce=not np.iscomplexobj(seqs)))
                    for i in batch]

        idx = list(range(xs.size))
        size = max(1, math.ceil(len(idx) / max(threads, 1)))
        with ThreadPoolExecutor(max_workers=max(threads, 1)) as pool:
            res = [v for part in pool.map(pointwise, [idx[i:i + size] for i in range(0, len(idx), size)]) for v in part]
        vals = np.array([v for v, _ in res])
        longs = np.array([sp["long"] for _, sp in res])
        shorts = np.array([sp["short"] for _, sp in res])
        norm = fsum(vals**s) ** (1 / s)
        row = {"N_max": N, "members": int(members.size), "points": int(xs.size), "norm": norm,
               "ratio": norm / fnorm if fnorm else math.nan,
               "long_norm": fsum(longs**s) ** (1 / s), "short_norm": fsum(shorts**s) ** (1 / s)}
        if compare_M and operator == "A":
            _, mseqs = _event_sequences(thin, poly, f, "M", members)
            mvals = np.array([vr_exact(mseqs[i], r, reduce=not np.iscomplexobj(mseqs)).value for i in idx])
            ok = mvals > 0
            row["sandwich_C"] = float((vals[ok] / mvals[ok]).max()) if ok.any() else math.nan
        rows.append(row)
    ratios = [row["ratio"] for row in rows]
    return {"operator": operator, "r": r, "rho": rho, "s": s, "f_norm": fnorm, "rows": rows,
            "ratios": ratios, "warnings": warnings}
