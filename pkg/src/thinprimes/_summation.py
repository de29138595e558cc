"""Deterministic floating point reductions.

Every floating reduction in the package goes through these helpers.  Scalar
totals use :func:`math.fsum`, which returns the correctly rounded value of the
exact sum; the result therefore does not depend on the order of the terms or
on how work was split across threads.
"""

from __future__ import annotations

import math

import numpy as np

EPS = np.finfo(np.float64).eps

# block length for chunked prefix sums
_PREFIX_BLOCK = 4096


def fsum(values) -> float:
    """Correctly rounded sum of a float array or iterable."""
    if isinstance(values, np.ndarray):
        return math.fsum(values.ravel().tolist())
    return math.fsum(values)


def csum(values) -> complex:
    """Correctly rounded (per component) sum of a complex array."""
    arr = np.asarray(values, dtype=np.complex128).ravel()
    return complex(math.fsum(arr.real.tolist()), math.fsum(arr.imag.tolist()))


def csum_parts(parts) -> complex:
    """Sum a sequence of complex arrays as if they were one concatenated array."""
    re: list[float] = []
    im: list[float] = []
    for part in parts:
        arr = np.asarray(part, dtype=np.complex128).ravel()
        re.extend(arr.real.tolist())
        im.extend(arr.imag.tolist())
    return complex(math.fsum(re), math.fsum(im))


def two_sum(a: float, b: float) -> tuple[float, float]:
    """Error-free transformation: a + b == s + t exactly."""
    s = a + b
    bb = s - a
    t = (a - (s - bb)) + (b - bb)
    return s, t


def prefix_sum(values: np.ndarray) -> np.ndarray:
    """Compensated inclusive prefix sums.

    Values are processed in fixed blocks.  Each block carries an offset held as
    an unevaluated pair (hi, lo) that is advanced by the exactly rounded block
    total, so the absolute error of entry ``i`` is bounded by roughly
    ``block * eps * |block partial| + eps * |prefix|`` instead of ``i * eps``.
    For nonnegative input the output is made nondecreasing.
    """
    values = np.asarray(values, dtype=np.float64)
    out = np.empty_like(values)
    hi, lo = 0.0, 0.0
    for start in range(0, values.size, _PREFIX_BLOCK):
        block = values[start:start + _PREFIX_BLOCK]
        local = np.cumsum(block)
        out[start:start + block.size] = (local + lo) + hi
        total = math.fsum(block.tolist())
        hi, err = two_sum(hi, total)
        lo += err
        hi, lo = two_sum(hi, lo)
    if values.size and values.min() >= 0:
        # a block start can round below the previous block's last entry
        np.maximum.accumulate(out, out=out)
    return out
