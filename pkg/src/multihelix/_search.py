"""Small 1-D search helpers used by several optimizers."""
from __future__ import annotations

import math
from typing import Callable

import numpy as np

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section(f: Callable[[float], float], a: float, b: float, tol: float = 1e-6) -> tuple[float, float]:
    """Minimize a unimodal f on [a, b]; returns (x, f(x))."""
    if b < a:
        a, b = b, a
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    fx = f(x)
    # the bracket endpoints may beat the midpoint when the minimum sits on a boundary
    for y, fy in ((c, fc), (d, fd)):
        if fy < fx:
            x, fx = y, fy
    return x, fx


def grid_then_golden(f: Callable[[float], float], lo: float, hi: float, step: float = 0.05,
                     tol: float = 1e-6) -> tuple[float, float]:
    """Seed with a uniform grid, then polish the best cell with golden section."""
    if hi <= lo:
        return lo, f(lo)
    n = max(1, int(math.ceil((hi - lo) / step - 1e-9)))
    xs = np.linspace(lo, hi, n + 1)
    vals = np.array([f(float(x)) for x in xs])
    i = int(np.argmin(vals))
    if not np.isfinite(vals[i]):
        return float(xs[i]), float(vals[i])
    a = float(xs[max(i - 1, 0)])
    b = float(xs[min(i + 1, n)])
    x, fx = golden_section(f, a, b, tol)
    if vals[i] < fx:
        return float(xs[i]), float(vals[i])
    return x, fx


def bisect_threshold(pred: Callable[[float], bool], lo: float, hi: float, tol: float = 1e-4) -> float:
    """Smallest x in [lo, hi] with pred(x) true, assuming pred is monotone (false then true)."""
    if pred(lo):
        return lo
    if not pred(hi):
        raise ValueError("predicate false at upper end of bracket")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if pred(mid):
            hi = mid
        else:
            lo = mid
    return hi
