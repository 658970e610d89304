from __future__ import annotations

from typing import Callable


def bisect(f: Callable[[float], float], lo: float, hi: float, ftol: float, maxiter: int = 200) -> float:
    """
    Bracketed bisection for a sign change of ``f`` on ``[lo, hi]``.
    Stops when ``|f(x)| <= ftol`` or the bracket collapses to adjacent floats.
    """
    f_lo = f(lo)
    if abs(f_lo) <= ftol:
        return lo
    f_hi = f(hi)
    if abs(f_hi) <= ftol:
        return hi
    if (f_lo < 0) == (f_hi < 0):
        raise ValueError(f"no sign change on [{lo!r}, {hi!r}]: f = {f_lo!r}, {f_hi!r}")
    best, f_best = (lo, f_lo) if abs(f_lo) < abs(f_hi) else (hi, f_hi)
    for _ in range(maxiter):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        f_mid = f(mid)
        if abs(f_mid) < abs(f_best):
            best, f_best = mid, f_mid
        if abs(f_mid) <= ftol:
            return mid
        if (f_mid < 0) == (f_lo < 0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    return best
