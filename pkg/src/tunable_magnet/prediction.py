"""
Operating point prediction: from a desired air-gap flux density at a known gap, find the magnet operating point,
the recoil line that passes through it, and that line's corner on the major loop, which is the reference
the demagnetization controller drives to.
"""

from __future__ import annotations

import dataclasses
import warnings

from ._roots import bisect
from .circuit import CircuitParams
from .errors import NoIntersectionError, SingularConfigurationError, UnreachableSetPointError
from .hysteresis import MU0, MajorLoop, RecoilFit, RecoilModel, corner_point

REMANENCE_FTOL = 1e-12  # [tesla]
CLOSED_FORM_ATOL = 1e-9  # [tesla]


@dataclasses.dataclass(frozen=True)
class PredictionResult:
    B_g_set: float
    H_o: float
    B_o: float
    B_r_prime: float
    mu_rec: float
    corner: tuple[float, float]
    """(H, B) of the demagnetization reference on the major branch."""


def predict_target_point(B_g_set: float, p: CircuitParams) -> tuple[float, float]:
    """(H_o, B_o): where the magnet must operate at zero coil current to give ``B_g_set`` in the gap."""
    if B_g_set < 0:
        raise ValueError(f"B_g_set must be non-negative: {B_g_set}")
    B_o = p.k1 * (p.A_g / p.A_m) * B_g_set
    H_o = -2.0 * p.k2 * p.l_g * B_g_set / (p.L_m * p.mu0)
    return H_o, B_o


def required_remanence(H_o: float, B_o: float, fit: RecoilModel) -> tuple[float, float]:
    """
    Solve ``B_r' = B_o - mu_rec(B_r') * mu0 * H_o`` for the remanence of the recoil line through (H_o, B_o).
    Solved by bracketed bisection; for a linear fit the result is cross-checked against the closed form.
    """
    if isinstance(fit, RecoilFit):
        den = 1.0 + fit.slope * MU0 * H_o
        if abs(den) < 1e-9:
            raise SingularConfigurationError(f"1 + slope*mu0*H_o = {den:.3g} at H_o = {H_o:.6g} A/m")

    def residual(b: float) -> float:
        return b + fit.mu_rec(b) * MU0 * H_o - B_o

    # expand an initial bracket around B_o until the residual changes sign
    span = max(1.0, abs(B_o))
    lo, hi = B_o - span, B_o + span
    for _ in range(60):
        if (residual(lo) < 0) != (residual(hi) < 0) or residual(lo) == 0 or residual(hi) == 0:
            break
        span *= 2
        lo, hi = B_o - span, B_o + span
    else:
        raise SingularConfigurationError(f"no remanence bracket found for H_o = {H_o:.6g}, B_o = {B_o:.6g}")
    B_r = bisect(residual, lo, hi, ftol=REMANENCE_FTOL)

    if isinstance(fit, RecoilFit):
        closed = (B_o - fit.intercept * MU0 * H_o) / (1.0 + fit.slope * MU0 * H_o)
        if abs(closed - B_r) > CLOSED_FORM_ATOL:
            raise ArithmeticError(f"root finder disagrees with closed form: {B_r!r} vs {closed!r}")
        if fit.valid_range is not None:
            lo_v, hi_v = fit.valid_range
            if not lo_v <= B_r <= hi_v:
                warnings.warn(
                    f"B_r' = {B_r:.4f} T is outside the recoil fit range [{lo_v}, {hi_v}] T; extrapolating",
                    stacklevel=2,
                )
    return B_r, fit.mu_rec(B_r)


def predict(B_g_set: float, p: CircuitParams, loop: MajorLoop, fit: RecoilModel) -> PredictionResult:
    H_o, B_o = predict_target_point(B_g_set, p)
    B_r, mu = required_remanence(H_o, B_o, fit)
    try:
        corner = corner_point(loop, B_r, mu)
    except NoIntersectionError as ex:
        raise UnreachableSetPointError(
            f"set-point unreachable for this magnet/geometry: B_g_set = {B_g_set:.6g} T at l_g = {p.l_g:.6g} m "
            f"needs B_r' = {B_r:.6g} T ({ex})"
        ) from ex
    return PredictionResult(B_g_set=B_g_set, H_o=H_o, B_o=B_o, B_r_prime=B_r, mu_rec=mu, corner=corner)
