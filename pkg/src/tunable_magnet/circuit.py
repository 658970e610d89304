"""
Lumped magnetic circuit of a gap-closing reluctance actuator with the magnet in series with two air gaps.

Flux conservation and Ampere's law over the magnet and the two gaps give::

    B_m A_m = k1 B_g A_g
    H_m L_m + 2 k2 H_g l_g = N I_c
    B_g = mu0 H_g

k1 relates magnet flux to gap flux (leakage and fringing), k2 accounts for MMF dropped in the steel.
"""

from __future__ import annotations

import dataclasses
import json
import math
from pathlib import Path
from typing import Any, Mapping

from ._roots import bisect
from .errors import ConfigError, FieldRangeError, NoIntersectionError
from .hysteresis import MU0, ROOT_FTOL, MagnetState, MajorLoop, ALNICO5_RECOIL_FIT, RecoilModel, iter_pieces, state_at

CIRCUIT_KEYS = ("A_m", "A_g", "L_m", "l_g", "N", "R", "k1", "k2")


@dataclasses.dataclass(frozen=True)
class CircuitParams:
    A_m: float
    """Magnet cross-section [m^2]"""
    A_g: float
    """Pole face / gap cross-section [m^2]"""
    L_m: float
    """Magnet length [m]"""
    l_g: float
    """Length of one air gap [m]"""
    N: float
    """Coil turns"""
    R: float
    """Coil resistance [ohm]"""
    k1: float
    """Flux leakage coefficient"""
    k2: float
    """MMF loss factor"""

    mu0: float = dataclasses.field(default=MU0, init=False)

    def __post_init__(self) -> None:
        for name in ("A_m", "A_g", "L_m", "l_g", "R", "k1"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ConfigError(f"{name} must be positive and finite: {v}")
        if not (math.isfinite(self.N) and self.N >= 1):
            raise ConfigError(f"N must be >= 1: {self.N}")
        if not (math.isfinite(self.k2) and self.k2 >= 1):
            raise ConfigError(f"k2 must be >= 1: {self.k2}")

    def with_gap(self, l_g: float, k1: float | None = None) -> CircuitParams:
        return dataclasses.replace(self, l_g=l_g, k1=self.k1 if k1 is None else k1)

    @staticmethod
    def from_mapping(m: Mapping[str, Any]) -> CircuitParams:
        missing = [k for k in CIRCUIT_KEYS if k not in m]
        if missing:
            raise ConfigError(f"circuit parameters missing keys: {', '.join(missing)}")
        unknown = sorted(set(m) - set(CIRCUIT_KEYS))
        if unknown:
            raise ConfigError(f"circuit parameters: unknown keys: {', '.join(unknown)}")
        try:
            return CircuitParams(**{k: float(m[k]) for k in CIRCUIT_KEYS})
        except (TypeError, ValueError) as ex:
            if isinstance(ex, ConfigError):
                raise
            raise ConfigError(f"circuit parameters: {ex}") from None

    @staticmethod
    def load_json(path: str | Path) -> CircuitParams:
        with open(path) as f:
            return CircuitParams.from_mapping(json.load(f))

    def to_mapping(self) -> dict[str, float]:
        return {k: getattr(self, k) for k in CIRCUIT_KEYS}


def gap_flux_from_magnet(B_m: float, p: CircuitParams) -> float:
    return B_m * p.A_m / (p.k1 * p.A_g)


def magnet_flux_from_gap(B_g: float, p: CircuitParams) -> float:
    return p.k1 * B_g * p.A_g / p.A_m


def magnet_fields_from_measurement(B_g: float, I_c: float, p: CircuitParams) -> tuple[float, float]:
    """(H_m, B_m) inside the magnet from a measured gap flux density and coil current."""
    B_m = p.k1 * B_g * p.A_g / p.A_m
    H_m = (p.N * I_c - 2.0 * p.k2 * p.l_g * B_g / p.mu0) / p.L_m
    return H_m, B_m


def load_line(I_c: float, p: CircuitParams) -> tuple[float, float]:
    """
    The load line ``B_m = slope * (H_m - H_intercept)``.
    Returns (slope [T/(A/m)], H_intercept [A/m]); the slope is always negative.
    """
    slope = -p.mu0 * (p.k1 / p.k2) * (p.A_g * p.L_m) / (2.0 * p.A_m * p.l_g)
    return slope, p.N * I_c / p.L_m


def current_for_point(H_m: float, B_m: float, p: CircuitParams) -> float:
    """Coil current whose load line passes through (H_m, B_m)."""
    slope, _ = load_line(0.0, p)
    return (H_m - B_m / slope) * p.L_m / p.N


def circuit_operating_point(
    state: MagnetState,
    loop: MajorLoop,
    I_c: float,
    p: CircuitParams,
    recoil: RecoilModel = ALNICO5_RECOIL_FIT,
) -> tuple[float, float]:
    """
    Quasi-static operating point: where the load line for ``I_c`` meets the characteristic the magnet
    follows from ``state`` (its recoil line or the major branch, per the state machine).
    Found by bisection on the bracketing straight piece; residual <= 1e-9 T.
    """
    return circuit_operating_state(state, loop, I_c, p, recoil)[1:]


def circuit_operating_state(
    state: MagnetState,
    loop: MajorLoop,
    I_c: float,
    p: CircuitParams,
    recoil: RecoilModel = ALNICO5_RECOIL_FIT,
) -> tuple[MagnetState, float, float]:
    slope, H_int = load_line(I_c, p)
    f0 = state.B_m - slope * (state.H_m - H_int)  # characteristic minus load line; increasing in H
    if abs(f0) <= ROOT_FTOL:
        return state, state.H_m, state.B_m
    up = f0 < 0
    try:
        for piece in iter_pieces(state, loop, recoil, up):
            f_end = piece.slope * piece.H_end + piece.intercept - slope * (piece.H_end - H_int)
            if (f_end >= -ROOT_FTOL) if up else (f_end <= ROOT_FTOL):
                m, q = piece.slope, piece.intercept
                f_start = m * piece.H_start + q - slope * (piece.H_start - H_int)
                if (f_start >= -ROOT_FTOL) if up else (f_start <= ROOT_FTOL):
                    H = piece.H_start  # the characteristic jumped across the load line (re-saturation)
                else:
                    lo, hi = sorted((piece.H_start, piece.H_end))
                    H = bisect(lambda h: m * h + q - slope * (h - H_int), lo, hi, ftol=ROOT_FTOL)
                new = state_at(piece, H, loop, recoil)
                return new, new.H_m, new.B_m
    except FieldRangeError:
        pass
    lo, hi = loop.H_range
    raise NoIntersectionError(
        f"load line (slope {slope:.6g} T/(A/m), H intercept {H_int:.6g} A/m) does not meet the magnet "
        f"characteristic: branch spans H in [{lo:.6g}, {hi:.6g}] A/m, B in [{loop.B[-1]:.6g}, {loop.B[0]:.6g}] T; "
        f"load line spans B in [{slope * (hi - H_int):.6g}, {slope * (lo - H_int):.6g}] T there"
    )


def recoil_load_intersection(B_r_prime: float, mu_rec: float, I_c: float, p: CircuitParams) -> tuple[float, float]:
    """Closed-form intersection of a recoil line with the load line."""
    slope, H_int = load_line(I_c, p)
    m = mu_rec * p.mu0
    H = (B_r_prime + slope * H_int) / (slope - m)
    return H, B_r_prime + m * H
