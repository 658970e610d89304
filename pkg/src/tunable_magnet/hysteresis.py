"""
Scalar hysteresis of a low-coercivity permanent magnet (AlNiCo class).

The magnet is described by a sampled descending branch of its major BH loop and a family of straight
recoil lines. A magnet that is pushed down the major branch and then released moves back up along a
recoil line whose slope is the recoil permeability; pushing it below the corner of that line continues
the irreversible descent along the major branch.

The ascending branch is never sampled; it is derived by odd symmetry, B_asc(H) = -B_desc(-H), and is only
used to decide when a magnet travelling up a recoil line gets re-magnetized and eventually saturated.

Units are SI throughout: H in ampere/meter, B in tesla.
"""

from __future__ import annotations

import csv
import dataclasses
import enum
import math
from bisect import bisect_left, bisect_right
from logging import getLogger
from pathlib import Path
from typing import Iterator, Protocol, Sequence

import numpy as np
import numpy.typing as npt

from ._roots import bisect
from .errors import ConfigError, FieldRangeError, NoIntersectionError

MU0 = 4e-7 * math.pi
"""Permeability of free space [henry/meter]."""

SATURATION_FRACTION = 0.98
"""The magnet counts as saturated once B_m reaches this fraction of B_sat."""

ROOT_FTOL = 1e-9  # [tesla]
CORNER_FTOL = 1e-13  # [tesla] tight enough that the corner also reproduces B to 1e-9 T along a shallow line

BH_CSV_HEADER = ("H_A_per_m", "B_T")
RECOIL_TABLE_CSV_HEADER = ("B_r_prime_T", "mu_rec")

_log = getLogger(__name__)


# ---------------------------------------------------------------------------------------------------------------------
# Recoil permeability models


class RecoilModel(Protocol):
    def mu_rec(self, B_r_prime: float) -> float: ...

    def remanence_through(self, H: float, B: float) -> tuple[float, float]:
        """(B_r', mu_rec) of the recoil line of this family that passes through (H, B)."""
        ...


@dataclasses.dataclass(frozen=True)
class RecoilFit:
    """Linear recoil permeability distribution ``mu_rec = slope * B_r' + intercept``."""

    slope: float
    """[1/tesla]"""
    intercept: float
    """[dimensionless]"""
    valid_range: tuple[float, float] | None = None
    """Range of B_r' [tesla] the fit was identified over, if known."""

    def __post_init__(self) -> None:
        if not (math.isfinite(self.slope) and math.isfinite(self.intercept)):
            raise ConfigError(f"recoil fit coefficients must be finite: {self.slope}, {self.intercept}")
        if self.intercept <= 0:
            raise ConfigError(f"recoil fit intercept must be positive: {self.intercept}")
        if self.valid_range is not None and not self.valid_range[0] < self.valid_range[1]:
            raise ConfigError(f"recoil fit valid_range invalid: {self.valid_range}")

    def mu_rec(self, B_r_prime: float) -> float:
        return self.slope * B_r_prime + self.intercept

    def remanence_through(self, H: float, B: float) -> tuple[float, float]:
        # B = B_r + (slope*B_r + intercept)*mu0*H is linear in B_r
        den = 1.0 + self.slope * MU0 * H
        B_r = (B - self.intercept * MU0 * H) / den
        return B_r, self.mu_rec(B_r)


ALNICO5_RECOIL_FIT = RecoilFit(slope=0.955, intercept=4.69)
"""Recoil permeability distribution measured on AlNiCo 5 over the second quadrant."""


def recoil_permeability(B_r_prime: float, fit: RecoilFit) -> float:
    return fit.mu_rec(B_r_prime)


@dataclasses.dataclass(frozen=True)
class RecoilTable:
    """
    Tabulated (nonlinear) recoil permeability distribution, linearly interpolated and held constant
    beyond the table ends. Used by the plant to model the deviation from a linear fit near the major loop.
    """

    B_r_prime: npt.NDArray[np.float64]
    mu: npt.NDArray[np.float64]

    def __post_init__(self) -> None:
        b = np.asarray(self.B_r_prime, dtype=np.float64)
        m = np.asarray(self.mu, dtype=np.float64)
        if b.ndim != 1 or b.shape != m.shape or len(b) < 2:
            raise ConfigError("recoil table needs two equal-length columns with at least two rows")
        if not (np.all(np.isfinite(b)) and np.all(np.isfinite(m))):
            raise ConfigError("recoil table contains non-finite values")
        if np.any(np.diff(b) <= 0):
            raise ConfigError("recoil table B_r' must be strictly increasing")
        if np.any(m <= 0):
            raise ConfigError("recoil table mu_rec must be positive")
        object.__setattr__(self, "B_r_prime", b)
        object.__setattr__(self, "mu", m)

    def mu_rec(self, B_r_prime: float) -> float:
        return float(np.interp(B_r_prime, self.B_r_prime, self.mu))

    def remanence_through(self, H: float, B: float) -> tuple[float, float]:
        mu_lo, mu_hi = float(self.mu.min()), float(self.mu.max())
        ends = (B - mu_lo * MU0 * H, B - mu_hi * MU0 * H)
        lo, hi = min(ends) - 1e-9, max(ends) + 1e-9
        B_r = bisect(lambda x: x + self.mu_rec(x) * MU0 * H - B, lo, hi, ftol=1e-13)
        return B_r, self.mu_rec(B_r)

    @staticmethod
    def load_csv(path: str | Path) -> RecoilTable:
        rows = _read_two_column_csv(path, RECOIL_TABLE_CSV_HEADER)
        return RecoilTable(np.array([r[0] for r in rows]), np.array([r[1] for r in rows]))


# ---------------------------------------------------------------------------------------------------------------------
# Major loop


@dataclasses.dataclass(frozen=True, eq=False)
class MajorLoop:
    """
    Sampled descending branch of the major loop, ordered from positive saturation (H_sat, B_sat) down to
    negative saturation. Interpolation is piecewise linear, which keeps the branch monotone.
    """

    H: npt.NDArray[np.float64]
    """Strictly decreasing [ampere/meter]."""
    B: npt.NDArray[np.float64]
    """Non-increasing [tesla]."""

    # Derived in __post_init__; ascending-H views used for lookups.
    _Ha: list[float] = dataclasses.field(init=False, repr=False)
    _Ba: list[float] = dataclasses.field(init=False, repr=False)
    _m: list[float] = dataclasses.field(init=False, repr=False)
    _q: list[float] = dataclasses.field(init=False, repr=False)
    _H_resat: float | None = dataclasses.field(init=False, repr=False)

    def __post_init__(self) -> None:
        H = np.asarray(self.H, dtype=np.float64)
        B = np.asarray(self.B, dtype=np.float64)
        if H.ndim != 1 or H.shape != B.shape or len(H) < 2:
            raise ConfigError("major loop needs two equal-length columns with at least two samples")
        if not (np.all(np.isfinite(H)) and np.all(np.isfinite(B))):
            raise ConfigError("major loop contains non-finite values")
        if np.any(np.diff(H) >= 0):
            raise ConfigError("major loop H must be strictly decreasing (non-monotone H rejected)")
        if np.any(np.diff(B) > 0):
            raise ConfigError("major loop B must be non-increasing along the descending branch")
        if not np.any((H < 0) & (B <= 0)):
            raise ConfigError("major loop does not reach B = 0 at negative H (no coercive point sampled)")
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "B", B)
        Ha = H[::-1].tolist()
        Ba = B[::-1].tolist()
        m = [(Ba[k + 1] - Ba[k]) / (Ha[k + 1] - Ha[k]) for k in range(len(Ha) - 1)]
        q = [Ba[k] - m[k] * Ha[k] for k in range(len(Ha) - 1)]
        object.__setattr__(self, "_Ha", Ha)
        object.__setattr__(self, "_Ba", Ba)
        object.__setattr__(self, "_m", m)
        object.__setattr__(self, "_q", q)
        object.__setattr__(self, "_H_resat", self._find_resaturation_H())

    @property
    def B_sat(self) -> float:
        return float(self.B[0])

    @property
    def H_sat(self) -> float:
        return abs(float(self.H[0]))

    @property
    def H_range(self) -> tuple[float, float]:
        return self._Ha[0], self._Ha[-1]

    @property
    def remanence(self) -> float:
        """B at H = 0 (or at the top sample if the branch does not reach H = 0)."""
        return self.desc(min(0.0, self._Ha[-1]))

    @property
    def coercive_H(self) -> float:
        k = int(np.argmax(self.B <= 0))
        if k == 0:
            return float(self.H[0])
        H0, H1, B0, B1 = self.H[k - 1], self.H[k], self.B[k - 1], self.B[k]
        return float(H0 + (0.0 - B0) * (H1 - H0) / (B1 - B0))

    @property
    def resaturation_H(self) -> float | None:
        """Smallest H where the ascending branch reaches the saturation threshold; None if never in range."""
        return self._H_resat

    @property
    def saturation_threshold(self) -> float:
        return SATURATION_FRACTION * self.B_sat

    def check_range(self, H: float, context: str = "") -> None:
        if not self._Ha[0] <= H <= self._Ha[-1]:
            raise FieldRangeError(H, self._Ha[0], self._Ha[-1], context)

    def desc(self, H: float) -> float:
        """Descending branch, no range check; extrapolates the end segments."""
        k = min(max(bisect_right(self._Ha, H) - 1, 0), len(self._m) - 1)
        return self._m[k] * H + self._q[k]

    def asc(self, H: float) -> float:
        return -self.desc(-H)

    def slope_down(self, H: float) -> float:
        """dB/dH of the segment just below H."""
        k = bisect_left(self._Ha, H) - 1
        if k < 0:
            raise FieldRangeError(H, self._Ha[0], self._Ha[-1], "no branch segment below")
        return self._m[min(k, len(self._m) - 1)]

    def slope_up(self, H: float) -> float:
        """dB/dH of the segment just above H."""
        k = bisect_right(self._Ha, H) - 1
        if k >= len(self._m):
            raise FieldRangeError(H, self._Ha[0], self._Ha[-1], "no branch segment above")
        return self._m[max(k, 0)]

    def segment_down(self, H: float) -> tuple[float, float, float]:
        """(slope, intercept, lower end) of the segment traversed when H decreases from H."""
        k = bisect_left(self._Ha, H) - 1
        if k < 0 or H > self._Ha[-1]:
            raise FieldRangeError(H, self._Ha[0], self._Ha[-1], "descending below the sampled branch")
        return self._m[k], self._q[k], self._Ha[k]

    def segment_up(self, H: float) -> tuple[float, float, float]:
        """(slope, intercept, upper end) of the segment traversed when H increases from H."""
        k = bisect_right(self._Ha, H) - 1
        if k >= len(self._m) or H < self._Ha[0]:
            raise FieldRangeError(H, self._Ha[0], self._Ha[-1], "ascending above the sampled branch")
        return self._m[k], self._q[k], self._Ha[k + 1]

    def asc_segment_up(self, H: float) -> tuple[float, float, float]:
        m, q, H_end = self.segment_down(-H)
        return m, -q, -H_end

    def _find_resaturation_H(self) -> float | None:
        thr = self.saturation_threshold
        pts = np.array([-h for h in reversed(self._Ha)])  # ascending breakpoints of the ascending branch
        vals = -np.interp(-pts, self._Ha, self._Ba)
        idx = np.nonzero(vals >= thr)[0]
        if len(idx) == 0:
            return None
        k = int(idx[0])
        if k == 0:
            return float(pts[0])
        H0, H1, B0, B1 = pts[k - 1], pts[k], vals[k - 1], vals[k]
        return float(H0 + (thr - B0) * (H1 - H0) / (B1 - B0))

    @staticmethod
    def from_table(rows: Sequence[tuple[float, float]]) -> MajorLoop:
        return MajorLoop(np.array([r[0] for r in rows], dtype=np.float64), np.array([r[1] for r in rows]))

    @staticmethod
    def load_csv(path: str | Path) -> MajorLoop:
        return MajorLoop.from_table(_read_two_column_csv(path, BH_CSV_HEADER))

    def save_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as f:
            w = csv.writer(f, lineterminator="\n")
            w.writerow(BH_CSV_HEADER)
            for h, b in zip(self.H, self.B):
                w.writerow([repr(float(h)), repr(float(b))])


def major_B_at(loop: MajorLoop, H: float) -> float:
    loop.check_range(H, "major_B_at")
    return float(np.interp(H, loop._Ha, loop._Ba))


def synthetic_alnico5(
    *,
    J_s: float = 1.35,
    H_c: float = 50e3,
    width: float = 35.3e3,
    H_max: float = 250e3,
    step: float = 1e3,
) -> MajorLoop:
    """
    AlNiCo-5-like descending branch ``B = mu0*H + J_s*tanh((H + H_c)/width)``.
    The defaults give a remanence near 1.2 T and a coercivity near 50 kA/m. Synthetic, not measured data.
    """
    n = int(round(2 * H_max / step))
    H = np.linspace(H_max, -H_max, n + 1)
    B = MU0 * H + J_s * np.tanh((H + H_c) / width)
    return MajorLoop(H, B)


# ---------------------------------------------------------------------------------------------------------------------
# Recoil lines and the magnet state machine


@dataclasses.dataclass(frozen=True)
class RecoilLine:
    B_r_prime: float
    """Remanence of the line, i.e. B at H = 0 [tesla]."""
    mu_rec: float
    """Relative recoil permeability."""
    corner_H: float
    corner_B: float

    _exit_cache: dict = dataclasses.field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self) -> None:
        if not self.mu_rec > 0:
            raise ValueError(f"mu_rec must be positive: {self.mu_rec}")

    @property
    def slope(self) -> float:
        return self.mu_rec * MU0

    def B_at(self, H: float) -> float:
        return self.B_r_prime + self.mu_rec * MU0 * H


def corner_point(loop: MajorLoop, B_r_prime: float, mu_rec: float) -> tuple[float, float]:
    """
    Intersection of the recoil line ``B = B_r' + mu_rec*mu0*H`` with the major descending branch:
    the first crossing found when scanning down from H = 0. The result satisfies
    ``|line(H) - branch(H)| <= 1e-9 T``; the returned B is the line value.
    """
    slope = mu_rec * MU0
    Ha = loop._Ha
    H_start = min(0.0, Ha[-1])
    k0 = bisect_right(Ha, H_start)
    pts = np.concatenate(([H_start], np.asarray(Ha[:k0])[::-1]))
    pts = pts[np.concatenate(([True], pts[1:] < H_start))]
    diff = B_r_prime + slope * pts - np.interp(pts, Ha, loop._Ba)
    hits = np.nonzero(diff >= -ROOT_FTOL)[0]
    if len(hits) == 0:
        raise NoIntersectionError(
            f"recoil line does not intersect major branch: B_r'={B_r_prime:.6g} T, mu_rec={mu_rec:.6g}, "
            f"branch sampled on H in [{Ha[0]:.6g}, {Ha[-1]:.6g}] A/m"
        )
    k = int(hits[0])
    if k == 0:
        if diff[0] > ROOT_FTOL:
            raise NoIntersectionError(
                f"recoil line does not intersect major branch: line is above the branch at H = {H_start:.6g} A/m "
                f"(B_r'={B_r_prime:.6g} T exceeds the branch remanence {loop.remanence:.6g} T)"
            )
        H_c = float(pts[0])
    else:
        lo, hi = float(pts[k]), float(pts[k - 1])
        m, q, _ = loop.segment_up(lo)
        H_c = bisect(lambda h: B_r_prime + slope * h - (m * h + q), lo, hi, ftol=CORNER_FTOL)
    return H_c, B_r_prime + slope * H_c


def spawn_recoil_line(loop: MajorLoop, recoil: RecoilModel, H: float, B: float, *, on_branch: bool) -> RecoilLine:
    """
    The recoil line through (H, B). When the point is on the major descending branch it is the corner itself;
    otherwise the corner is located by intersection.
    """
    B_r, mu = recoil.remanence_through(H, B)
    if on_branch:
        return RecoilLine(B_r, mu, H, B)
    H_c, B_c = corner_point(loop, B_r, mu)
    return RecoilLine(B_r, mu, H_c, B_c)


class Mode(enum.Enum):
    ON_MAJOR_DESCENDING = "major"
    ON_RECOIL_LINE = "recoil"


@dataclasses.dataclass(frozen=True)
class MagnetState:
    mode: Mode
    recoil: RecoilLine | None
    H_m: float
    B_m: float

    def __post_init__(self) -> None:
        if (self.mode is Mode.ON_RECOIL_LINE) != (self.recoil is not None):
            raise ValueError("recoil line must be present iff mode is ON_RECOIL_LINE")

    @staticmethod
    def on_major(loop: MajorLoop, H: float) -> MagnetState:
        return MagnetState(Mode.ON_MAJOR_DESCENDING, None, H, major_B_at(loop, H))

    @staticmethod
    def saturated(loop: MajorLoop) -> MagnetState:
        return MagnetState(Mode.ON_MAJOR_DESCENDING, None, float(loop.H[0]), float(loop.B[0]))

    @staticmethod
    def on_line(line: RecoilLine, H: float) -> MagnetState:
        return MagnetState(Mode.ON_RECOIL_LINE, line, H, line.B_at(H))

    @staticmethod
    def demagnetized(loop: MajorLoop, recoil: RecoilModel) -> MagnetState:
        """At the origin, on the recoil line of zero remanence."""
        mu = recoil.mu_rec(0.0)
        H_c, B_c = corner_point(loop, 0.0, mu)
        return MagnetState(Mode.ON_RECOIL_LINE, RecoilLine(0.0, mu, H_c, B_c), 0.0, 0.0)

    def is_saturated(self, loop: MajorLoop) -> bool:
        return self.B_m >= loop.saturation_threshold

    def remanence(self, recoil: RecoilModel) -> float:
        """B_r' of the active recoil line, or of the line that would be spawned here if on the major branch."""
        if self.recoil is not None:
            return self.recoil.B_r_prime
        return recoil.remanence_through(self.H_m, self.B_m)[0]


class PieceKind(enum.Enum):
    MAJOR = 0
    RECOIL = 1
    ASCENDING = 2


@dataclasses.dataclass(slots=True)
class Piece:
    """A straight piece ``B = slope*H + intercept`` of the characteristic, traversed from H_start to H_end."""

    slope: float
    intercept: float
    H_start: float
    H_end: float
    kind: PieceKind
    line: RecoilLine | None = None


def iter_pieces(state: MagnetState, loop: MajorLoop, recoil: RecoilModel, going_up: bool) -> Iterator[Piece]:
    """
    The characteristic a magnet in ``state`` follows while H moves monotonically in one direction,
    as consecutive straight pieces. Raises FieldRangeError once the sampled loop is exhausted.
    """
    H = state.H_m
    if not going_up:
        if state.recoil is not None:
            line = state.recoil
            if H > line.corner_H:
                yield Piece(line.slope, line.B_r_prime, H, line.corner_H, PieceKind.RECOIL, line)
                H = line.corner_H
        yield from _major_down(loop, H)
        return
    if state.recoil is not None:
        yield from _line_up(loop, recoil, state.recoil, H)
        return
    if state.B_m < loop.saturation_threshold:
        B_r, mu = recoil.remanence_through(H, state.B_m)
        if mu * MU0 <= loop.slope_up(H):
            yield from _line_up(loop, recoil, RecoilLine(B_r, mu, H, state.B_m), H)
            return
    # Saturated, or the branch is flatter than any recoil line here: the loop is closed and reversible.
    yield from _major_up(loop, H)


def state_at(piece: Piece, H: float, loop: MajorLoop, recoil: RecoilModel) -> MagnetState:
    B = piece.slope * H + piece.intercept
    if piece.kind is PieceKind.MAJOR:
        return MagnetState(Mode.ON_MAJOR_DESCENDING, None, H, B)
    if piece.kind is PieceKind.RECOIL:
        return MagnetState(Mode.ON_RECOIL_LINE, piece.line, H, B)
    if B >= loop.saturation_threshold:
        return MagnetState(Mode.ON_MAJOR_DESCENDING, None, H, loop.desc(H))
    return MagnetState(Mode.ON_RECOIL_LINE, spawn_recoil_line(loop, recoil, H, B, on_branch=False), H, B)


def apply_H(
    state: MagnetState,
    loop: MajorLoop,
    H_new: float,
    recoil: RecoilModel = ALNICO5_RECOIL_FIT,
) -> MagnetState:
    """
    Move the magnet to field strength ``H_new`` along its path-dependent characteristic.

    Going down from the major branch continues the irreversible descent. Going up from the major branch
    spawns a recoil line cornered at the current point. On a recoil line the motion is reversible above the
    corner; below it the magnet rejoins the major branch and the old line is forgotten. Going up, a recoil
    line is left where it meets the ascending branch (re-magnetization) or the descending branch.
    """
    loop.check_range(H_new, "apply_H")
    if H_new == state.H_m:
        return state
    up = H_new > state.H_m
    for piece in iter_pieces(state, loop, recoil, up):
        if (H_new <= piece.H_end) if up else (H_new >= piece.H_end):
            return state_at(piece, H_new, loop, recoil)
    raise AssertionError("unreachable")  # pragma: no cover


def _major_down(loop: MajorLoop, H: float) -> Iterator[Piece]:
    while True:
        m, q, H_end = loop.segment_down(H)
        yield Piece(m, q, H, H_end, PieceKind.MAJOR)
        H = H_end


def _major_up(loop: MajorLoop, H: float) -> Iterator[Piece]:
    while True:
        m, q, H_end = loop.segment_up(H)
        yield Piece(m, q, H, H_end, PieceKind.MAJOR)
        H = H_end


def _asc_up(loop: MajorLoop, H: float) -> Iterator[Piece]:
    H_resat = loop.resaturation_H
    while H_resat is None or H < H_resat:
        m, q, H_end = loop.asc_segment_up(H)
        if H_resat is not None:
            H_end = min(H_end, H_resat)
        yield Piece(m, q, H, H_end, PieceKind.ASCENDING)
        H = H_end
    yield from _major_up(loop, H)


def _line_up(loop: MajorLoop, recoil: RecoilModel, line: RecoilLine, H: float) -> Iterator[Piece]:
    H_exit, onto = _line_exit_up(loop, line)
    if H_exit is None:
        H_top = loop.H_range[1]
        yield Piece(line.slope, line.B_r_prime, H, H_top, PieceKind.RECOIL, line)
        raise FieldRangeError(H_top + 1.0, *loop.H_range, "recoil line leaves the sampled range")
    H_exit = max(H_exit, H)
    yield Piece(line.slope, line.B_r_prime, H, H_exit, PieceKind.RECOIL, line)
    if onto is PieceKind.ASCENDING:
        yield from _asc_up(loop, H_exit)
    else:
        yield from _major_up(loop, H_exit)


def _line_exit_up(loop: MajorLoop, line: RecoilLine) -> tuple[float | None, PieceKind | None]:
    """First point above the corner where the line leaves the loop: below the ascending or above the descending branch."""
    hit = line._exit_cache.get(loop)
    if hit is not None:
        return hit
    H0 = line.corner_H
    best: tuple[float | None, PieceKind | None] = (None, None)
    Ha = np.asarray(loop._Ha)
    Ba = np.asarray(loop._Ba)
    # ascending branch breakpoints, ascending in H
    Hasc = -Ha[::-1]
    Basc = -Ba[::-1]
    for pts_all, vals_all, sign, kind in (
        (Hasc, Basc, -1.0, PieceKind.ASCENDING),
        (Ha, Ba, +1.0, PieceKind.MAJOR),
    ):
        sel = pts_all > H0
        pts = pts_all[sel]
        if len(pts) == 0:
            continue
        diff = sign * (line.B_r_prime + line.slope * pts - vals_all[sel])
        idx = np.nonzero(diff > 1e-12)[0]
        if len(idx) == 0:
            continue
        k = int(idx[0])
        hi = float(pts[k])
        lo = float(pts[k - 1]) if k > 0 else H0
        if kind is PieceKind.ASCENDING:
            m, q, _ = loop.asc_segment_up(lo)
        else:
            m, q, _ = loop.segment_up(lo)
        if line.slope != m:
            H_x = (q - line.B_r_prime) / (line.slope - m)
            H_x = min(max(H_x, lo), hi)
        else:
            H_x = lo
        if best[0] is None or H_x < best[0]:
            best = (H_x, kind)
    line._exit_cache[loop] = best
    return best


# ---------------------------------------------------------------------------------------------------------------------


def _read_two_column_csv(path: str | Path, header: tuple[str, str]) -> list[tuple[float, float]]:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"file not found: {path}")
    rows: list[tuple[float, float]] = []
    with open(path, newline="") as f:
        reader = csv.reader(f)
        first = next(reader, None)
        if first is None or tuple(c.strip() for c in first) != header:
            raise ConfigError(f"{path}: expected header {','.join(header)!r}, got {first!r}")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 2:
                raise ConfigError(f"{path}:{lineno}: expected 2 columns, got {len(row)}")
            try:
                a, b = float(row[0]), float(row[1])
            except ValueError as ex:
                raise ConfigError(f"{path}:{lineno}: {ex}") from None
            if not (math.isfinite(a) and math.isfinite(b)):
                raise ConfigError(f"{path}:{lineno}: non-finite value")
            rows.append((a, b))
    return rows
