"""
Recover the magnet's BH characteristic and its recoil-permeability distribution from coil current and
air-gap flux measurements.

A low-frequency sweep drives the magnet around its major loop, pausing on the way down to run recoil
excursions back to zero current. The circuit model maps each (I_c, B_g) sample to (H_m, B_m); every excursion
is reduced to the chord through its two turning points, and the chords' (B_r', mu_rec) pairs are fitted
with a straight line.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import math
import warnings
from pathlib import Path
from typing import Sequence

import numpy as np
import numpy.typing as npt

from .circuit import CircuitParams, magnet_fields_from_measurement
from .errors import ConfigError, InsufficientDataError, SaturationTimeoutError
from .hysteresis import MU0, RecoilFit
from .plant import Plant, PlantState

LOG_CSV_HEADER = ("t_s", "I_c_A", "B_g_T")
RECOIL_POINTS_CSV_HEADER = ("B_r_prime_T", "mu_rec", "H_lo_A_per_m", "B_lo_T", "H_hi_A_per_m", "B_hi_T")


@dataclasses.dataclass(frozen=True, eq=False)
class MeasurementLog:
    t: npt.NDArray[np.float64]
    I_c: npt.NDArray[np.float64]
    B_g: npt.NDArray[np.float64]

    def __post_init__(self) -> None:
        cols = [np.asarray(c, dtype=np.float64) for c in (self.t, self.I_c, self.B_g)]
        if any(c.ndim != 1 for c in cols) or len({c.size for c in cols}) != 1:
            raise ConfigError("measurement log columns must be 1-D and of equal length")
        if not all(np.all(np.isfinite(c)) for c in cols):
            raise ConfigError("measurement log contains non-finite values")
        if np.any(np.diff(cols[0]) <= 0):
            raise ConfigError("measurement log time stamps must be strictly increasing")
        for name, c in zip(("t", "I_c", "B_g"), cols):
            object.__setattr__(self, name, c)

    def __len__(self) -> int:
        return int(self.t.size)

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as f:
            w = csv.writer(f, lineterminator="\n")
            w.writerow(LOG_CSV_HEADER)
            w.writerows((repr(float(a)), repr(float(b)), repr(float(c))) for a, b, c in zip(self.t, self.I_c, self.B_g))

    @staticmethod
    def load_csv(path: str | Path) -> MeasurementLog:
        with open(path, newline="") as f:
            rows = list(csv.reader(f))
        if not rows:
            raise ConfigError(f"{path}: empty measurement log")
        if tuple(c.strip() for c in rows[0]) != LOG_CSV_HEADER:
            raise ConfigError(f"{path}: expected header {','.join(LOG_CSV_HEADER)}, got {','.join(rows[0])}")
        data = []
        for i, r in enumerate(rows[1:], start=2):
            if not r:
                continue
            if len(r) != 3:
                raise ConfigError(f"{path}:{i}: expected 3 columns, got {len(r)}")
            try:
                data.append([float(v) for v in r])
            except ValueError:
                raise ConfigError(f"{path}:{i}: non-numeric value in {r}") from None
        if not data:
            raise ConfigError(f"{path}: measurement log has no samples")
        a = np.array(data)
        return MeasurementLog(a[:, 0], a[:, 1], a[:, 2])


# --- sweep simulation -----------------------------------------------------------------------------------


@dataclasses.dataclass(frozen=True)
class SweepProgram:
    """Current program for a characterization sweep, realized open-loop as ``U_c = R * I_ref(t)``."""

    I_max_A: float = 10.25
    ramp_rate_A_per_s: float = 20.0
    dwell_s: float = 0.1
    excursions_A: tuple[float, ...] = (-0.5, -1.0, -1.5, -2.0, -2.5)
    """Currents on the way down from positive saturation at which the sweep turns back to zero."""
    dt_s: float = 1e-3
    noise_B_T: float = 0.0
    noise_I_A: float = 0.0

    def __post_init__(self) -> None:
        if not (self.I_max_A > 0 and self.ramp_rate_A_per_s > 0 and self.dt_s > 0):
            raise ConfigError("sweep amplitude, ramp rate and time step must be positive")
        if self.dwell_s < 0 or self.noise_B_T < 0 or self.noise_I_A < 0:
            raise ConfigError("sweep dwell and noise levels must be non-negative")
        ex = self.excursions_A
        if any(not -self.I_max_A < i < 0 for i in ex) or any(b >= a for a, b in zip(ex, ex[1:])):
            raise ConfigError("recoil excursion currents must be negative, decreasing and inside the sweep amplitude")

    def waypoints(self) -> list[float]:
        pts = [0.0, self.I_max_A, 0.0]
        for i in self.excursions_A:
            pts += [i, 0.0]
        pts += [-self.I_max_A, self.I_max_A, 0.0]
        return pts

    def current_reference(self) -> npt.NDArray[np.float64]:
        """I_ref at every simulation step: linear ramps between waypoints with a dwell at each one."""
        parts = [np.zeros(1)]
        n_dwell = round(self.dwell_s / self.dt_s)
        pts = self.waypoints()
        for a, b in zip(pts, pts[1:]):
            n = max(1, math.ceil(abs(b - a) / (self.ramp_rate_A_per_s * self.dt_s)))
            parts.append(a + (b - a) * np.arange(1, n + 1) / n)
            parts.append(np.full(n_dwell, b))
        return np.concatenate(parts)


@dataclasses.dataclass(frozen=True)
class SweepResult:
    log: MeasurementLog
    H_m: npt.NDArray[np.float64]
    """True magnet field of the simulated plant at every logged sample."""
    B_m: npt.NDArray[np.float64]


def simulate_sweep(plant: Plant, program: SweepProgram = SweepProgram(), seed: int | None = 0) -> SweepResult:
    """
    Drive ``plant`` through the sweep and log (t, I_c, B_g) every step, optionally with sensor noise.
    Raises SaturationTimeoutError if either saturation polarity is not reached.
    """
    if not math.isclose(plant.dt, program.dt_s):
        plant = dataclasses.replace(plant, dt=program.dt_s)
    I_ref = program.current_reference()
    s: PlantState = plant.initial_state("demagnetized")
    n = I_ref.size
    t, I, Bg, H, Bm = (np.empty(n) for _ in range(5))
    t[0], I[0], Bg[0], H[0], Bm[0] = s.t, s.I_c, s.B_g, s.magnet.H_m, s.magnet.B_m
    R = plant.params.R
    for k in range(1, n):
        s = plant.step(s, R * I_ref[k])
        t[k], I[k], Bg[k], H[k], Bm[k] = s.t, s.I_c, s.B_g, s.magnet.H_m, s.magnet.B_m
    thr = plant.loop.saturation_threshold
    if Bm.max() < thr or Bm.min() > -thr:
        raise SaturationTimeoutError(
            f"insufficient sweep amplitude: I_max = {program.I_max_A} A reached B_m in "
            f"[{Bm.min():.4f}, {Bm.max():.4f}] T, saturation needs +/-{thr:.4f} T"
        )
    if program.noise_B_T > 0 or program.noise_I_A > 0:
        rng = np.random.default_rng(seed)
        Bg = Bg + rng.normal(0.0, program.noise_B_T, n) if program.noise_B_T > 0 else Bg
        I = I + rng.normal(0.0, program.noise_I_A, n) if program.noise_I_A > 0 else I
    return SweepResult(MeasurementLog(t, I, Bg), H, Bm)


# --- estimation -----------------------------------------------------------------------------------------


def estimate_bh_trajectory(log: MeasurementLog, p: CircuitParams) -> tuple[npt.NDArray[np.float64], npt.NDArray[np.float64]]:
    """(H_m, B_m) for every logged sample, in log order."""
    return magnet_fields_from_measurement(log.B_g, log.I_c, p)


def turning_points(H: npt.NDArray[np.float64], band: float = 100.0) -> list[int]:
    """
    Indices of the extremes of H between direction reversals. A reversal only counts once H has moved
    ``band`` back from the running extreme, which rejects noise-induced micro-reversals.
    """
    out: list[int] = []
    ext, direction = 0, 0
    for k in range(1, H.size):
        if direction == 0:
            if abs(H[k] - H[0]) > band:
                direction = 1 if H[k] > H[0] else -1
                ext = int(np.argmax(H[: k + 1]) if direction > 0 else np.argmin(H[: k + 1]))
        elif (H[k] - H[ext]) * direction > 0:
            ext = k
        elif (H[ext] - H[k]) * direction > band:
            out.append(ext)
            direction, ext = -direction, k
    return out


@dataclasses.dataclass(frozen=True)
class RecoilChord:
    B_r_prime: float
    mu_rec: float
    lo: tuple[float, float]
    hi: tuple[float, float]


def extract_recoil_lines(
    H: Sequence[float],
    B: Sequence[float],
    B_sat: float | None = None,
    band: float = 100.0,
    min_width: float = 1000.0,
) -> list[RecoilChord]:
    """
    Chords through the two turning points of every recoil excursion: a field minimum followed by a field
    maximum, neither at saturation. Sorted by B_r'. Excursions narrower than ``min_width`` [A/m] are skipped
    with a warning.
    """
    H = np.asarray(H, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    if H.shape != B.shape:
        raise ValueError("H and B must have the same shape")
    limit = 0.98 * (B_sat if B_sat is not None else float(np.max(np.abs(B), initial=0.0)))
    tps = turning_points(H, band)
    chords = []
    for a, b in zip(tps, tps[1:]):
        if not H[a] < H[b]:
            continue
        if abs(B[a]) >= limit or abs(B[b]) >= limit:
            continue
        width = H[b] - H[a]
        if width < min_width:
            warnings.warn(f"recoil excursion at H = {H[a]:.0f} A/m spans only {width:.0f} A/m; skipped", stacklevel=2)
            continue
        slope = (B[b] - B[a]) / width
        chords.append(RecoilChord(float(B[a] - slope * H[a]), float(slope / MU0), (float(H[a]), float(B[a])), (float(H[b]), float(B[b]))))
    return sorted(chords, key=lambda c: c.B_r_prime)


def extract_major_branch(H: Sequence[float], B: Sequence[float]) -> tuple[npt.NDArray[np.float64], npt.NDArray[np.float64]]:
    """
    Samples on the major descending branch: starting from the maximum field, every sample that sets a new
    running minimum of H. Recoil excursions never do, so only the branch survives.
    """
    H = np.asarray(H, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    if H.size == 0:
        raise InsufficientDataError("no samples")
    start = int(np.argmax(H))
    h, b = H[start:], B[start:]
    keep = np.concatenate(([True], h[1:] < np.minimum.accumulate(h)[:-1]))
    return h[keep], b[keep]


@dataclasses.dataclass(frozen=True)
class FitReport:
    fit: RecoilFit
    residual_rms: float
    points: tuple[RecoilChord, ...]

    def to_json(self) -> str:
        return json.dumps(
            {
                "slope": self.fit.slope,
                "intercept": self.fit.intercept,
                "residual_rms": self.residual_rms,
                "n_loops": len(self.points),
                "loops": [{"B_r_prime_T": c.B_r_prime, "mu_rec": c.mu_rec} for c in self.points],
            },
            indent=2,
        )

    def write(self, json_path: str | Path, csv_path: str | Path) -> None:
        Path(json_path).write_text(self.to_json() + "\n")
        with open(csv_path, "w", newline="") as f:
            w = csv.writer(f, lineterminator="\n")
            w.writerow(RECOIL_POINTS_CSV_HEADER)
            for c in self.points:
                w.writerow([repr(v) for v in (c.B_r_prime, c.mu_rec, *c.lo, *c.hi)])


def fit_recoil_permeability(points: Sequence[tuple[float, float]] | Sequence[RecoilChord]) -> tuple[RecoilFit, float]:
    """Ordinary least-squares line ``mu_rec = slope*B_r' + intercept``; returns (fit, residual RMS)."""
    pts = [(c.B_r_prime, c.mu_rec) if isinstance(c, RecoilChord) else (float(c[0]), float(c[1])) for c in points]
    if len(pts) < 2:
        raise InsufficientDataError(f"need at least two recoil lines to fit, got {len(pts)}")
    x = np.array([p[0] for p in pts])
    y = np.array([p[1] for p in pts])
    if np.ptp(x) == 0:
        raise InsufficientDataError("all recoil lines share the same remanence; slope is undetermined")
    A = np.column_stack((x, np.ones_like(x)))
    (slope, intercept), *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - (slope * x + intercept)
    rms = float(np.sqrt(np.mean(resid**2)))
    lo, hi = float(x.min()), float(x.max())
    return RecoilFit(float(slope), float(intercept), valid_range=(lo, hi)), rms


def characterize(
    log: MeasurementLog,
    p: CircuitParams,
    B_sat: float | None = None,
    band: float = 100.0,
    min_width: float = 1000.0,
) -> FitReport:
    """Full pipeline: estimate (H_m, B_m), extract the recoil chords, fit the permeability line."""
    if len(log) == 0:
        raise InsufficientDataError("empty measurement log")
    H, B = estimate_bh_trajectory(log, p)
    chords = extract_recoil_lines(H, B, B_sat, band, min_width)
    fit, rms = fit_recoil_permeability(chords)
    return FitReport(fit, rms, tuple(chords))
