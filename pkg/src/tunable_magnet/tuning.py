"""
The tuning cycle (predict, saturate if needed, demagnetize under flux feedback, coast) and the campaign runner
that repeats it over a grid of set-points and air-gaps.

Two deliberate model mismatches can be injected between predictor and plant: the plant may follow a nonlinear
recoil-permeability table while the predictor uses a linear fit, and the plant's leakage coefficient may vary
affinely with the air-gap while the predictor keeps the value identified at the nominal gap.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import math
import os
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Literal, Sequence

import numpy as np

from .circuit import CircuitParams
from .controller import (
    ControllerSettings,
    PIGains,
    reference_transform,
    run_demagnetization,
    saturation_pulse,
)
from .errors import ConfigError, TunableMagnetError
from .hysteresis import ALNICO5_RECOIL_FIT, MagnetState, MajorLoop, Mode, RecoilFit, RecoilModel
from .plant import Plant, PlantState, SensorModel, Trajectory
from .prediction import PredictionResult, predict

EPS_B = 1e-4  # [T] remanence tolerance for the "higher recoil line" test
CAMPAIGN_CSV_HEADER = ("B_g_set_T", "l_g_m", "mean_T", "MAE_T", "precision_3sigma_T", "n", "errors")


@dataclasses.dataclass(frozen=True)
class TuningConfig:
    """Everything a tuning cycle needs. ``params`` is the predictor's circuit model at the nominal gap."""

    params: CircuitParams
    loop: MajorLoop
    fit: RecoilFit = ALNICO5_RECOIL_FIT
    plant_recoil: RecoilModel | None = None
    """Recoil model the simulated magnet obeys; defaults to ``fit`` (perfect model)."""
    k1_affine: tuple[float, float] | None = None
    """Plant leakage coefficient ``k1 = a + b*l_g``; None keeps the predictor's k1."""
    gains: PIGains = PIGains()
    settings: ControllerSettings = ControllerSettings()
    dt_sim: float = 1e-4
    noise_sigma: float = 0.0
    initial_state: Literal["demagnetized", "saturated"] = "demagnetized"
    eps_B: float = EPS_B

    def __post_init__(self) -> None:
        if self.initial_state not in ("demagnetized", "saturated"):
            raise ConfigError(f"unknown initial state {self.initial_state!r}")
        if not (self.eps_B >= 0 and self.dt_sim > 0 and self.noise_sigma >= 0):
            raise ConfigError("eps_B and noise_sigma must be non-negative and dt_sim positive")

    @property
    def perfect_model(self) -> bool:
        return self.k1_affine is None and (self.plant_recoil is None or self.plant_recoil == self.fit)

    def predictor_params(self, l_g: float | None = None) -> CircuitParams:
        return self.params if l_g is None else self.params.with_gap(l_g)

    def plant_params(self, l_g: float | None = None) -> CircuitParams:
        p = self.predictor_params(l_g)
        if self.k1_affine is None:
            return p
        a, b = self.k1_affine
        return p.with_gap(p.l_g, k1=a + b * p.l_g)

    def plant(self, l_g: float | None = None) -> Plant:
        return Plant(
            self.plant_params(l_g),
            self.loop,
            self.plant_recoil or self.fit,
            dt=self.dt_sim,
            U_max=self.gains.U_max,
        )

    def with_dt(self, dt_sim: float) -> TuningConfig:
        return dataclasses.replace(self, dt_sim=dt_sim)


@dataclasses.dataclass(frozen=True)
class TuningResult:
    B_g_set: float
    l_g: float
    final_B_g: float
    error: float
    saturated: bool
    duration: float
    """Simulated time of the cycle [s]."""
    trajectory: Trajectory | None
    prediction: PredictionResult
    reference_B_g: float
    min_margin: float
    """Smallest (B_g - reference) during demagnetization [T]; negative values are overshoot."""
    settle_time: float
    state: PlantState

    def __post_init__(self) -> None:
        if self.error != self.final_B_g - self.B_g_set:
            raise ValueError("error must equal final_B_g - B_g_set")
        if not self.duration > 0:
            raise ValueError(f"duration must be positive: {self.duration}")

    def summary(self) -> dict[str, float | bool]:
        return {
            "B_g_set_T": self.B_g_set,
            "l_g_m": self.l_g,
            "final_B_g_T": self.final_B_g,
            "error_T": self.error,
            "duration_s": self.duration,
            "settle_time_s": self.settle_time,
            "saturated": self.saturated,
            "B_r_prime_T": self.prediction.B_r_prime,
            "mu_rec": self.prediction.mu_rec,
            "corner_H_A_per_m": self.prediction.corner[0],
            "corner_B_T": self.prediction.corner[1],
            "reference_B_g_T": self.reference_B_g,
            "min_margin_T": self.min_margin,
        }


def needs_saturation(required_B_r: float, state: PlantState, recoil: RecoilModel, eps_B: float = EPS_B) -> bool:
    """True if the target recoil line lies above the present one, or the magnet's history is unknown."""
    if not state.known_history:
        return True
    return required_B_r > state.magnet.remanence(recoil) + eps_B


def tune(
    B_g_set: float,
    state: PlantState,
    cfg: TuningConfig,
    l_g: float | None = None,
    sensor: SensorModel | None = None,
    log: Trajectory | None = None,
) -> TuningResult:
    """Run one tuning cycle from ``state`` at gap ``l_g`` (default: the nominal gap of ``cfg.params``)."""
    pp = cfg.predictor_params(l_g)
    plant = cfg.plant(l_g)
    sensor = sensor if sensor is not None else SensorModel(cfg.noise_sigma)
    pred = predict(B_g_set, pp, cfg.loop, cfg.fit)
    ref = reference_transform(pred.corner[1], pp)

    t0 = state.t
    if log is not None:
        log.record(state, force=True)
    saturated = needs_saturation(pred.B_r_prime, state, plant.recoil, cfg.eps_B)
    s = state
    if saturated:
        st = cfg.settings
        s = saturation_pulse(
            s,
            plant,
            st.saturation_voltage,
            dwell=st.saturation_dwell_s,
            coast_current=st.coast_current_A,
            timeout=st.saturation_timeout_s,
            log=log,
        )
    demag = run_demagnetization(s, ref, cfg.gains, sensor, plant, cfg.settings, log)
    s = demag.state
    if log is not None and log.rows and log.rows[-1][0] != s.t:
        log.record(s, force=True)
    return TuningResult(
        B_g_set=B_g_set,
        l_g=pp.l_g,
        final_B_g=s.B_g,
        error=s.B_g - B_g_set,
        saturated=saturated,
        duration=s.t - t0,
        trajectory=log,
        prediction=pred,
        reference_B_g=ref,
        min_margin=demag.min_margin,
        settle_time=demag.settle_time,
        state=s,
    )


def on_predicted_line(result: TuningResult, tol: float) -> bool:
    """The magnet rests on a recoil line whose remanence is within ``tol`` of the prediction."""
    m: MagnetState = result.state.magnet
    return m.mode is Mode.ON_RECOIL_LINE and abs(m.recoil.B_r_prime - result.prediction.B_r_prime) <= tol


# --- campaign --------------------------------------------------------------------------------------------


@dataclasses.dataclass(frozen=True)
class CellStats:
    B_g_set: float
    l_g: float
    mean: float
    """Mean achieved air-gap flux density [T]."""
    MAE: float
    precision_3sigma: float
    n: int
    finals: tuple[float, ...] = ()
    failure: str | None = None

    @property
    def ok(self) -> bool:
        return self.failure is None


def cell_statistics(B_g_set: float, l_g: float, finals: Sequence[float]) -> CellStats:
    """Mean, mean absolute error and three sample standard deviations of the achieved flux densities."""
    x = np.asarray(finals, dtype=np.float64)
    if x.size == 0:
        raise ValueError("no results to summarize")
    precision = 3.0 * float(np.std(x, ddof=1)) if x.size > 1 else 0.0
    return CellStats(
        B_g_set=B_g_set,
        l_g=l_g,
        mean=float(np.mean(x)),
        MAE=float(np.mean(np.abs(x - B_g_set))),
        precision_3sigma=precision,
        n=int(x.size),
        finals=tuple(float(v) for v in x),
    )


@dataclasses.dataclass(frozen=True)
class CampaignStats:
    cells: tuple[CellStats, ...]
    """Ordered by descending set-point, then ascending gap."""

    def cell(self, B_g_set: float, l_g: float) -> CellStats:
        for c in self.cells:
            if c.B_g_set == B_g_set and c.l_g == l_g:
                return c
        raise KeyError((B_g_set, l_g))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CAMPAIGN_CSV_HEADER)
        for c in self.cells:
            if c.ok:
                w.writerow([repr(c.B_g_set), repr(c.l_g), repr(c.mean), repr(c.MAE), repr(c.precision_3sigma), c.n, ""])
            else:
                w.writerow([repr(c.B_g_set), repr(c.l_g), "", "", "", 0, c.failure])
        return buf.getvalue()

    def write_csv(self, path: str | Path) -> None:
        Path(path).write_text(self.to_csv())


def _run_cell(args: tuple[float, float, int, TuningConfig, int, tuple[int, int]]) -> CellStats:
    B_g_set, l_g, n, cfg, seed, key = args
    finals = []
    try:
        for k in range(n):
            plant = cfg.plant(l_g)
            sensor = SensorModel(cfg.noise_sigma, np.random.SeedSequence(seed, spawn_key=(*key, k)))
            r = tune(B_g_set, plant.initial_state(cfg.initial_state), cfg, l_g, sensor)
            finals.append(r.final_B_g)
    except TunableMagnetError as ex:
        return CellStats(B_g_set, l_g, math.nan, math.nan, math.nan, len(finals), tuple(finals), f"{type(ex).__name__}: {ex}")
    return cell_statistics(B_g_set, l_g, finals)


def default_workers(n_cells: int) -> int:
    return max(1, min(n_cells, os.cpu_count() or 1))


def run_campaign(
    set_points: Sequence[float],
    gaps: Sequence[float],
    n: int,
    cfg: TuningConfig,
    seed: int = 0,
    workers: int | None = None,
) -> CampaignStats:
    """
    ``n`` independent cycles per (set-point, gap) cell, each from a fresh plant with its own sensor noise
    substream. Cells run as blocks; results do not depend on the worker count.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1: {n}")
    if not set_points or not gaps:
        raise ValueError("set_points and gaps must be non-empty")
    jobs = [
        (float(b), float(g), n, cfg, seed, (i, j))
        for i, b in sorted(enumerate(set_points), key=lambda t: -t[1])
        for j, g in sorted(enumerate(gaps), key=lambda t: t[1])
    ]
    workers = default_workers(len(jobs)) if workers is None else workers
    if workers <= 1:
        cells = [_run_cell(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            cells = list(ex.map(_run_cell, jobs))
    return CampaignStats(tuple(cells))
