"""
Time-domain plant: a voltage-driven coil on the magnet.

The coil obeys ``U_c = R*I_c + N*A_m*dB_m/dt``. The magnetics are quasi-static: at every instant the magnet
operating point is where the load line for the present coil current meets the magnet's active characteristic.
Around any operating point this is the first-order system ``B_g/U_c = G_0 / (L/R*s + 1)``.

Each step is backward Euler in flux, solved on the straight piece of the characteristic that contains the
new operating point. Because the characteristic is piecewise linear, this is the local-permeability
linearization made exact: when the step crosses a corner or a branch sample the solve continues on the next
piece, so kinks never cause the instability an explicit scheme would have there.
"""

from __future__ import annotations

import csv
import dataclasses
import math
from pathlib import Path
from typing import Literal

import numpy as np

from .circuit import CircuitParams, circuit_operating_state, gap_flux_from_magnet, load_line
from .errors import FieldRangeError
from .hysteresis import ALNICO5_RECOIL_FIT, MagnetState, MajorLoop, RecoilModel, iter_pieces, state_at

TRAJECTORY_CSV_HEADER = ("t_s", "U_c_V", "I_c_A", "H_m_A_per_m", "B_m_T", "B_g_T")


@dataclasses.dataclass(frozen=True, slots=True)
class PlantState:
    t: float
    I_c: float
    U_c: float
    magnet: MagnetState
    B_g: float
    known_history: bool = True
    """False until the magnet has been saturated once: a thermally demagnetized magnet is on no known recoil line."""


@dataclasses.dataclass
class SensorModel:
    """Air-gap flux sensor with additive Gaussian noise from a private, seeded generator."""

    noise_sigma: float = 0.0
    seed: int | np.random.SeedSequence | None = 0

    def __post_init__(self) -> None:
        if not (math.isfinite(self.noise_sigma) and self.noise_sigma >= 0):
            raise ValueError(f"noise_sigma must be non-negative: {self.noise_sigma}")
        self.rng = np.random.default_rng(self.seed)


def measure_B_g(s: PlantState, sensor: SensorModel) -> float:
    if sensor.noise_sigma == 0:
        return s.B_g
    return s.B_g + float(sensor.rng.normal(0.0, sensor.noise_sigma))


def step(s: PlantState, U_c: float, dt: float, p: CircuitParams, loop: MajorLoop, fit: RecoilModel) -> PlantState:
    """Advance the plant by ``dt`` with coil voltage ``U_c`` held constant."""
    if not dt > 0:
        raise ValueError(f"dt must be positive: {dt}")
    drive = U_c - p.R * s.I_c
    if drive == 0.0:
        return PlantState(s.t + dt, s.I_c, U_c, s.magnet, s.B_g, s.known_history)
    inv_s = -1.0 / load_line(0.0, p)[0]
    k = p.L_m / p.N  # I_c = k * (H_m + B_m/|slope|) on the load line
    # Flux balance N*A_m*(B - B_n) = (U - R*I)*dt with I from the load line: a*B(H) + b*H = c
    a = p.N * p.A_m + p.R * dt * k * inv_s
    b = p.R * dt * k
    c = p.N * p.A_m * s.magnet.B_m + U_c * dt
    up = drive > 0
    try:
        for piece in iter_pieces(s.magnet, loop, fit, up):
            H = (c - a * piece.intercept) / (a * piece.slope + b)
            if up and H <= piece.H_end:
                H = max(H, piece.H_start)
                break
            if not up and H >= piece.H_end:
                H = min(H, piece.H_start)
                break
    except FieldRangeError as ex:
        raise FieldRangeError(
            ex.H, *ex.valid, f"plant step at t = {s.t:.6g} s, U_c = {U_c:.6g} V, I_c = {s.I_c:.6g} A"
        ) from None
    magnet = state_at(piece, H, loop, fit)
    I_c = k * (magnet.H_m + magnet.B_m * inv_s)
    return PlantState(s.t + dt, I_c, U_c, magnet, gap_flux_from_magnet(magnet.B_m, p), s.known_history)


def linearize(
    s: PlantState,
    p: CircuitParams,
    loop: MajorLoop,
    recoil: RecoilModel | None = None,
    going_up: bool = False,
) -> tuple[float, float]:
    """
    Small-signal (G_0 [T/V], L [H]) at the present operating point, for motion in the given direction.
    On a recoil line the permeability is mu_rec*mu0; on the major branch it is the one-sided branch slope.
    """
    mu_d = next(iter_pieces(s.magnet, loop, recoil or ALNICO5_RECOIL_FIT, going_up)).slope
    return small_signal(mu_d, p)


def small_signal(mu_d: float, p: CircuitParams) -> tuple[float, float]:
    """(G_0, L) for a magnet of differential permeability ``mu_d`` [T/(A/m)] in circuit ``p``."""
    s_abs = -load_line(0.0, p)[0]
    series = mu_d * s_abs / (mu_d + s_abs)  # magnet and gap reluctances in series
    dBm_dI = p.N / p.L_m * series
    L = p.N * p.A_m * dBm_dI
    G_0 = dBm_dI * p.A_m / (p.k1 * p.A_g) / p.R
    return G_0, L


class Trajectory:
    """Decimated log of plant states."""

    def __init__(self, decimation: int = 1) -> None:
        if decimation < 1:
            raise ValueError(f"decimation must be >= 1: {decimation}")
        self.decimation = decimation
        self.rows: list[tuple[float, float, float, float, float, float]] = []
        self._count = 0

    def record(self, s: PlantState, force: bool = False) -> None:
        if force or self._count % self.decimation == 0:
            self.rows.append((s.t, s.U_c, s.I_c, s.magnet.H_m, s.magnet.B_m, s.B_g))
        self._count += 1

    def as_array(self) -> np.ndarray:
        return np.array(self.rows, dtype=np.float64).reshape(-1, len(TRAJECTORY_CSV_HEADER))

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as f:
            w = csv.writer(f, lineterminator="\n")
            w.writerow(TRAJECTORY_CSV_HEADER)
            w.writerows([repr(v) for v in row] for row in self.rows)


@dataclasses.dataclass(frozen=True)
class Plant:
    """The physical system under simulation: circuit, magnet material, integration step and amplifier limit."""

    params: CircuitParams
    loop: MajorLoop
    recoil: RecoilModel
    dt: float = 1e-4
    U_max: float = math.inf

    def __post_init__(self) -> None:
        if not self.dt > 0:
            raise ValueError(f"dt must be positive: {self.dt}")
        if not self.U_max > 0:
            raise ValueError(f"U_max must be positive: {self.U_max}")

    def step(self, s: PlantState, U_c: float) -> PlantState:
        U_c = min(max(U_c, -self.U_max), self.U_max)
        return step(s, U_c, self.dt, self.params, self.loop, self.recoil)

    def run(self, s: PlantState, U_c: float, n_steps: int, log: Trajectory | None = None) -> PlantState:
        for _ in range(n_steps):
            s = self.step(s, U_c)
            if log is not None:
                log.record(s)
        return s

    def state_from_magnet(self, magnet: MagnetState, t: float = 0.0, known_history: bool = True) -> PlantState:
        """Plant at rest (zero current) with the magnet relaxed from ``magnet`` onto the zero-current load line."""
        m, _, _ = circuit_operating_state(magnet, self.loop, 0.0, self.params, self.recoil)
        return PlantState(t, 0.0, 0.0, m, gap_flux_from_magnet(m.B_m, self.params), known_history)

    def initial_state(self, kind: Literal["demagnetized", "saturated"] = "demagnetized") -> PlantState:
        if kind == "demagnetized":
            return self.state_from_magnet(MagnetState.demagnetized(self.loop, self.recoil), known_history=False)
        if kind == "saturated":
            return self.state_from_magnet(MagnetState.saturated(self.loop))
        raise ValueError(f"unknown initial state {kind!r}")

    def tau_min(self) -> float:
        """Smallest electrical time constant L/R over the permeabilities the magnet can present."""
        slopes = [m for m in self.loop._m if m > 0]
        mu_min = min(slopes) if slopes else math.inf
        for b in (-self.loop.B_sat, 0.0, self.loop.B_sat):
            mu_min = min(mu_min, self.recoil.mu_rec(b) * self.params.mu0)
        return small_signal(mu_min, self.params)[1] / self.params.R
