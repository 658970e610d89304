"""
Air-gap flux feedback for magnetization tuning: a PI controller that drives the demagnetizing voltage, the
corner-point reference transform, and the saturating pulse.

Demagnetization along the major branch cannot be undone, so the closed loop must approach the corner point
from above without overshoot; passing it leaves the magnet on a lower recoil line.
"""

from __future__ import annotations

import dataclasses
import enum
import math

from .circuit import CircuitParams
from .errors import ConfigError, ControllerTimeoutError, SaturationTimeoutError
from .plant import Plant, PlantState, SensorModel, Trajectory, measure_B_g

DEFAULT_KP = 2.07  # [V/T]
DEFAULT_KI = 150.0  # [V/(T s)]


@dataclasses.dataclass(frozen=True)
class PIGains:
    k_p: float = DEFAULT_KP
    k_i: float = DEFAULT_KI
    U_max: float = 30.0
    """Output saturation [V]."""

    def __post_init__(self) -> None:
        if not (self.k_p >= 0 and self.k_i >= 0):
            raise ConfigError(f"PI gains must be non-negative: k_p={self.k_p}, k_i={self.k_i}")
        if not self.U_max > 0:
            raise ConfigError(f"U_max must be positive: {self.U_max}")


class Phase(enum.Enum):
    IDLE = "idle"
    SATURATING = "saturating"
    DEMAGNETIZING = "demagnetizing"
    COASTING = "coasting"
    DONE = "done"


_TRANSITIONS = {
    Phase.IDLE: {Phase.SATURATING, Phase.DEMAGNETIZING},
    Phase.SATURATING: {Phase.DEMAGNETIZING},
    Phase.DEMAGNETIZING: {Phase.COASTING},
    Phase.COASTING: {Phase.DONE},
    Phase.DONE: set(),
}


@dataclasses.dataclass(frozen=True)
class ControllerState:
    integrator: float = 0.0
    """Integral of the error [T s]."""
    phase: Phase = Phase.IDLE

    def __post_init__(self) -> None:
        if not math.isfinite(self.integrator):
            raise ValueError(f"integrator diverged: {self.integrator}")

    def enter(self, phase: Phase) -> ControllerState:
        if phase not in _TRANSITIONS[self.phase]:
            raise ValueError(f"illegal phase transition {self.phase.value} -> {phase.value}")
        return dataclasses.replace(self, phase=phase)


@dataclasses.dataclass(frozen=True)
class ControllerSettings:
    dt_control: float = 1e-4
    """Control period [s]."""
    settle_band_T: float = 5e-5
    settle_hold: int = 50
    """Consecutive in-band samples needed to declare the loop settled."""
    coast_current_A: float = 1e-6
    saturation_voltage: float = 20.5
    saturation_dwell_s: float = 0.01
    saturation_timeout_s: float = 2.0
    timeout_s: float = 5.0

    def __post_init__(self) -> None:
        for name in ("dt_control", "settle_band_T", "coast_current_A", "saturation_voltage", "timeout_s"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive: {getattr(self, name)}")
        if self.settle_hold < 1:
            raise ConfigError(f"settle_hold must be >= 1: {self.settle_hold}")
        if self.saturation_dwell_s < 0:
            raise ConfigError(f"saturation_dwell_s must be non-negative: {self.saturation_dwell_s}")


def reference_transform(corner_B: float, p: CircuitParams) -> float:
    """Corner-point flux density in the magnet expressed as the air-gap flux density the sensor sees."""
    return corner_B * p.A_m / (p.k1 * p.A_g)


def pi_step(cs: ControllerState, error: float, dt: float, g: PIGains) -> tuple[float, ControllerState]:
    """
    One period of ``C(s) = k_p + k_i/s``. The integrator is updated before the output (backward rectangle)
    and is frozen while the output is clamped and the error pushes further into the clamp.
    """
    if not dt > 0:
        raise ValueError(f"dt must be positive: {dt}")
    integrator = cs.integrator + error * dt
    u = g.k_p * error + g.k_i * integrator
    if abs(u) > g.U_max and error * u > 0:
        integrator = cs.integrator
        u = g.k_p * error + g.k_i * integrator
    u = min(max(u, -g.U_max), g.U_max)
    return u, dataclasses.replace(cs, integrator=integrator)


def _substeps(plant: Plant, dt_control: float) -> int:
    n = round(dt_control / plant.dt)
    if n < 1 or abs(n * plant.dt - dt_control) > 1e-9 * dt_control:
        raise ConfigError(f"control period {dt_control} s is not a multiple of the plant step {plant.dt} s")
    return n


def coast(
    s: PlantState,
    plant: Plant,
    coast_current: float = 1e-6,
    timeout: float = 5.0,
    log: Trajectory | None = None,
) -> PlantState:
    """Remove the coil voltage and wait for the current to decay below ``coast_current``."""
    t_end = s.t + timeout
    while abs(s.I_c) >= coast_current:
        s = plant.step(s, 0.0)
        if log is not None:
            log.record(s)
        if s.t > t_end:
            raise ControllerTimeoutError(f"coil current still {s.I_c:.3g} A after {timeout} s of coasting")
    return s


def saturation_pulse(
    s: PlantState,
    plant: Plant,
    pulse_voltage: float,
    *,
    dwell: float = 0.01,
    coast_current: float = 1e-6,
    timeout: float = 2.0,
    log: Trajectory | None = None,
) -> PlantState:
    """
    Apply ``+pulse_voltage`` until the magnet reaches the saturation threshold, hold it for ``dwell``,
    then coast to zero current. The result sits on the major descending branch.
    """
    if not pulse_voltage > 0:
        raise ValueError(f"pulse_voltage must be positive: {pulse_voltage}")
    t_end = s.t + timeout
    threshold = plant.loop.saturation_threshold
    while s.magnet.B_m < threshold:
        s = plant.step(s, pulse_voltage)
        if log is not None:
            log.record(s)
        if s.t > t_end:
            raise SaturationTimeoutError(
                f"insufficient pulse voltage: {pulse_voltage} V reached B_m = {s.magnet.B_m:.4f} T "
                f"< {threshold:.4f} T after {timeout} s (I_c = {s.I_c:.4g} A)"
            )
    s = plant.run(s, pulse_voltage, round(dwell / plant.dt), log)
    s = dataclasses.replace(s, known_history=True)
    return coast(s, plant, coast_current, timeout, log)


@dataclasses.dataclass(frozen=True)
class DemagResult:
    state: PlantState
    """Settled and coasted plant state."""
    min_margin: float
    """min over the closed-loop phase of (true B_g - reference) [T]; negative means overshoot."""
    settle_time: float
    controller: ControllerState


def run_demagnetization(
    s: PlantState,
    reference_B_g: float,
    gains: PIGains,
    sensor: SensorModel,
    plant: Plant,
    settings: ControllerSettings = ControllerSettings(),
    log: Trajectory | None = None,
) -> DemagResult:
    """
    Close the loop on measured air-gap flux until the error stays inside the settle band for
    ``settle_hold`` consecutive samples, then remove the voltage and coast.
    """
    n_sub = _substeps(plant, settings.dt_control)
    cs = ControllerState().enter(Phase.DEMAGNETIZING)
    t_start = s.t
    t_end = s.t + settings.timeout_s
    min_margin = s.B_g - reference_B_g
    in_band = 0
    while True:
        error = reference_B_g - measure_B_g(s, sensor)
        in_band = in_band + 1 if abs(error) < settings.settle_band_T else 0
        if in_band >= settings.settle_hold:
            break
        U, cs = pi_step(cs, error, settings.dt_control, gains)
        for _ in range(n_sub):
            s = plant.step(s, U)
            if log is not None:
                log.record(s)
            min_margin = min(min_margin, s.B_g - reference_B_g)
        if s.t > t_end:
            raise ControllerTimeoutError(
                f"demagnetization did not settle within {settings.timeout_s} s: "
                f"B_g = {s.B_g:.6g} T, reference = {reference_B_g:.6g} T",
                trajectory=log,
            )
    settle_time = s.t - t_start
    cs = cs.enter(Phase.COASTING)
    s = coast(s, plant, settings.coast_current_A, settings.timeout_s, log)
    return DemagResult(s, min_margin, settle_time, cs.enter(Phase.DONE))
