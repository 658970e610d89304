import math

import numpy as np
import pytest

from tunable_magnet.circuit import CircuitParams, gap_flux_from_magnet
from tunable_magnet.errors import FieldRangeError
from tunable_magnet.hysteresis import MagnetState, Mode, RecoilFit, spawn_recoil_line, synthetic_alnico5
from tunable_magnet.plant import (
    TRAJECTORY_CSV_HEADER,
    Plant,
    PlantState,
    SensorModel,
    Trajectory,
    linearize,
    measure_B_g,
    small_signal,
)

NOMINAL = CircuitParams(A_m=1e-4, A_g=4e-4, L_m=0.04, l_g=1e-3, N=1000, R=2.0, k1=1.2, k2=1.1)
LOOP = synthetic_alnico5()
MU5 = RecoilFit(0.0, 5.0)  # constant mu_rec = 5

# Regression fixture: linearize on a mu_rec = 5 recoil line, nominal circuit. Validated below against the
# simulated step response (gain within 1%, time constant within 2%).
GOLDEN_MU5 = (0.015475825879752679, 0.014856792844562573)


def frozen_state(p: CircuitParams = NOMINAL, corner_H: float = -45e3) -> tuple[Plant, PlantState]:
    plant = Plant(p, LOOP, MU5, dt=1e-6)
    line = spawn_recoil_line(LOOP, MU5, corner_H, LOOP.desc(corner_H), on_branch=True)
    return plant, plant.state_from_magnet(MagnetState.on_line(line, corner_H))


def rise_time(t: np.ndarray, y: np.ndarray, y_final: float) -> float:
    """Interpolated time at which y first reaches 63.2% of y_final."""
    r = y / y_final
    target = 1 - math.exp(-1)
    i = int(np.argmax(r >= target))
    return float(np.interp(target, r[i - 1 : i + 1], t[i - 1 : i + 1]))


def step_response(plant: Plant, s0: PlantState, U: float, horizon: float) -> tuple[np.ndarray, np.ndarray]:
    log = Trajectory()
    s = plant.run(s0, U, round(horizon / plant.dt), log)
    a = log.as_array()
    assert s.magnet.mode is Mode.ON_RECOIL_LINE
    return a[:, 0] - s0.t, a[:, 5] - s0.B_g


def test_equilibrium():
    plant, s = frozen_state()
    s2 = plant.step(s, 0.0)
    assert (s2.I_c, s2.B_g, s2.magnet) == (s.I_c, s.B_g, s.magnet)
    assert s2.t == s.t + plant.dt


def test_linearize_golden():
    plant, s = frozen_state()
    G_0, L = linearize(s, NOMINAL, LOOP, MU5)
    assert G_0 == pytest.approx(GOLDEN_MU5[0], rel=1e-12)
    assert L == pytest.approx(GOLDEN_MU5[1], rel=1e-12)


@pytest.mark.parametrize("U", [0.5, -0.5])
def test_first_order_step_response(U):
    plant, s = frozen_state()
    G_0, L = linearize(s, NOMINAL, LOOP, MU5, going_up=U > 0)
    tau = L / NOMINAL.R
    t, y = step_response(plant, s, U, 10 * tau)
    assert y[-1] == pytest.approx(G_0 * U, rel=0.01)
    assert rise_time(t, y, G_0 * U) == pytest.approx(tau, rel=0.02)
    # the whole curve, not just two points
    model = G_0 * U * (1 - np.exp(-t / tau))
    assert np.max(np.abs(y - model)) <= 0.02 * abs(G_0 * U)


def test_doubling_R_halves_time_constant():
    t1, y1 = step_response(*frozen_state(), 0.5, 0.1)
    p2 = NOMINAL.with_gap(NOMINAL.l_g)
    p2 = CircuitParams(**(p2.to_mapping() | {"R": 2 * NOMINAL.R}))
    t2, y2 = step_response(*frozen_state(p2), 1.0, 0.1)  # same DC current
    r1 = rise_time(t1, y1, y1[-1])
    r2 = rise_time(t2, y2, y2[-1])
    assert r2 / r1 == pytest.approx(0.5, rel=0.02)


def test_inductance_scales_with_N_squared():
    mu = 5 * NOMINAL.mu0
    L1 = small_signal(mu, NOMINAL)[1]
    p3 = CircuitParams(**(NOMINAL.to_mapping() | {"N": 3 * NOMINAL.N}))
    assert small_signal(mu, p3)[1] == pytest.approx(9 * L1, rel=1e-12)


def test_retention_without_energy():
    plant = Plant(NOMINAL, LOOP, MU5, dt=1e-4)
    s = plant.initial_state("saturated")
    s = plant.run(s, -5.0, 300)
    while abs(s.I_c) >= 1e-9:
        s = plant.step(s, 0.0)
    held = s.B_g
    # the residual current can move B_g by at most its DC effect, then nothing moves at all
    G_0, _ = linearize(s, NOMINAL, LOOP, MU5)
    s = plant.run(s, 0.0, 50_000)
    assert abs(s.B_g - held) <= G_0 * NOMINAL.R * 1e-9
    held = s.B_g
    s = plant.run(s, 0.0, 50_000)
    assert s.B_g == held
    assert s.t > 10.0


def test_sensor_noise():
    s = PlantState(0.0, 0.0, 0.0, MagnetState.saturated(LOOP), 0.123)
    assert measure_B_g(s, SensorModel(0.0)) == 0.123
    a = [measure_B_g(s, SensorModel(1e-3, 7)) for _ in range(3)]
    assert a[0] == a[1] == a[2]
    sens = SensorModel(2e-5, 11)
    x = np.array([measure_B_g(s, sens) for _ in range(100_000)])
    assert np.var(x, ddof=1) == pytest.approx(2e-5**2, rel=0.05)
    with pytest.raises(ValueError):
        SensorModel(-1.0)


def test_deterministic_trajectory():
    def run():
        plant = Plant(NOMINAL, LOOP, MU5)
        log = Trajectory(decimation=7)
        plant.run(plant.initial_state(), 20.0, 2000, log)
        return log.as_array()

    assert np.array_equal(run(), run())


def test_trajectory_csv(tmp_path):
    plant = Plant(NOMINAL, LOOP, MU5)
    log = Trajectory(decimation=3)
    plant.run(plant.initial_state(), 1.0, 10, log)
    assert len(log.rows) == 4
    path = tmp_path / "t.csv"
    log.write_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == ",".join(TRAJECTORY_CSV_HEADER)
    back = np.loadtxt(path, delimiter=",", skiprows=1)
    assert np.array_equal(back, log.as_array())
    with pytest.raises(ValueError):
        Trajectory(0)


def test_voltage_clamp():
    plant = Plant(NOMINAL, LOOP, MU5, U_max=3.0)
    s = plant.step(plant.initial_state("saturated"), -100.0)
    assert s.U_c == -3.0


def test_field_range_error_has_context():
    plant = Plant(NOMINAL, LOOP, MU5, dt=1e-2)
    s = plant.initial_state("saturated")
    with pytest.raises(FieldRangeError, match="plant step at t"):
        for _ in range(200):
            s = plant.step(s, -1e6)


def test_gap_flux_consistent_with_magnet():
    plant = Plant(NOMINAL, LOOP, MU5)
    s = plant.run(plant.initial_state("saturated"), -4.0, 500)
    assert s.B_g == gap_flux_from_magnet(s.magnet.B_m, NOMINAL)


def test_tau_min_bounds_every_recoil_line():
    plant = Plant(NOMINAL, LOOP, MU5)
    tau = plant.tau_min()
    for H in (-10e3, -40e3, -55e3):
        _, s = frozen_state(corner_H=H)
        assert linearize(s, NOMINAL, LOOP, MU5)[1] / NOMINAL.R >= tau
