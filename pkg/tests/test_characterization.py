import json
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import MU0
from tunable_magnet.circuit import CircuitParams
from tunable_magnet.errors import ConfigError, InsufficientDataError, SaturationTimeoutError
from tunable_magnet.hysteresis import ALNICO5_RECOIL_FIT, RecoilFit, synthetic_alnico5
from tunable_magnet.characterization import (
    LOG_CSV_HEADER,
    RECOIL_POINTS_CSV_HEADER,
    MeasurementLog,
    SweepProgram,
    characterize,
    estimate_bh_trajectory,
    extract_major_branch,
    extract_recoil_lines,
    fit_recoil_permeability,
    simulate_sweep,
    turning_points,
)
from tunable_magnet.plant import Plant

NOMINAL = CircuitParams(A_m=1e-4, A_g=4e-4, L_m=0.04, l_g=1e-3, N=1000, R=2.0, k1=1.2, k2=1.1)
LOOP = synthetic_alnico5()


@pytest.fixture(scope="module")
def nominal_sweep():
    return simulate_sweep(Plant(NOMINAL, LOOP, ALNICO5_RECOIL_FIT), SweepProgram())


def line_excursion(B_r, mu, H_lo, n=50):
    """Down to H_lo and back up to H = 0, all on the line B = B_r + mu*mu0*H."""
    H = np.concatenate((np.linspace(0.0, H_lo, n), np.linspace(H_lo, 0.0, n)[1:]))
    return H, B_r + mu * MU0 * H


def sweep_of(*excursions):
    """Start near saturation, run the excursions, then carry on down so the last one closes."""
    H = np.concatenate(([10e3], *(e[0] for e in excursions), [-70e3]))
    B = np.concatenate(([1.2], *(e[1] for e in excursions), [-0.5]))
    return H, B


# --- estimation ---------------------------------------------------------------------------------------------


def test_zero_log():
    log = MeasurementLog(np.arange(5.0), np.zeros(5), np.zeros(5))
    H, B = estimate_bh_trajectory(log, NOMINAL)
    assert np.all(H == 0) and np.all(B == 0)


def test_estimate_matches_true_trajectory(nominal_sweep):
    H, B = estimate_bh_trajectory(nominal_sweep.log, NOMINAL)
    assert np.max(np.abs(B - nominal_sweep.B_m)) <= 1e-9
    assert np.max(np.abs(H - nominal_sweep.H_m)) * MU0 <= 1e-9


def test_k1_mismatch_scales_B(nominal_sweep):
    assumed = NOMINAL.with_gap(NOMINAL.l_g, k1=1.0)
    _, B = estimate_bh_trajectory(nominal_sweep.log, assumed)
    nz = np.abs(nominal_sweep.B_m) > 1e-3
    ratio = nominal_sweep.B_m[nz] / B[nz]
    assert np.allclose(ratio, 1.2 / 1.0, rtol=1e-9)


@settings(max_examples=50, deadline=None)
@given(st.floats(-1.0, 1.0), st.floats(-10.0, 10.0), st.floats(0.1, 10.0))
def test_estimate_linear_in_B_g(B_g, I_c, c):
    """Scaling B_g by c scales B_m by c and moves H_m by (c-1) times the gap term."""
    log1 = MeasurementLog(np.array([0.0]), np.array([I_c]), np.array([B_g]))
    logc = MeasurementLog(np.array([0.0]), np.array([I_c]), np.array([c * B_g]))
    H1, B1 = estimate_bh_trajectory(log1, NOMINAL)
    Hc, Bc = estimate_bh_trajectory(logc, NOMINAL)
    assert Bc[0] == pytest.approx(c * B1[0], rel=1e-12, abs=1e-300)
    gap_term = -2 * NOMINAL.k2 * NOMINAL.l_g * B_g / (NOMINAL.L_m * MU0)
    assert Hc[0] - H1[0] == pytest.approx((c - 1) * gap_term, rel=1e-9, abs=1e-6)


# --- log file -----------------------------------------------------------------------------------------------


def test_log_round_trip(tmp_path, nominal_sweep):
    path = tmp_path / "log.csv"
    nominal_sweep.log.write_csv(path)
    assert path.read_text().splitlines()[0] == ",".join(LOG_CSV_HEADER)
    back = MeasurementLog.load_csv(path)
    for a, b in ((back.t, nominal_sweep.log.t), (back.I_c, nominal_sweep.log.I_c), (back.B_g, nominal_sweep.log.B_g)):
        assert np.array_equal(a, b)


@pytest.mark.parametrize(
    "text, match",
    [
        ("", "empty"),
        ("t,I,B\n0,0,0\n", "expected header"),
        ("t_s,I_c_A,B_g_T\n", "no samples"),
        ("t_s,I_c_A,B_g_T\n0,0\n", "expected 3 columns"),
        ("t_s,I_c_A,B_g_T\n0,x,0\n", "non-numeric"),
        ("t_s,I_c_A,B_g_T\n1,0,0\n0,0,0\n", "strictly increasing"),
        ("t_s,I_c_A,B_g_T\n0,nan,0\n", "non-finite"),
    ],
)
def test_log_rejects_malformed(tmp_path, text, match):
    path = tmp_path / "bad.csv"
    path.write_text(text)
    with pytest.raises(ConfigError, match=match):
        MeasurementLog.load_csv(path)


# --- recoil extraction --------------------------------------------------------------------------------------


def test_exact_line_excursion():
    H, B = sweep_of(line_excursion(0.6, 5.0, -40e3))
    (c,) = extract_recoil_lines(H, B, B_sat=1.3)
    assert c.B_r_prime == pytest.approx(0.6, abs=1e-12)
    assert c.mu_rec == pytest.approx(5.0, rel=1e-12)


def test_two_excursions_ordered_by_remanence():
    H, B = sweep_of(line_excursion(0.7, 5.3, -30e3), line_excursion(0.4, 4.9, -50e3))
    chords = extract_recoil_lines(H, B, B_sat=1.3)
    assert [round(c.B_r_prime, 9) for c in chords] == [0.4, 0.7]
    assert [c.mu_rec for c in chords] == pytest.approx([4.9, 5.3], rel=1e-12)


def test_narrow_excursion_skipped_with_warning():
    Hn, Bn = line_excursion(0.6, 5.0, -500.0)
    H, B = sweep_of((Hn - 20e3, Bn))
    with pytest.warns(UserWarning, match="skipped"):
        assert extract_recoil_lines(H, B, B_sat=1.3) == []


def test_turning_points_reject_small_wiggles():
    rng = np.random.default_rng(1)
    H = np.concatenate((np.linspace(0, -10e3, 200), np.linspace(-10e3, 0, 200)))
    noisy = H + rng.normal(0, 20.0, H.size)
    tps = turning_points(noisy, band=100.0)
    assert len(tps) == 1 and abs(noisy[tps[0]] + 10e3) < 100


def test_simulated_chords_match_plant(nominal_sweep):
    chords = extract_recoil_lines(nominal_sweep.H_m, nominal_sweep.B_m, LOOP.B_sat)
    assert len(chords) == len(SweepProgram().excursions_A)
    for c in chords:
        assert c.mu_rec == pytest.approx(ALNICO5_RECOIL_FIT.mu_rec(c.B_r_prime), abs=1e-6)


def test_major_branch_recovered(nominal_sweep):
    H, B = estimate_bh_trajectory(nominal_sweep.log, NOMINAL)
    Hb, Bb = extract_major_branch(H, B)
    assert Hb.size > 100
    assert np.max(np.abs(Bb - [LOOP.desc(h) for h in Hb])) <= 1e-3
    with pytest.raises(InsufficientDataError):
        extract_major_branch([], [])


# --- fit ----------------------------------------------------------------------------------------------------


def test_two_exact_points_recover_fit():
    pts = [(b, 0.955 * b + 4.69) for b in (0.2, 0.8)]
    fit, rms = fit_recoil_permeability(pts)
    assert fit.slope == pytest.approx(0.955, abs=1e-12)
    assert fit.intercept == pytest.approx(4.69, abs=1e-12)
    assert rms <= 1e-12
    assert fit.valid_range == (0.2, 0.8)


def test_fit_degenerate_inputs():
    with pytest.raises(InsufficientDataError):
        fit_recoil_permeability([(0.5, 5.0)])
    with pytest.raises(InsufficientDataError):
        fit_recoil_permeability([(0.5, 5.0), (0.5, 5.1)])


def test_noisy_fit_within_three_standard_errors():
    """Monte Carlo over seeds; the standard errors come from the textbook OLS formulas."""
    x = np.linspace(0.05, 1.0, 30)
    sigma = 0.02
    sxx = np.sum((x - x.mean()) ** 2)
    se_slope = sigma / np.sqrt(sxx)
    se_icpt = sigma * np.sqrt(1 / x.size + x.mean() ** 2 / sxx)
    misses = 0
    slopes = []
    for seed in range(300):
        y = 0.955 * x + 4.69 + np.random.default_rng(seed).normal(0, sigma, x.size)
        fit, _ = fit_recoil_permeability(list(zip(x, y)))
        slopes.append(fit.slope)
        misses += abs(fit.slope - 0.955) > 3 * se_slope or abs(fit.intercept - 4.69) > 3 * se_icpt
    assert misses <= 5  # about 1.6 expected at the 3-sigma level for two coefficients
    assert abs(np.mean(slopes) - 0.955) < 3 * se_slope / np.sqrt(300)


# --- full pipeline ------------------------------------------------------------------------------------------


def test_round_trip_nominal_fit(nominal_sweep, tmp_path):
    report = characterize(nominal_sweep.log, NOMINAL, LOOP.B_sat)
    assert report.fit.slope == pytest.approx(0.955, abs=1e-9)
    assert report.fit.intercept == pytest.approx(4.69, abs=1e-9)
    report.write(tmp_path / "fit.json", tmp_path / "pts.csv")
    doc = json.loads((tmp_path / "fit.json").read_text())
    assert doc["n_loops"] == len(report.points) == 5
    assert set(doc) == {"slope", "intercept", "residual_rms", "n_loops", "loops"}
    assert (tmp_path / "pts.csv").read_text().splitlines()[0] == ",".join(RECOIL_POINTS_CSV_HEADER)


def test_round_trip_other_truth():
    truth = RecoilFit(0.5, 5.2)
    res = simulate_sweep(Plant(NOMINAL, LOOP, truth), SweepProgram())
    report = characterize(res.log, NOMINAL, LOOP.B_sat)
    assert report.fit.slope == pytest.approx(0.5, rel=0.01)
    assert report.fit.intercept == pytest.approx(5.2, rel=0.01)


def test_noisy_sweep_still_close():
    prog = SweepProgram(noise_B_T=2e-5, noise_I_A=1e-4)
    res = simulate_sweep(Plant(NOMINAL, LOOP, ALNICO5_RECOIL_FIT), prog, seed=3)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        report = characterize(res.log, NOMINAL, LOOP.B_sat)
    assert report.fit.slope == pytest.approx(0.955, abs=0.1)
    assert report.fit.intercept == pytest.approx(4.69, abs=0.05)
    again = simulate_sweep(Plant(NOMINAL, LOOP, ALNICO5_RECOIL_FIT), prog, seed=3)
    assert np.array_equal(again.log.B_g, res.log.B_g)


def test_sweep_amplitude_too_small():
    with pytest.raises(SaturationTimeoutError, match="insufficient sweep amplitude"):
        simulate_sweep(Plant(NOMINAL, LOOP, ALNICO5_RECOIL_FIT), SweepProgram(I_max_A=3.0, excursions_A=(-1.0,)))


def test_sweep_program_validation():
    with pytest.raises(ConfigError):
        SweepProgram(excursions_A=(-1.0, -0.5))
    with pytest.raises(ConfigError):
        SweepProgram(I_max_A=0.0)
    w = SweepProgram().waypoints()
    assert w[0] == 0.0 and max(w) == 10.25 and min(w) == -10.25
