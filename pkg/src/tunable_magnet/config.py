"""
JSON run configuration. Everything is validated, and every referenced file is loaded, before any simulation
starts. Relative paths are resolved against the directory of the config file.
"""

from __future__ import annotations

import dataclasses
import json
import math
from importlib import resources
from pathlib import Path
from typing import Any, Mapping

from .characterization import SweepProgram
from .circuit import CircuitParams
from .controller import ControllerSettings, PIGains
from .errors import ConfigError
from .hysteresis import MajorLoop, RecoilFit, RecoilModel, RecoilTable
from .plant import Plant
from .tuning import EPS_B, TuningConfig

SECTIONS = ("bh_dataset", "circuit", "recoil_fit", "controller", "plant", "sensor", "sweep", "campaign", "seed")
REFERENCE_SET_POINTS = (0.175, 0.150, 0.125, 0.100, 0.075, 0.050, 0.025, 0.000)
REFERENCE_GAPS = (1.00e-3, 1.20e-3)


@dataclasses.dataclass(frozen=True)
class CampaignDefaults:
    set_points: tuple[float, ...] = REFERENCE_SET_POINTS
    gaps: tuple[float, ...] = REFERENCE_GAPS
    n: int = 44


@dataclasses.dataclass(frozen=True)
class RunConfig:
    source: Path | None
    bh_dataset: Path
    tuning: TuningConfig
    sweep: SweepProgram
    campaign: CampaignDefaults
    seed: int
    characterize_band: float = 100.0
    characterize_min_width: float = 1000.0

    @property
    def loop(self) -> MajorLoop:
        return self.tuning.loop

    @property
    def params(self) -> CircuitParams:
        return self.tuning.params

    def sweep_plant(self) -> Plant:
        return self.tuning.plant()


def bundled_config(name: str = "nominal") -> Path:
    """Path of a configuration shipped with the package (``nominal`` or ``mismatch``)."""
    return Path(str(resources.files("tunable_magnet") / "data" / f"{name}.json"))


def _section(raw: Mapping[str, Any], name: str, keys: set[str]) -> dict[str, Any]:
    sec = raw.get(name, {})
    if not isinstance(sec, dict):
        raise ConfigError(f"config section {name!r} must be an object")
    unknown = sorted(set(sec) - keys)
    if unknown:
        raise ConfigError(f"config section {name!r}: unknown keys {', '.join(unknown)}")
    return sec


def _num(sec: Mapping[str, Any], key: str, default: float, where: str) -> float:
    v = sec.get(key, default)
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ConfigError(f"{where}.{key} must be a finite number, got {v!r}")
    return float(v)


def _path(base: Path, value: Any, where: str) -> Path:
    if not isinstance(value, str) or not value:
        raise ConfigError(f"{where} must be a file path")
    p = Path(value)
    p = p if p.is_absolute() else base / p
    if not p.is_file():
        raise ConfigError(f"{where}: file not found: {p}")
    return p


def parse_config(raw: Mapping[str, Any], base: Path, source: Path | None = None) -> RunConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    unknown = sorted(set(raw) - set(SECTIONS))
    if unknown:
        raise ConfigError(f"unknown config sections: {', '.join(unknown)}")
    if "bh_dataset" not in raw or "circuit" not in raw:
        raise ConfigError("config needs at least 'bh_dataset' and 'circuit'")

    bh_path = _path(base, raw["bh_dataset"], "bh_dataset")
    loop = MajorLoop.load_csv(bh_path)
    if not isinstance(raw["circuit"], dict):
        raise ConfigError("config section 'circuit' must be an object")
    params = CircuitParams.from_mapping(raw["circuit"])

    rf = _section(raw, "recoil_fit", {"slope", "intercept", "valid_range"})
    vr = rf.get("valid_range")
    if vr is not None and not (isinstance(vr, list) and len(vr) == 2 and all(isinstance(x, (int, float)) for x in vr)):
        raise ConfigError("recoil_fit.valid_range must be [lo, hi]")
    fit = RecoilFit(
        _num(rf, "slope", 0.955, "recoil_fit"),
        _num(rf, "intercept", 4.69, "recoil_fit"),
        None if vr is None else (float(vr[0]), float(vr[1])),
    )

    c = _section(
        raw,
        "controller",
        {"k_p", "k_i", "U_max", "dt_control", "settle_band_T", "settle_hold", "coast_current_A",
         "saturation_voltage", "saturation_dwell_s", "saturation_timeout_s", "timeout_s", "eps_B_T"},
    )
    dflt = ControllerSettings()
    gains = PIGains(_num(c, "k_p", PIGains.k_p, "controller"), _num(c, "k_i", PIGains.k_i, "controller"),
                    _num(c, "U_max", PIGains.U_max, "controller"))
    hold = c.get("settle_hold", dflt.settle_hold)
    if not isinstance(hold, int) or isinstance(hold, bool):
        raise ConfigError(f"controller.settle_hold must be an integer, got {hold!r}")
    settings = ControllerSettings(
        dt_control=_num(c, "dt_control", dflt.dt_control, "controller"),
        settle_band_T=_num(c, "settle_band_T", dflt.settle_band_T, "controller"),
        settle_hold=hold,
        coast_current_A=_num(c, "coast_current_A", dflt.coast_current_A, "controller"),
        saturation_voltage=_num(c, "saturation_voltage", dflt.saturation_voltage, "controller"),
        saturation_dwell_s=_num(c, "saturation_dwell_s", dflt.saturation_dwell_s, "controller"),
        saturation_timeout_s=_num(c, "saturation_timeout_s", dflt.saturation_timeout_s, "controller"),
        timeout_s=_num(c, "timeout_s", dflt.timeout_s, "controller"),
    )
    if settings.saturation_voltage > gains.U_max:
        raise ConfigError(
            f"saturation_voltage {settings.saturation_voltage} V exceeds the amplifier limit U_max {gains.U_max} V"
        )

    pl = _section(raw, "plant", {"dt", "recoil_table", "k1_affine", "initial_state"})
    plant_recoil: RecoilModel | None = None
    if pl.get("recoil_table") is not None:
        plant_recoil = RecoilTable.load_csv(_path(base, pl["recoil_table"], "plant.recoil_table"))
    k1a = pl.get("k1_affine")
    if k1a is not None:
        if not (isinstance(k1a, list) and len(k1a) == 2 and all(isinstance(x, (int, float)) for x in k1a)):
            raise ConfigError("plant.k1_affine must be [a, b] with k1 = a + b*l_g")
        k1a = (float(k1a[0]), float(k1a[1]))
    initial = pl.get("initial_state", "demagnetized")

    sn = _section(raw, "sensor", {"noise_sigma_T"})
    tuning = TuningConfig(
        params=params,
        loop=loop,
        fit=fit,
        plant_recoil=plant_recoil,
        k1_affine=k1a,
        gains=gains,
        settings=settings,
        dt_sim=_num(pl, "dt", 1e-4, "plant"),
        noise_sigma=_num(sn, "noise_sigma_T", 0.0, "sensor"),
        initial_state=initial,
        eps_B=_num(c, "eps_B_T", EPS_B, "controller"),
    )

    sw = _section(raw, "sweep", {"I_max_A", "ramp_rate_A_per_s", "dwell_s", "excursions_A", "dt_s", "noise_B_T",
                                 "noise_I_A", "band_A_per_m", "min_width_A_per_m"})
    d = SweepProgram()
    exc = sw.get("excursions_A", list(d.excursions_A))
    if not isinstance(exc, list):
        raise ConfigError("sweep.excursions_A must be a list")
    sweep = SweepProgram(
        I_max_A=_num(sw, "I_max_A", d.I_max_A, "sweep"),
        ramp_rate_A_per_s=_num(sw, "ramp_rate_A_per_s", d.ramp_rate_A_per_s, "sweep"),
        dwell_s=_num(sw, "dwell_s", d.dwell_s, "sweep"),
        excursions_A=tuple(_num({"x": x}, "x", 0.0, "sweep.excursions_A") for x in exc),
        dt_s=_num(sw, "dt_s", d.dt_s, "sweep"),
        noise_B_T=_num(sw, "noise_B_T", d.noise_B_T, "sweep"),
        noise_I_A=_num(sw, "noise_I_A", d.noise_I_A, "sweep"),
    )

    cp = _section(raw, "campaign", {"set_points_T", "gaps_m", "n"})
    cd = CampaignDefaults()
    n = cp.get("n", cd.n)
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise ConfigError(f"campaign.n must be a positive integer, got {n!r}")
    campaign = CampaignDefaults(
        tuple(_num({"x": x}, "x", 0.0, "campaign.set_points_T") for x in cp.get("set_points_T", cd.set_points)),
        tuple(_num({"x": x}, "x", 0.0, "campaign.gaps_m") for x in cp.get("gaps_m", cd.gaps)),
        n,
    )

    seed = raw.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        raise ConfigError(f"seed must be a non-negative integer, got {seed!r}")

    cfg = RunConfig(
        source=source,
        bh_dataset=bh_path,
        tuning=tuning,
        sweep=sweep,
        campaign=campaign,
        seed=seed,
        characterize_band=_num(sw, "band_A_per_m", 100.0, "sweep"),
        characterize_min_width=_num(sw, "min_width_A_per_m", 1000.0, "sweep"),
    )
    validate(cfg)
    return cfg


def validate(cfg: RunConfig) -> None:
    """Cross-field checks that individual constructors cannot make."""
    t = cfg.tuning
    st = t.settings
    n_sub = st.dt_control / t.dt_sim
    if abs(n_sub - round(n_sub)) > 1e-9 * n_sub or round(n_sub) < 1:
        raise ConfigError(f"controller.dt_control {st.dt_control} s must be a multiple of plant.dt {t.dt_sim} s")
    for l_g in (*cfg.campaign.gaps, t.params.l_g):
        if not l_g > 0:
            raise ConfigError(f"air-gap must be positive: {l_g}")
        plant = t.plant(l_g)
        tau = plant.tau_min()
        if t.dt_sim > tau / 10:
            raise ConfigError(
                f"plant.dt {t.dt_sim} s is too coarse: must be <= tau_min/10 = {tau / 10:.3g} s at l_g = {l_g} m"
            )
    if any(b < 0 for b in cfg.campaign.set_points):
        raise ConfigError("campaign set-points must be non-negative")


def load_config(path: str | Path, seed: int | None = None) -> RunConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as ex:
        raise ConfigError(f"{path}: invalid JSON: {ex}") from None
    cfg = parse_config(raw, path.parent, path)
    if seed is not None:
        if seed < 0:
            raise ConfigError(f"seed must be non-negative: {seed}")
        cfg = dataclasses.replace(cfg, seed=seed)
    return cfg
