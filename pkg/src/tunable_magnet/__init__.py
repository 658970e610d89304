"""Tunable AlNiCo magnet: hysteresis model, magnetic circuit, operating point prediction and feedback tuning."""

from .circuit import CircuitParams, circuit_operating_point, load_line, magnet_fields_from_measurement
from .controller import DEFAULT_KI, DEFAULT_KP, ControllerSettings, PIGains, pi_step, reference_transform
from .errors import (
    ConfigError,
    ControllerTimeoutError,
    FieldRangeError,
    InsufficientDataError,
    NoIntersectionError,
    SaturationTimeoutError,
    SingularConfigurationError,
    TunableMagnetError,
    UnreachableSetPointError,
)
from .hysteresis import (
    MU0,
    ALNICO5_RECOIL_FIT,
    MagnetState,
    MajorLoop,
    Mode,
    RecoilFit,
    RecoilLine,
    RecoilTable,
    apply_H,
    corner_point,
    major_B_at,
    recoil_permeability,
    synthetic_alnico5,
)
from .plant import Plant, PlantState, SensorModel, Trajectory, linearize
from .prediction import PredictionResult, predict, required_remanence
from .tuning import CampaignStats, CellStats, TuningConfig, TuningResult, cell_statistics, run_campaign, tune

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
