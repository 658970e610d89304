"""Exception types raised across the package."""

from __future__ import annotations


class TunableMagnetError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(TunableMagnetError, ValueError):
    """Invalid parameters, dataset or configuration file."""


class FieldRangeError(TunableMagnetError, ValueError):
    """A magnetic field strength falls outside the sampled major loop."""

    def __init__(self, H: float, lo: float, hi: float, context: str = "") -> None:
        self.H = H
        self.valid = (lo, hi)
        msg = f"H = {H:.6g} A/m outside sampled range [{lo:.6g}, {hi:.6g}] A/m"
        if context:
            msg += f" ({context})"
        super().__init__(msg)


class NoIntersectionError(TunableMagnetError):
    """Two characteristics that were expected to cross do not."""


class SingularConfigurationError(TunableMagnetError):
    """The remanence equation is singular for the given operating point."""


class UnreachableSetPointError(TunableMagnetError):
    """The requested air-gap flux density cannot be produced by this magnet and geometry."""


class SaturationTimeoutError(TunableMagnetError):
    """The saturating pulse did not reach saturation in time."""


class ControllerTimeoutError(TunableMagnetError):
    """The demagnetization loop did not settle in time."""

    def __init__(self, msg: str, trajectory=None) -> None:
        super().__init__(msg)
        self.trajectory = trajectory


class InsufficientDataError(TunableMagnetError):
    """Not enough measurement data to characterize the magnet."""
