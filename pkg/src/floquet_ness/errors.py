"""Exception types shared across the package."""


class FloquetNessError(Exception):
    """Base class for all package errors."""


class ConfigError(FloquetNessError):
    """Invalid system/truncation/run configuration."""


class DegenerateSpectrumError(ConfigError):
    """Two quasi-energies coincide within the truncation window."""


class ThresholdCollisionError(FloquetNessError):
    """Incoming energy sits exactly on a channel threshold."""

    def __init__(self, message, channel=None):
        super().__init__(message)
        self.channel = channel


class SolverConditionError(FloquetNessError):
    """Linear system rejected by the condition-number / residual guard."""

    def __init__(self, message, cond=None, residual=None):
        super().__init__(message)
        self.cond = cond
        self.residual = residual


class ConsistencyError(FloquetNessError):
    """Two independent evaluation routes disagree beyond tolerance."""


class UndefinedMomentError(FloquetNessError):
    """Exponential moment requested for a vanishing total rate."""


class NoiseFloorError(FloquetNessError):
    """Ratio diagnostic requested on rates below the resolvable floor."""


class ConvergenceError(FloquetNessError):
    """A limit probe (extrapolation, p_min halving) failed to stabilize."""
