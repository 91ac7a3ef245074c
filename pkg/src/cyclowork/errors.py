"""Exception types shared across the package."""


class CycloworkError(Exception):
    """Base class."""


class ConfigError(CycloworkError, ValueError):
    """Invalid parameters or configuration."""


class NumericError(CycloworkError, ArithmeticError):
    """A numerical procedure failed."""


class SubdivisionExhausted(NumericError):
    """Adaptive quadrature ran out of subdivisions before converging."""


class DivergentDrive(NumericError):
    """A long-time limit was requested for a drive whose work grows without bound."""


class DegenerateDistribution(NumericError):
    """Work distribution with zero variance."""


class TooFewSamples(CycloworkError, ValueError):
    """Not enough samples for the requested estimator."""


class StepTooLarge(ConfigError):
    """Integrator time step violates the stability/accuracy bound."""


class EnergyDriftExceeded(NumericError):
    """Drive-free energy conservation violated by the integrator."""
