"""Exception hierarchy shared by every fracwin module."""


class FracwinError(Exception):
    """Base class for all library errors."""


class DomainError(FracwinError, ValueError):
    """A parameter lies outside the domain of an operator or type."""


class AlignmentError(FracwinError, ValueError):
    """A window length or delay is not an integer multiple of the step."""


class GridError(FracwinError, ValueError):
    """Index out of range, or two trajectories live on different grids."""


class EquilibriumError(FracwinError, ValueError):
    """The supplied point is not an equilibrium of the vector field."""


class SampleOverflowError(FracwinError, ArithmeticError):
    """A sampled quantity overflowed to a non-finite value."""


class ConfigError(FracwinError, ValueError):
    """A scenario configuration failed validation."""
