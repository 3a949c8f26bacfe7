"""Exception types raised across the simulator."""


class SimulationError(Exception):
    """Base class for simulator errors."""


class ConfigError(SimulationError, ValueError):
    """Invalid or inconsistent scenario configuration."""


class InvalidLength(SimulationError, ValueError):
    """Bit or symbol sequence length incompatible with the operation."""


class LengthMismatch(SimulationError, ValueError):
    """Signals or grids whose sizes do not line up."""


class DegenerateLayout(SimulationError):
    """A user's steering vector lies in the span of the other users' vectors."""


class DelayExceedsCp(SimulationError):
    """Relative path delay in samples is longer than the cyclic prefix."""


class SingularChannel(SimulationError):
    """Effective channel too ill-conditioned for zero-forcing."""


class SizeGuard(SimulationError):
    """Requested brute-force operation is too large."""
