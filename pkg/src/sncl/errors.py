"""Exception taxonomy shared across the package.

Every raise in the library goes through one of these so callers (and the CLI)
can map failures to exit codes without string matching.
"""


class SnclError(Exception):
    """Base class for all library errors."""


class ShapeError(SnclError, ValueError):
    """Operand shapes are incompatible for the requested operation."""


class ParameterError(SnclError, ValueError):
    """A value is outside its legal range (capacity, modes, ways, ...)."""


class UnknownHeadError(SnclError, KeyError):
    """Forward pass requested a head id that was never registered."""


class SequencingError(SnclError, RuntimeError):
    """Lifecycle misuse: sessions trained out of order, reuse after freeze, ..."""


class DataError(SnclError, ValueError):
    """Dataset payload violates its contract (labels, ranges, frame shapes)."""


class ValidationError(SnclError, ValueError):
    """Config validation failure. Carries the offending field path."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


class CheckpointError(SnclError, ValueError):
    """Checkpoint bytes are malformed or inconsistent with the config."""
