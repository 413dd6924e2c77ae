"""Exception types shared across the pipeline."""
from __future__ import annotations


class InterflowError(Exception):
    """Base class for all pipeline errors."""


class SeriesTooShort(InterflowError):
    """A series does not have enough points for the requested operation."""


class ParseError(InterflowError):
    def __init__(self, line_no: int, reason: str):
        super().__init__(f"line {line_no}: {reason}")
        self.line_no = line_no
        self.reason = reason


class DuplicateId(InterflowError):
    """Two flows in one set share a flow_id."""


class SchemaMismatch(InterflowError):
    """A feature row does not conform to the active schema."""


class NeverOffloaded(InterflowError):
    """Flow has too few measurements to ever leave the observable state."""


class EmptyWindow(InterflowError):
    """active_timeout does not exceed the observable-segment duration."""


class EmptyInput(InterflowError):
    """A statistic was requested over an empty collection."""


class DegenerateLabels(InterflowError):
    """A metric or model requires both classes to be present."""


class ShapeError(InterflowError):
    """Mismatched array lengths."""


class ConstraintViolation(InterflowError):
    """An input violates an operation-specific constraint."""


class ConfigError(InterflowError):
    """Invalid generator or pipeline configuration."""


class UnknownPreset(InterflowError):
    """Unrecognised scenario preset name."""


class InsufficientData(InterflowError):
    """Not enough rows to honour a split/balance request."""
