"""Exception types raised across the simulator."""


class PlsimError(Exception):
    """Base class for all simulator errors."""


class ConfigurationError(PlsimError, ValueError):
    """Invalid scenario, calibration, mission config or fault schedule."""


class AssayError(PlsimError):
    """A reaction vessel could not be prepared."""


class EncodingError(PlsimError, ValueError):
    """A telemetry payload cannot be rendered as canonical JSON."""


class ParseError(PlsimError, ValueError):
    """A telemetry line could not be decoded."""

    def __init__(self, message, line_number=None):
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number


class StreamIntegrityError(PlsimError):
    """Telemetry events are out of order."""
