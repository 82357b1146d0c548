"""Exception hierarchy shared across fingerfuse."""


class FingerFuseError(Exception):
    """Base class for all library errors."""


class InvalidInputError(FingerFuseError, ValueError):
    """An argument violates a documented precondition."""


class OutOfRangeError(InvalidInputError):
    """A value lies outside the range a model was calibrated for."""


class DegenerateFitError(FingerFuseError, ValueError):
    """Least-squares design matrix is rank deficient."""


class ProtocolError(FingerFuseError, ValueError):
    """A wire line could not be parsed or a frame could not be encoded.

    ``field`` is the 1-based index of the offending field, or ``None`` when
    the problem is not tied to a single field.
    """

    def __init__(self, message, field=None):
        self.field = field
        if field is not None:
            message = f"field {field}: {message}"
        super().__init__(message)


class TraceFormatError(FingerFuseError, ValueError):
    """A trace file violates the schema; ``line`` is 1-based."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
