"""Exception hierarchy shared by every stage of the pipeline."""


class ShowprogError(Exception):
    """Base class for all toolkit errors."""


class InvalidInputError(ShowprogError, ValueError):
    pass


class ScalingError(ShowprogError):
    """An image cannot be brought under the requested encoded size."""


class InvalidSeparatorError(InvalidInputError):
    pass


class MissingDataError(ShowprogError, KeyError):
    """A lookup table lacks the requested key (year, reference width, ...)."""

    def __str__(self) -> str:  # KeyError quotes its message otherwise
        return str(self.args[0]) if self.args else ""


class ConfigurationError(ShowprogError):
    pass


class TransportError(ShowprogError):
    """A remote service could not be reached. Safe to retry."""

    retriable = True


class MalformedDraftError(ShowprogError, ValueError):
    def __init__(self, message: str, offset: int | None = None):
        self.offset = offset
        if offset is not None:
            message = f"{message} (at offset {offset})"
        super().__init__(message)


class GraphError(ShowprogError):
    """Serialization refused because the graph does not validate."""

    def __init__(self, message: str, violations=()):
        super().__init__(message)
        self.violations = list(violations)


class ConflictError(ShowprogError):
    pass


class ParseError(ShowprogError, ValueError):
    pass


class UnsupportedPatternError(ShowprogError, ValueError):
    pass


class GatedDraftError(ShowprogError):
    """A draft that failed the formal reward was passed to a stage that requires a pass."""
