"""Custom exceptions for mkg-lib-autoscale."""


class AutoscaleError(Exception):
    """Base exception for all simulator errors."""

    pass


class ConfigurationError(AutoscaleError):
    """Raised when a run, experiment or workload configuration is invalid."""

    def __init__(self, message: str, field: str | None = None) -> None:
        """Initialize ConfigurationError.

        Args:
            message: Error message.
            field: Dotted path of the offending field, if known.
        """
        super().__init__(message)
        self.field = field


class TraceFormatError(AutoscaleError):
    """Raised when a trace or class manifest file cannot be parsed."""

    def __init__(
        self,
        message: str,
        row: int | None = None,
        path: str | None = None,
    ) -> None:
        """Initialize TraceFormatError.

        Args:
            message: Error message.
            row: 1-based data row number (the header is row 0).
            path: File that failed to parse.
        """
        location = f" (row {row})" if row is not None else ""
        super().__init__(f"{message}{location}")
        self.row = row
        self.path = path


class UnknownClassError(TraceFormatError):
    """Raised when a trace references a class missing from the class manifest."""

    pass


class ConversionError(AutoscaleError, ValueError):
    """Raised when a processing delay cannot be converted to CPU cycles."""

    pass


class DistributionError(AutoscaleError, ValueError):
    """Raised when a distribution is evaluated outside its domain."""

    pass


class FitError(AutoscaleError):
    """Raised when the maximum-likelihood fit does not converge."""

    def __init__(self, message: str, last_iterate: float | None = None) -> None:
        """Initialize FitError.

        Args:
            message: Error message.
            last_iterate: Shape estimate of the last Newton iteration.
        """
        super().__init__(message)
        self.last_iterate = last_iterate


class DegenerateSampleError(FitError):
    """Raised when samples cannot identify a Weibull distribution."""

    pass


class InsufficientDataError(AutoscaleError):
    """Raised when a statistic is requested over an empty window."""

    pass


class UnknownPolicyError(ConfigurationError):
    """Raised when a scaling policy name is not registered."""

    pass
