"""Exception hierarchy shared by all modules."""


class UraSimError(Exception):
    """Base class for package errors."""


class InvalidParameters(UraSimError, ValueError):
    pass


class InadmissibleParameters(InvalidParameters):
    """(M, K) fails the divisibility conditions of a 2-design."""


class UnsupportedParameters(UraSimError):
    """Admissible parameters for which no construction was found."""


class PopulationExceeded(InvalidParameters):
    """More active users requested than the codebook holds."""


class InstanceTooLarge(UraSimError):
    """Exhaustive enumeration would exceed its guard."""


class CodeParseError(UraSimError, ValueError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class CodeInvariantError(UraSimError):
    """A loaded codebook failed verification.

    The parsed code and the verification report are attached so callers can
    still inspect or use them.
    """

    def __init__(self, code, report):
        self.code = code
        self.report = report
        super().__init__("code failed verification:\n" + "\n".join(report.violations))


class ConfigError(UraSimError, ValueError):
    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")
