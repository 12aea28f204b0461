"""Exception types. Each carries a stable machine-readable ``code``."""


class HawkesLabError(Exception):
    code = "ERROR"
    exit_code = 1


class ValidationError(HawkesLabError, ValueError):
    code = "VALIDATION"

    def __init__(self, message, paths=()):
        super().__init__(message)
        self.paths = tuple(paths)


class DomainError(ValidationError):
    code = "DOMAIN"


class ErgodicityError(ValidationError):
    code = "NON_ERGODIC"


class ConfigurationError(ValidationError):
    code = "CONFIG_INVALID"


class ConfigNotFoundError(ConfigurationError):
    code = "CONFIG_NOT_FOUND"


class CoverageError(ValidationError):
    code = "COVERAGE"


class DivergentIntegralError(ValidationError):
    code = "DIVERGENT_INTEGRAL"


class NonStationaryError(ValidationError):
    code = "NONSTATIONARY"


class FCLTPreconditionError(ValidationError):
    code = "FCLT_PRECONDITION"


class NumericalError(HawkesLabError, ArithmeticError):
    code = "NUMERICAL"
    exit_code = 2


class ExplosionError(NumericalError):
    """Raised when a path exceeds the event-count cap."""

    code = "EXPLOSION"


class VerificationFailed(HawkesLabError):
    code = "VERIFY_FAILED"
    exit_code = 2
