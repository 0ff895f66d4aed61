"""Exception hierarchy.

Every error raised on purpose by the library derives from ``ParavoltError``;
the CLI maps these to exit code 1 ("domain error").
"""


class ParavoltError(Exception):
    """Base class for domain errors."""


class ParameterError(ParavoltError, ValueError):
    pass


class SpecError(ParavoltError, ValueError):
    """Grid functions with incompatible grids or channel counts were combined."""


class GridError(ParavoltError, ValueError):
    pass


class CapabilityError(ParavoltError):
    """A vector field was asked for a derivative it does not provide."""


class EstimationError(ParavoltError):
    """Regularity fit is undefined (too few nonzero blocks)."""


class SupportError(ParavoltError, ValueError):
    pass


class SmoothnessError(ParavoltError):
    """A signal handed to the smooth lift carries top-octave energy."""


class RoughPathError(ParavoltError):
    pass


class NumericalError(ParavoltError):
    pass


class RegimeError(ParavoltError, ValueError):
    """Exponent constraints of the selected solution regime are violated."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class NonContractionError(ParavoltError):
    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class LocalizationError(ParavoltError):
    def __init__(self, message, reports=None):
        super().__init__(message)
        self.reports = reports or []


class SamplerError(ParavoltError):
    pass


class ConfigError(ParavoltError, ValueError):
    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))
