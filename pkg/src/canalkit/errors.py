"""Exception hierarchy shared by all canalkit modules."""


class CanalkitError(Exception):
    """Base class for numeric/geometric failures (CLI exit code 3)."""


class ParameterDomainError(CanalkitError, ValueError):
    pass


class VanishingCurvatureError(CanalkitError):
    """Curvature below the frame-existence tolerance; (N, B) undefined."""


class RegularityError(CanalkitError):
    """A regularity precondition failed. ``where`` holds the offending parameter."""

    def __init__(self, message, where=None):
        super().__init__(message)
        self.where = where


class PositivityError(CanalkitError):
    def __init__(self, message, where=None):
        super().__init__(message)
        self.where = where


class ProfileError(CanalkitError, ValueError):
    pass


class SingularPointError(CanalkitError):
    pass


class MetricDegenerateError(CanalkitError):
    pass


class UnsupportedAngleError(CanalkitError, ValueError):
    pass


class DegenerateIntegrandError(CanalkitError):
    pass


class StartPointError(CanalkitError):
    pass


class EmptyReportError(CanalkitError):
    pass
