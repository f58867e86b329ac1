class DefectError(Exception):
    """Base class for every error raised by the defect toolkit."""


class SizeMismatchError(DefectError):
    pass


class ModelMismatchError(DefectError):
    pass


class InvalidSpecError(DefectError):
    pass


class LogicalMeasurementError(DefectError):
    """A deformation step tried to measure a nontrivial logical operator."""


class ConfigurationError(DefectError):
    """A braid script did not return the holes to their starting configuration."""


class DistanceFloorError(DefectError):
    pass


class SchemeError(DefectError):
    pass


class ProgramError(DefectError):
    pass


class CapExceededError(DefectError):
    pass


class ParseError(DefectError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
