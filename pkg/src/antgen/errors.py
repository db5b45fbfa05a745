"""Exception hierarchy. Everything raised on bad data derives from AntgenError."""


class AntgenError(ValueError):
    """Base class for domain/data errors (CLI exit code 2)."""


class InsufficientDataError(AntgenError):
    pass


class DegenerateGeometryError(AntgenError):
    pass


class DominatingRateError(AntgenError):
    pass


class VanishingIntensityError(AntgenError):
    pass


class OverThinnedError(AntgenError):
    pass


class PatternFileError(AntgenError):
    pass


class StageError(AntgenError):
    """A pipeline stage failed; ``stage`` names it."""

    def __init__(self, stage, cause):
        self.stage = stage
        self.cause = cause
        super().__init__(f"[{stage}] {cause}")


class DegenerateFieldWarning(UserWarning):
    pass
