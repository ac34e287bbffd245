"""Exception hierarchy shared by all loopgeom modules."""


class LoopGeomError(ValueError):
    """Base class for every error raised by loopgeom."""


class InvalidInputError(LoopGeomError):
    pass


class PoleError(LoopGeomError):
    """Evaluation of a Laurent polynomial at lambda = 0 with negative degrees."""


class NotInAlgebraError(LoopGeomError):
    pass


class NotAdaptedFrameError(LoopGeomError):
    pass


class DegenerateCoframeError(LoopGeomError):
    def __init__(self, message, node=None):
        super().__init__(message)
        self.node = node


class DegenerateDataError(LoopGeomError):
    def __init__(self, message, node=None):
        super().__init__(message)
        self.node = node


class InvalidSubspaceError(LoopGeomError):
    pass


class NotAVacuumError(LoopGeomError):
    pass


class TwistError(LoopGeomError):
    def __init__(self, message, involution=None):
        super().__init__(message)
        self.involution = involution


class ConfigError(LoopGeomError):
    """Configuration text failed validation; ``errors`` holds (line, message) pairs."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(f"line {ln}: {msg}" for ln, msg in self.errors))
