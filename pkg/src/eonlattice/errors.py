"""Exception types raised across the package."""


class EonLatticeError(Exception):
    """Base class for every error raised by eonlattice."""


class InvalidPatternError(EonLatticeError, ValueError):
    pass


class InadmissibleWidthError(EonLatticeError, ValueError):
    pass


class UnknownNodeError(EonLatticeError, KeyError):
    pass


class TopologyParseError(EonLatticeError, ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class DuplicateLinkError(TopologyParseError):
    pass


class SelfLoopError(TopologyParseError):
    pass


class InvalidEndpointError(EonLatticeError, ValueError):
    pass


class ConflictError(EonLatticeError):
    """A slot/link pair was already occupied (double booking)."""


class NotOccupiedError(EonLatticeError):
    """A release targeted a slot/link pair that is already free."""


class TraceError(EonLatticeError, ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ConfigError(EonLatticeError, ValueError):
    pass


class EngineMismatchError(EonLatticeError):
    """The layered and slot-by-slot engines returned different decisions."""

    def __init__(self, step: int, layered, oracle):
        self.step = step
        self.layered = layered
        self.oracle = oracle
        super().__init__(f"engines disagree at step {step}: layered={layered!r} oracle={oracle!r}")
