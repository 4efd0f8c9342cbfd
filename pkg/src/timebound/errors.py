"""Exception hierarchy shared by every analysis phase."""


class TimeboundError(Exception):
    """Base class for all errors raised by this package."""


class EncodingError(TimeboundError):
    pass


class DecodeError(TimeboundError):
    def __init__(self, addr: int, message: str):
        super().__init__(f"decode error at 0x{addr:x}: {message}")
        self.addr = addr


class AssemblyError(TimeboundError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class TrapError(TimeboundError):
    """Raised by the simulator; ``addr`` is the faulting instruction."""

    def __init__(self, addr: int, message: str):
        super().__init__(f"trap at 0x{addr:x}: {message}")
        self.addr = addr


class AnalysisError(TimeboundError):
    """The analyzer refuses to produce a bound (exit code 2 in the CLI)."""


class AnnotationError(TimeboundError):
    pass


class InternalError(TimeboundError):
    """A broken internal invariant (e.g. fixpoint failed to converge)."""
