"""Exception hierarchy shared by every stage of the toolchain."""

from __future__ import annotations

from dataclasses import dataclass


class ChainpatchError(Exception):
    """Base class for all errors raised by chainpatch."""


@dataclass(frozen=True)
class Diagnostic:
    filename: str
    line: int
    col: int
    message: str

    def __str__(self) -> str:
        return f"{self.filename}:{self.line}:{self.col}: {self.message}"


class ParseError(ChainpatchError):
    """Raised when a source file fails lexing, parsing or static checks."""

    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__("\n".join(str(d) for d in self.diagnostics))


class AnalysisError(ChainpatchError):
    """Violated precondition of a static analysis (e.g. node cannot reach EXIT)."""


class FeasibilityError(ChainpatchError):
    """Chain enumeration or profiling exceeded its configured budget."""


class LocalizationError(ChainpatchError):
    pass


class StaleBaselineError(ChainpatchError):
    pass


class SuiteSplitError(ChainpatchError):
    pass


class PatchError(ChainpatchError):
    pass


class DigestMismatchError(PatchError):
    pass


class StageError(ChainpatchError):
    """Wraps a failure inside one pipeline stage, naming the stage."""

    def __init__(self, stage: str, cause: Exception):
        self.stage = stage
        self.cause = cause
        super().__init__(f"{stage}: {cause}")
