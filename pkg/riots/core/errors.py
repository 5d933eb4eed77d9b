# riots/core/errors.py
from typing import Any, Iterable, List, Optional

EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_VALIDATION = 2
EXIT_ANALYSIS = 3
EXIT_IO = 4


class RiotsException(Exception):
    """Base for every failure raised while loading or analysing a system graph."""
    exit_code = EXIT_UNEXPECTED

    def __init__(self, message: str, **details: Any):
        super().__init__(message)
        self.message = message
        self.details = details
        self.stage: Optional[str] = None

    def __str__(self) -> str:
        if self.stage:
            return f"[{self.stage}] {self.message}"
        return self.message


# --- 1. VALIDATION / SCHEMA (exit 2) ---

class GraphValidationException(RiotsException):
    """The document or graph violates the model's rules."""
    exit_code = EXIT_VALIDATION


class SchemaViolation(GraphValidationException):
    """Raised when a document does not match the versioned schema."""

    def __init__(self, message: str, errors: Optional[List[str]] = None):
        super().__init__(message, errors=list(errors or []))
        self.errors = list(errors or [])


class DocumentSyntaxError(GraphValidationException):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} (line {line}, column {column})", line=line, column=column)
        self.line = line
        self.column = column


class DuplicateId(GraphValidationException):
    pass


class DanglingReference(GraphValidationException):
    pass


class OutOfRange(GraphValidationException):
    """A probability argument is outside [0, 1]."""


class RiskOutOfRange(OutOfRange):
    pass


class CyclicDependency(GraphValidationException):
    def __init__(self, cycle: Iterable[str]):
        self.cycle = list(cycle)
        super().__init__(f"Cyclic dependency: {' -> '.join(self.cycle + self.cycle[:1])}", cycle=self.cycle)


class MissingRoot(GraphValidationException):
    pass


class UnsupportedFeature(GraphValidationException):
    pass


class ConflictingTrust(GraphValidationException):
    pass


class EmptyUniverse(GraphValidationException):
    """Both function sets are empty, so the trust ratio is 0/0."""


class RecursiveDecomposition(GraphValidationException):
    def __init__(self, chain: Iterable[str]):
        self.chain = list(chain)
        super().__init__(f"Sub-system chain revisits a document: {' -> '.join(self.chain)}", chain=self.chain)


# --- 2. ANALYSIS (exit 3) ---

class AnalysisException(RiotsException):
    exit_code = EXIT_ANALYSIS


class Exploded(AnalysisException):
    def __init__(self, cap: int):
        super().__init__(f"Cutset expansion exceeded {cap} intermediate sets", cap=cap)
        self.cap = cap


class TooLarge(AnalysisException):
    def __init__(self, count: int, limit: int):
        super().__init__(
            f"{count} basic events exceed the exact-backend limit of {limit}; use the mincut backend",
            count=count, limit=limit,
        )
        self.count = count
        self.limit = limit


class MissingEventProbability(AnalysisException):
    def __init__(self, missing: Iterable[str]):
        self.missing = sorted(missing)
        super().__init__(f"No probability for events: {', '.join(self.missing)}", missing=self.missing)


class UnknownEvent(AnalysisException):
    pass


class FloorAboveCurrent(AnalysisException):
    pass


class NotFlat(AnalysisException):
    pass


class NotValidated(AnalysisException):
    pass


# --- 3. I/O (exit 4) ---

class DocumentIOException(RiotsException):
    exit_code = EXIT_IO


class IoError(DocumentIOException):
    pass
