"""Exception hierarchy. Every error carries a machine-readable ``code``."""


class UniconvError(Exception):
    code = "error"


class InvalidParameterError(UniconvError, ValueError):
    code = "invalid-parameter"


class DomainError(UniconvError, ValueError):
    code = "domain"


class DimensionMismatchError(UniconvError, ValueError):
    code = "dimension-mismatch"


class NonFiniteError(UniconvError, ArithmeticError):
    code = "non-finite"


class SamplingError(UniconvError, RuntimeError):
    code = "sampling-failure"


class NotOntoError(UniconvError, ValueError):
    """The derivative cannot be surjective (more outputs than inputs, or rank loss)."""

    code = "not-onto"


class RegionError(UniconvError, ValueError):
    code = "region"


class PreconditionError(UniconvError, ValueError):
    code = "precondition"


class InfeasibleError(UniconvError, RuntimeError):
    code = "infeasible"


class UnsupportedDimensionError(UniconvError, ValueError):
    code = "unsupported-dimension"


class ProblemFileError(UniconvError, ValueError):
    """Base for problem-file ingestion errors; ``line`` is 1-based when known."""

    code = "parse"

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ParseError(ProblemFileError):
    code = "parse"


class AsymmetricMatrixError(ProblemFileError):
    code = "asymmetric-matrix"


class UnknownSetKindError(ProblemFileError):
    code = "unknown-set-kind"


class FileDimensionError(ProblemFileError):
    code = "dimension-mismatch"
