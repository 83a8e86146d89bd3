"""Exception hierarchy shared by all pipeline stages.

Exit-code / HTTP mapping (stable contract):
  InputError            -> exit 2 / HTTP 400
  PipelineError         -> exit 3 / HTTP 500
  ReasonerError         -> exit 4 / HTTP 502
"""


class HandoverError(Exception):
    """Base class for all errors raised by this package."""


class InputError(HandoverError):
    """Invalid caller input: bad dimensions, missing files, empty masks."""


class DegenerateGeometryError(InputError):
    """Geometry without a well-defined answer (too few points, ambiguous axis)."""


class PipelineError(HandoverError):
    """A pipeline stage failed (non-input, non-reasoner)."""

    def __init__(self, message: str, stage: str | None = None):
        super().__init__(message if stage is None else f"[{stage}] {message}")
        self.stage = stage


class BackendError(PipelineError):
    """The part-segmentation backend adapter failed."""


class SelectionError(PipelineError):
    """Grasp selection could not produce a candidate (retry budget exhausted)."""


class ReasonerError(HandoverError):
    """The reasoner failed: network trouble or schema-invalid answers after retries."""


class SchemaViolation(ReasonerError):
    """A reasoner answer did not match the declared output structure."""


EXIT_OK = 0
EXIT_INPUT = 2
EXIT_PIPELINE = 3
EXIT_REASONER = 4


def exit_code_for(exc: BaseException) -> int:
    """Map an exception to the CLI exit-code contract."""
    if isinstance(exc, InputError):
        return EXIT_INPUT
    if isinstance(exc, ReasonerError):
        return EXIT_REASONER
    if isinstance(exc, HandoverError):
        return EXIT_PIPELINE
    return EXIT_PIPELINE
