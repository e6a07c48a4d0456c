"""Exception hierarchy shared by every pipeline stage.

Validation problems (bad files, bad arguments, infeasible segmentations) map to
exit code 1, numerical failures (unstable filters, rank deficiency) to exit
code 2. The pipeline wraps either kind in a StageError naming the stage.
"""


class GaitSigError(Exception):
    exit_code = 1


class ValidationError(GaitSigError):
    exit_code = 1


class ConfigError(ValidationError):
    pass


class IngestError(ValidationError):
    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"{message} at line {line}"
        super().__init__(message)
        self.line = line


class ArtifactError(ValidationError):
    pass


class SpanError(ValidationError):
    pass


class EmptySegmentationError(ValidationError):
    pass


class NumericalError(GaitSigError):
    exit_code = 2


class StageError(GaitSigError):
    def __init__(self, stage: str, cause: GaitSigError):
        super().__init__(f"{stage}: {cause}")
        self.stage = stage
        self.cause = cause
        self.exit_code = cause.exit_code
