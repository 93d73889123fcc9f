"""Exception hierarchy shared by the pipeline stages and the CLI.

Each error carries the process exit code the CLI reports for it:
0 success, 2 config error, 3 stage failure, 4 endpoint failure.
"""


class FcmirError(Exception):
    """Base class for all fcmir errors."""

    exit_code = 1


class ConfigError(FcmirError):
    """Invalid configuration, flags, or stage selection."""

    exit_code = 2


class InputSchemaError(ConfigError):
    """An input file does not match the expected schema.

    Attributes:
        path: File that failed to parse
        line: 1-indexed line number of the offending row (None if file-level)
    """

    def __init__(self, path: str, message: str, line: int | None = None):
        self.path = path
        self.line = line
        location = f"{path}:{line}" if line is not None else path
        super().__init__(f"{location}: {message}")


class StageError(FcmirError):
    """A pipeline stage failed."""

    exit_code = 3


class IngestError(StageError):
    """Frames could not be loaded or decoded."""


class StitchError(StageError):
    """Overlap estimation between two images failed."""


class PromptError(StageError):
    """A prompt template could not be rendered."""


class ResponseParseError(StageError):
    """An endpoint response did not match the expected JSON contract."""

    def __init__(self, message: str, raw: str = ""):
        self.raw = raw
        super().__init__(message)


class EndpointError(FcmirError):
    """The multimodal endpoint failed after all retries."""

    exit_code = 4


class EmbeddingError(EndpointError):
    """The embedding provider failed or returned an unusable vector."""
