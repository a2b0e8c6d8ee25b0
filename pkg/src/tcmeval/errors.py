"""Exception types shared across the harness."""


class TcmEvalError(Exception):
    """Base class for all harness errors."""


class PreconditionViolation(TcmEvalError):
    pass


class EmptyName(TcmEvalError):
    pass


class EmptyLabel(TcmEvalError):
    pass


class EmptyInput(TcmEvalError):
    pass


class EmptyText(TcmEvalError):
    pass


class RangeError(TcmEvalError):
    pass


class InvalidLogicPoints(TcmEvalError):
    pass


class ParseError(TcmEvalError):
    pass


class SchemaError(TcmEvalError):
    """Carries the offending field paths in ``paths``."""

    def __init__(self, paths: list[str]):
        self.paths = list(paths)
        super().__init__("schema violation at: " + ", ".join(self.paths))


class TemplateError(TcmEvalError):
    pass


class JudgeUnavailable(TcmEvalError):
    """Transport-level failure after exhausting retries; ``transcripts`` holds all attempts."""

    def __init__(self, message: str, transcripts: list[dict] | None = None):
        self.transcripts = transcripts or []
        super().__init__(message)


class VerdictRejected(TcmEvalError):
    """Every attempt returned an unusable verdict; ``transcripts`` holds all attempts."""

    def __init__(self, message: str, transcripts: list[dict] | None = None):
        self.transcripts = transcripts or []
        super().__init__(message)


class UnknownBenchmark(TcmEvalError):
    pass


class DimensionMismatch(TcmEvalError):
    pass


class InvalidPanel(TcmEvalError):
    pass


class OutOfRange(TcmEvalError):
    pass


class Duplicate(TcmEvalError):
    pass


class UnknownLabel(TcmEvalError):
    pass


class UnknownCase(TcmEvalError):
    pass


class SessionClosed(TcmEvalError):
    pass


class ConfigError(TcmEvalError):
    pass


class CorruptLog(TcmEvalError):
    """Raised on a broken event log; ``seq`` is the offending sequence number, if known."""

    def __init__(self, message: str, seq: int | None = None):
        self.seq = seq
        super().__init__(message)


class BindError(TcmEvalError):
    pass
