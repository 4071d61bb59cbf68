"""Exception types raised across the pipeline."""


class MVProfileError(Exception):
    """Base class for all package errors."""


class CorpusParseError(MVProfileError, ValueError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class DuplicateIdError(MVProfileError, ValueError):
    pass


class EmptyViewError(MVProfileError, ValueError):
    pass


class TooFewRecordsError(MVProfileError, ValueError):
    pass


class EmptyWalksError(MVProfileError, ValueError):
    pass


class BackendUnavailableError(MVProfileError, RuntimeError):
    pass


class MissingViewError(MVProfileError, KeyError):
    pass


class WidthMismatchError(MVProfileError, ValueError):
    pass


class AllMaskedError(MVProfileError, ValueError):
    pass


class NonFiniteLossError(MVProfileError, FloatingPointError):
    def __init__(self, epoch: int, batch: int, value: float):
        super().__init__(f"non-finite loss {value} at epoch {epoch}, batch {batch}")
        self.epoch = epoch
        self.batch = batch


class FieldEmptyError(MVProfileError, ValueError):
    pass


class LengthMismatchError(MVProfileError, ValueError):
    pass


class InvalidClassError(MVProfileError, ValueError):
    pass


class DegenerateMarginalsError(MVProfileError, ZeroDivisionError):
    pass


class EmptyClassError(MVProfileError, ValueError):
    pass


class GeocoderUnavailableError(MVProfileError, RuntimeError):
    pass


class ConfigError(MVProfileError, ValueError):
    pass
