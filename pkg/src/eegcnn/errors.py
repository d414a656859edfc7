"""Exception hierarchy.

Every error raised on purpose by this package derives from :class:`EEGCNNError`.
The CLI maps the three broad families (dataset, config, I/O) onto distinct
exit codes; see :mod:`eegcnn.cli`.
"""


class EEGCNNError(Exception):
    """Base class for all package errors."""


class InvalidArgumentError(EEGCNNError, ValueError):
    pass


class InvalidRangeError(InvalidArgumentError):
    pass


class ShapeError(EEGCNNError, ValueError):
    pass


class StateError(EEGCNNError, RuntimeError):
    pass


class LabelError(EEGCNNError, ValueError):
    pass


class DatasetError(EEGCNNError):
    """Bad or insufficient data (empty sets, missing classes, too-short signals)."""


class TooShortError(DatasetError, ValueError):
    pass


class LengthError(DatasetError, ValueError):
    pass


class UndefinedSNRError(EEGCNNError, ZeroDivisionError):
    pass


class ConfigError(EEGCNNError, ValueError):
    pass


class FormatError(EEGCNNError, IOError):
    """A file could not be parsed. ``line`` is 1-based when known."""

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(where + message)


class NotACheckpointError(FormatError):
    pass


class CorruptCheckpointError(FormatError):
    pass


class VersionMismatchError(FormatError):
    pass
