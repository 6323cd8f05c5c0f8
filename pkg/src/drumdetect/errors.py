"""Exception types shared across file formats and dataset handling."""


class FormatError(Exception):
    """A binary file violates its format contract."""


class BadMagicError(FormatError):
    pass


class VersionError(FormatError):
    pass


class TruncatedError(FormatError):
    pass


class ShapeMismatchError(FormatError):
    pass


class ArchitectureMismatchError(FormatError):
    pass


class NotWarmedUpError(RuntimeError):
    """Sliding window queried before it holds a full 3 s of frames."""


class DatasetError(Exception):
    """Dataset directory or manifest is unusable."""
