from typing import List, Optional


class SonoforgeException(Exception):
    """Base exception for the sonoforge toolkit"""

    pass


class ValidationError(SonoforgeException):
    """Parameter or precondition violations"""

    pass


class NotFoundError(SonoforgeException):
    """Resource not found errors"""

    pass


class DuplicateError(SonoforgeException):
    """Duplicate identifier errors"""

    pass


class AudioFormatError(SonoforgeException):
    """Audio file could not be decoded"""

    pass


class AudioFileNotFoundError(AudioFormatError, NotFoundError):
    pass


class MalformedHeaderError(AudioFormatError):
    """RIFF/WAVE header is missing or broken"""

    pass


class UnsupportedCodecError(AudioFormatError):
    """Readable container, but not one of the supported PCM/float encodings"""

    pass


class EmptyClipError(ValidationError):
    pass


class InvalidClipError(ValidationError):
    pass


class ClipTooShortError(ValidationError):
    pass


class SilentClipError(ValidationError):
    pass


class InvalidImageError(ValidationError):
    pass


class UploadTooLargeError(ValidationError):
    pass


class ShapeMismatchError(ValidationError):
    pass


class DegenerateScoresError(ValidationError):
    pass


class MissingPatternError(NotFoundError):
    pass


class EmptyClassError(ValidationError):
    pass


class ManifestError(ValidationError):
    """Manifest parse errors; row is the 1-based line number in the CSV file"""

    def __init__(self, message: str, row: Optional[int] = None):
        self.row = row
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)


class OutputWriteError(SonoforgeException):
    pass


class PipelineError(SonoforgeException):
    """Raised after a run when some files failed; failures holds one line per file"""

    def __init__(self, failures: List[str]):
        self.failures = list(failures)
        super().__init__(f"{len(self.failures)} file(s) failed:\n" + "\n".join(self.failures))
