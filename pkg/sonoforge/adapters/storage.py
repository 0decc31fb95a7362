import logging
import os
import tempfile
from pathlib import Path
from typing import Optional, Union

from sonoforge.domain.exceptions import OutputWriteError, UploadTooLargeError, ValidationError

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

# Magic bytes for upload type detection
RIFF_SIGNATURE = b"RIFF"
WAVE_SIGNATURE = b"WAVE"
PNG_SIGNATURE = b"\x89PNG\r\n\x1a\n"
PGM_SIGNATURE = b"P5"


def sniff_audio_type(data: bytes) -> Optional[str]:
    """
    Detect audio container by magic bytes (not MIME type).

    Args:
        data: File content as bytes

    Returns:
        MIME type if detected, None otherwise
    """
    if len(data) < 12:
        return None

    if data[:4] == RIFF_SIGNATURE and data[8:12] == WAVE_SIGNATURE:
        return "audio/wav"

    return None


def sniff_image_type(data: bytes) -> Optional[str]:
    if not data:
        return None

    if data.startswith(PNG_SIGNATURE):
        return "image/png"

    if data.startswith(PGM_SIGNATURE) and len(data) > 2 and data[2:3].isspace():
        return "image/x-portable-graymap"

    return None


def validate_upload_size(data: bytes, max_bytes: int) -> None:
    if len(data) == 0:
        raise ValidationError("Empty file not allowed")

    if len(data) > max_bytes:
        raise UploadTooLargeError(f"File too large. Maximum size: {max_bytes} bytes")


def ensure_directory(path: PathLike) -> Path:
    directory = Path(path)
    try:
        directory.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OutputWriteError(f"Cannot create directory {directory}: {exc}") from exc
    return directory


def safe_child(base_dir: PathLike, *parts: str) -> Path:
    """
    Join parts under base_dir, refusing anything that escapes it.
    """
    base = Path(base_dir).resolve()
    candidate = base.joinpath(*parts).resolve()

    if candidate != base and base not in candidate.parents:
        logger.error(f"Path traversal attempt detected: {candidate}")
        raise ValidationError(f"Output path escapes {base}: {'/'.join(parts)}")

    return candidate


def atomic_write(path: PathLike, data: bytes) -> Path:
    """
    Write bytes to path through a temp file in the same directory and a rename.

    Readers never observe a partially written file.
    """
    final_path = Path(path)
    directory = ensure_directory(final_path.parent)

    fd, temp_name = tempfile.mkstemp(prefix=f".{final_path.name}.", suffix=".tmp", dir=directory)
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
        os.replace(temp_name, final_path)
    except OSError as exc:
        if os.path.exists(temp_name):
            os.unlink(temp_name)
        logger.error(f"File write error: {final_path}: {exc}", exc_info=True)
        raise OutputWriteError(f"Cannot write {final_path}: {exc}") from exc

    logger.debug(f"File written: {final_path}")
    return final_path
