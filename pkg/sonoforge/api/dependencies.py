import logging
from typing import Optional

from fastapi import UploadFile

from sonoforge.adapters.storage import sniff_audio_type, sniff_image_type, validate_upload_size
from sonoforge.config import settings
from sonoforge.domain.exceptions import AudioFormatError, InvalidImageError

logger = logging.getLogger(__name__)


async def read_upload(file: UploadFile, max_bytes: Optional[int] = None) -> bytes:
    data = await file.read()
    validate_upload_size(data, max_bytes or settings.MAX_UPLOAD_BYTES)
    return data


async def read_wav_upload(file: UploadFile) -> bytes:
    """Upload bytes, checked for size and a RIFF/WAVE signature before decoding."""
    data = await read_upload(file)
    if sniff_audio_type(data) is None:
        logger.warning(f"Rejected upload {file.filename!r}: not a RIFF/WAVE file")
        raise AudioFormatError(f"{file.filename or 'upload'}: not a RIFF/WAVE file")
    return data


async def read_image_upload(file: UploadFile) -> bytes:
    data = await read_upload(file)
    if sniff_image_type(data) is None:
        raise InvalidImageError(f"{file.filename or 'upload'}: not a PNG or binary PGM image")
    return data
