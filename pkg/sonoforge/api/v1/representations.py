import logging
from typing import Optional

from fastapi import APIRouter, File, Query, Response, UploadFile
from starlette.concurrency import run_in_threadpool

from sonoforge.adapters import image_io, wav_io
from sonoforge.api.dependencies import read_wav_upload
from sonoforge.config import settings
from sonoforge.domain.models import ImageFormat, RepresentationConfig, RepresentationName
from sonoforge.services.audio_service import resample
from sonoforge.services.repr_service import clip_to_image

logger = logging.getLogger(__name__)

router = APIRouter()


def render(data: bytes, label: str, config: RepresentationConfig, fmt: str, rate: int) -> bytes:
    clip = resample(wav_io.load_wav_bytes(data, label), rate)
    return image_io.encode_image(clip_to_image(clip, config), fmt)


@router.post("")
async def create_representation(
    file: UploadFile = File(...),
    repr_name: RepresentationName = Query("dgt", alias="repr"),
    fmt: ImageFormat = Query("png", alias="format"),
    db: bool = Query(True),
    rate: Optional[int] = Query(None, gt=0, description="Defaults to WORKING_RATE"),
) -> Response:
    """Grayscale time-frequency image of an uploaded WAV file."""
    data = await read_wav_upload(file)
    config = RepresentationConfig(name=repr_name, db=db)
    content = await run_in_threadpool(
        render, data, file.filename or "upload", config, fmt, rate or settings.WORKING_RATE
    )
    logger.info(f"Rendered {repr_name} image ({fmt}, {len(content)} bytes)")
    return Response(content=content, media_type=image_io.MEDIA_TYPES[fmt])
