import logging
from typing import Literal

from fastapi import APIRouter, File, Query, Response, UploadFile
from starlette.concurrency import run_in_threadpool

from sonoforge.adapters import image_io, wav_io
from sonoforge.api.dependencies import read_image_upload, read_wav_upload
from sonoforge.config import settings
from sonoforge.domain.exceptions import ValidationError
from sonoforge.domain.models import ImageFormat
from sonoforge.services import protocol_service
from sonoforge.services.audio_service import resample
from sonoforge.services.pipeline_service import PROTOCOL_ORDER
from sonoforge.services.rng_service import derive_seed

logger = logging.getLogger(__name__)

router = APIRouter()

SignalProtocol = Literal["sgn", "ssa", "ssia", "tsm"]
ImageProtocol = Literal["sspa", "susa"]


def _pick(copies: list, copy: int, protocol: str):
    if copy >= len(copies):
        raise ValidationError(f"Protocol {protocol} makes {len(copies)} copies, no copy {copy}")
    return copies[copy]


def augment_wav(data: bytes, protocol: str, seed: int, pattern_id: str, copy: int) -> bytes:
    clip = resample(wav_io.load_wav_bytes(data, pattern_id), settings.WORKING_RATE)
    rng = derive_seed(seed, pattern_id, 0, PROTOCOL_ORDER.index(protocol))
    copies = protocol_service.augment_clip(protocol, clip, rng)
    return wav_io.encode_wav(_pick(copies, copy, protocol))


def augment_png(
    data: bytes, protocol: str, seed: int, pattern_id: str, copy: int, fmt: str
) -> bytes:
    img = image_io.decode_image(data, pattern_id)
    rng = derive_seed(seed, pattern_id, 0, PROTOCOL_ORDER.index(protocol))
    copies = protocol_service.augment_image(protocol, img, rng)
    return image_io.encode_image(_pick(copies, copy, protocol), fmt)


@router.post("/signal")
async def augment_signal(
    file: UploadFile = File(...),
    protocol: SignalProtocol = Query(...),
    seed: int = Query(0, ge=0, lt=2**64),
    copy: int = Query(0, ge=0),
    pattern_id: str = Query("upload", min_length=1, max_length=200),
) -> Response:
    """One augmented copy of an uploaded WAV file, as 16-bit PCM WAV."""
    data = await read_wav_upload(file)
    content = await run_in_threadpool(augment_wav, data, protocol, seed, pattern_id, copy)
    logger.info(f"Augmented {pattern_id} with {protocol}, copy {copy}")
    return Response(content=content, media_type="audio/wav")


@router.post("/image")
async def augment_spectrogram(
    file: UploadFile = File(...),
    protocol: ImageProtocol = Query(...),
    seed: int = Query(0, ge=0, lt=2**64),
    copy: int = Query(0, ge=0),
    pattern_id: str = Query("upload", min_length=1, max_length=200),
    fmt: ImageFormat = Query("png", alias="format"),
) -> Response:
    data = await read_image_upload(file)
    content = await run_in_threadpool(augment_png, data, protocol, seed, pattern_id, copy, fmt)
    return Response(content=content, media_type=image_io.MEDIA_TYPES[fmt])
