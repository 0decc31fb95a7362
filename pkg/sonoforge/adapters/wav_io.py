"""WAV reading and writing through soundfile (libsndfile).

Reads PCM 8/16/24/32-bit and 32-bit float RIFF/WAVE files, mixes down to
mono by channel mean and scales integer codes by 2**(bits - 1). Writes
16-bit PCM mono only.
"""

import io
import logging
from pathlib import Path
from typing import BinaryIO, Union

import numpy as np
import soundfile as sf

from sonoforge.adapters.storage import atomic_write
from sonoforge.domain.entities import AudioClip
from sonoforge.domain.exceptions import (
    AudioFileNotFoundError,
    EmptyClipError,
    MalformedHeaderError,
    UnsupportedCodecError,
)

logger = logging.getLogger(__name__)

SUPPORTED_CONTAINERS = {"WAV", "WAVEX"}
PCM_SUBTYPES = {"PCM_U8", "PCM_16", "PCM_24", "PCM_32"}
FLOAT_SUBTYPES = {"FLOAT"}

INT16_SCALE = 32768.0
MAX_CODE_VALUE = 1.0 - 2.0**-15


def _decode(source: Union[str, BinaryIO], label: str) -> AudioClip:
    try:
        with sf.SoundFile(source) as f:
            container, subtype = f.format, f.subtype
            if container not in SUPPORTED_CONTAINERS:
                raise UnsupportedCodecError(f"{label}: unsupported container {container}")
            if subtype not in PCM_SUBTYPES | FLOAT_SUBTYPES:
                raise UnsupportedCodecError(f"{label}: unsupported codec {subtype}")
            if f.frames == 0:
                raise EmptyClipError(f"{label}: empty clip")

            if subtype in PCM_SUBTYPES:
                # libsndfile left-aligns every PCM width into int32
                data = f.read(dtype="int32", always_2d=True).astype(np.float64) / 2.0**31
            else:
                data = f.read(dtype="float64", always_2d=True)
            sample_rate = f.samplerate
    except RuntimeError as exc:
        raise MalformedHeaderError(f"{label}: malformed RIFF/WAVE header ({exc})") from exc

    if data.shape[0] == 0:
        raise EmptyClipError(f"{label}: empty clip")

    logger.debug(f"Decoded {label}: {data.shape[0]} frames, {data.shape[1]} channel(s)")
    return AudioClip(samples=data.mean(axis=1), sample_rate=sample_rate)


def load_wav(path: Union[str, Path]) -> AudioClip:
    wav_path = Path(path)
    if not wav_path.is_file():
        raise AudioFileNotFoundError(f"Audio file not found: {wav_path}")

    return _decode(str(wav_path), str(wav_path))


def load_wav_bytes(data: bytes, label: str = "upload") -> AudioClip:
    return _decode(io.BytesIO(data), label)


def encode_wav(clip: AudioClip) -> bytes:
    """Encode as 16-bit PCM mono; samples are clamped to [-1, 1 - 2**-15] first."""
    codes = np.round(np.clip(clip.samples, -1.0, MAX_CODE_VALUE) * INT16_SCALE).astype(np.int16)

    buffer = io.BytesIO()
    sf.write(buffer, codes, clip.sample_rate, format="WAV", subtype="PCM_16")
    return buffer.getvalue()


def save_wav(clip: AudioClip, path: Union[str, Path]) -> Path:
    return atomic_write(path, encode_wav(clip))
