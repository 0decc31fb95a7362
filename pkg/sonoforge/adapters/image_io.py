import io
import logging
from pathlib import Path
from typing import Union

import numpy as np
from PIL import Image, UnidentifiedImageError

from sonoforge.adapters.storage import atomic_write, sniff_image_type
from sonoforge.domain.entities import GrayImage
from sonoforge.domain.exceptions import InvalidImageError, NotFoundError, ValidationError

logger = logging.getLogger(__name__)

PIL_FORMATS = {"png": "PNG", "pgm": "PPM"}
MEDIA_TYPES = {"png": "image/png", "pgm": "image/x-portable-graymap"}


def encode_image(img: GrayImage, fmt: str = "png") -> bytes:
    """8-bit grayscale PNG, or binary PGM (P5) for bit-exact fixtures."""
    if fmt not in PIL_FORMATS:
        raise ValidationError(f"Unsupported image format: {fmt}")

    buffer = io.BytesIO()
    Image.fromarray(np.ascontiguousarray(img.pixels)).save(buffer, format=PIL_FORMATS[fmt])
    return buffer.getvalue()


def export_image(img: GrayImage, path: Union[str, Path], fmt: str = "png") -> Path:
    return atomic_write(path, encode_image(img, fmt))


def decode_image(data: bytes, label: str = "upload") -> GrayImage:
    if sniff_image_type(data) is None:
        raise InvalidImageError(f"{label}: not a PNG or binary PGM image")

    try:
        with Image.open(io.BytesIO(data)) as image:
            if image.mode != "L":
                logger.debug(f"Converting {label} from mode {image.mode} to grayscale")
                image = image.convert("L")
            pixels = np.asarray(image, dtype=np.uint8)
    except (UnidentifiedImageError, OSError, ValueError) as exc:
        raise InvalidImageError(f"{label}: cannot decode image ({exc})") from exc

    return GrayImage(pixels=pixels)


def import_image(path: Union[str, Path]) -> GrayImage:
    image_path = Path(path)
    if not image_path.is_file():
        raise NotFoundError(f"Image file not found: {image_path}")
    return decode_image(image_path.read_bytes(), str(image_path))


def resize_image(img: GrayImage, rows: int, cols: int) -> GrayImage:
    if rows < 1 or cols < 1:
        raise ValidationError(f"Resize target must be at least 1x1, got {rows}x{cols}")
    if img.shape == (rows, cols):
        return img

    source = Image.fromarray(np.ascontiguousarray(img.pixels))
    resized = source.resize((cols, rows), resample=Image.Resampling.BILINEAR)
    return GrayImage(pixels=np.asarray(resized, dtype=np.uint8))
