from typing import List

import numpy as np
import pytest
import pytest_asyncio
from httpx import ASGITransport, AsyncClient

from sonoforge.adapters.wav_io import encode_wav
from sonoforge.domain.entities import AudioClip, GrayImage, RngStream
from sonoforge.main import app
from tests.synth import gradient_image, make_sine


@pytest.fixture
def sine_clip() -> AudioClip:
    return make_sine()


@pytest.fixture
def wav_bytes(sine_clip) -> bytes:
    return encode_wav(sine_clip)


@pytest.fixture
def stream() -> RngStream:
    return RngStream(seed=1234)


@pytest.fixture
def image() -> GrayImage:
    return gradient_image()


@pytest.fixture
def random_images() -> List[GrayImage]:
    rng = np.random.default_rng(7)
    return [GrayImage(pixels=rng.integers(0, 256, (64, 80), dtype=np.uint8)) for _ in range(3)]


@pytest_asyncio.fixture
async def client():
    async with AsyncClient(transport=ASGITransport(app=app), base_url="http://test") as ac:
        yield ac
