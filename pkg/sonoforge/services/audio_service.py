import logging

import numpy as np

from sonoforge.domain.entities import AudioClip
from sonoforge.domain.exceptions import ValidationError

logger = logging.getLogger(__name__)

DEFAULT_TAPS = 64
KAISER_BETA = 8.6
CHUNK_POSITIONS = 16384


def _kaiser(distance: np.ndarray, half_width: float) -> np.ndarray:
    ratio = np.clip(distance / half_width, -1.0, 1.0)
    window = np.i0(KAISER_BETA * np.sqrt(1.0 - ratio**2)) / np.i0(KAISER_BETA)
    return np.where(np.abs(distance) <= half_width, window, 0.0)


def sinc_interpolate(
    samples: np.ndarray, positions: np.ndarray, cutoff: float = 1.0, taps: int = DEFAULT_TAPS
) -> np.ndarray:
    """
    Evaluate a band-limited signal at fractional sample positions.

    Kaiser-windowed sinc with `taps` coefficients per output sample; `cutoff`
    is the pass band relative to the input Nyquist (1.0 = no extra low-pass).
    Samples outside the signal count as zeros.
    """
    if not 0.0 < cutoff <= 1.0:
        raise ValidationError(f"Cutoff must be in (0, 1], got {cutoff}")
    if taps < 2 or taps % 2:
        raise ValidationError(f"Tap count must be an even number >= 2, got {taps}")

    signal = np.asarray(samples, dtype=np.float64)
    points = np.asarray(positions, dtype=np.float64)
    n = signal.size
    offsets = np.arange(-taps // 2 + 1, taps // 2 + 1)
    half_width = taps / 2.0

    out = np.empty(points.size, dtype=np.float64)
    for start in range(0, points.size, CHUNK_POSITIONS):
        chunk = points[start : start + CHUNK_POSITIONS]
        base = np.floor(chunk).astype(np.int64)
        index = base[:, None] + offsets[None, :]
        distance = chunk[:, None] - index
        kernel = cutoff * np.sinc(cutoff * distance) * _kaiser(distance, half_width)

        valid = (index >= 0) & (index < n)
        values = np.where(valid, signal[np.clip(index, 0, n - 1)], 0.0)
        out[start : start + chunk.size] = np.sum(kernel * values, axis=1)

    return out


def resample(clip: AudioClip, new_rate: int, taps: int = DEFAULT_TAPS) -> AudioClip:
    if new_rate <= 0:
        raise ValidationError(f"Target sample rate must be positive, got {new_rate}")
    if new_rate == clip.sample_rate:
        return clip

    ratio = new_rate / clip.sample_rate
    n_out = max(1, int(round(len(clip) * ratio)))
    positions = np.arange(n_out) / ratio
    samples = sinc_interpolate(clip.samples, positions, cutoff=min(1.0, ratio), taps=taps)

    logger.debug(f"Resampled {clip.sample_rate} Hz -> {new_rate} Hz ({len(clip)} -> {n_out})")
    return AudioClip(samples=samples, sample_rate=new_rate)


def rms(clip: AudioClip) -> float:
    return float(np.sqrt(np.mean(clip.samples**2)))
