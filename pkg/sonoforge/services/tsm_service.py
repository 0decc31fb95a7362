"""Time-scale modification: change duration, keep pitch.

All five algorithms share one frame grid. With integer synthesis hop H_s and
stretch factor alpha, analysis frame m starts at round(m * H_s / alpha) and
synthesis frame m at m * H_s; the output is trimmed to exactly
round(alpha * len) samples. The first analysis frame lies wholly inside the clip.
"""

import logging
from typing import List, Optional, Tuple

import numpy as np
from scipy.signal import correlate, get_window, istft, medfilt2d, stft

from sonoforge.domain.entities import AudioClip, TimeFreqMatrix
from sonoforge.domain.exceptions import ClipTooShortError, ValidationError
from sonoforge.domain.models import TSM_ALGORITHMS, TsmParams, TsmPreset, WsolaParams

logger = logging.getLogger(__name__)

HPSS_MEDIAN_LEN = 17
HPSS_STFT_WINDOW = 1024
HPSS_STFT_HOP = 256
ENVELOPE_FLOOR = 1e-10
PEAK_FLOOR = 1e-3
DEFAULT_PRESET = TsmPreset()


class _FrameGrid:
    """Analysis/synthesis positions and the zero-padded input they index."""

    def __init__(self, samples: np.ndarray, p: TsmParams, tolerance: int = 0):
        window = p.window_len
        if samples.size < window:
            raise ClipTooShortError(
                f"Clip of {samples.size} samples is shorter than the TSM window ({window})"
            )

        self.window = window
        self.synthesis_hop = p.synthesis_hop
        self.tolerance = tolerance
        self.out_len = max(1, int(round(p.alpha * samples.size)))
        n_frames = int(np.ceil(self.out_len / p.synthesis_hop)) + 1

        positions = np.round(np.arange(n_frames) * p.analysis_hop).astype(np.int64)
        overrun = max(0, int(positions[-1]) - samples.size)
        back = overrun + 2 * window + 2 * tolerance + p.synthesis_hop
        self.padded = np.concatenate([np.zeros(tolerance), samples, np.zeros(back)])
        # frame m covers samples[positions[m] : positions[m] + window]
        self.starts = positions + tolerance
        self.analysis_hops = np.diff(positions)

    @property
    def n_frames(self) -> int:
        return int(self.starts.size)

    def frames(self, offsets: Optional[np.ndarray] = None) -> np.ndarray:
        starts = self.starts if offsets is None else self.starts + offsets
        return self.padded[starts[:, None] + np.arange(self.window)[None, :]]

    def overlap_add(self, frames: np.ndarray, envelope_window: np.ndarray) -> np.ndarray:
        hop, window = self.synthesis_hop, self.window
        length = (self.n_frames - 1) * hop + window
        out = np.zeros(length)
        envelope = np.zeros(length)
        for m in range(self.n_frames):
            out[m * hop : m * hop + window] += frames[m]
            envelope[m * hop : m * hop + window] += envelope_window

        out = out[: self.out_len]
        envelope = envelope[: self.out_len]
        safe = envelope > ENVELOPE_FLOOR
        return np.where(safe, out / np.where(safe, envelope, 1.0), 0.0)


def hann(window_len: int) -> np.ndarray:
    return get_window("hann", window_len)


def _wsola_offsets(grid: _FrameGrid) -> np.ndarray:
    tolerance, window, hop = grid.tolerance, grid.window, grid.synthesis_hop
    offsets = np.zeros(grid.n_frames, dtype=np.int64)
    for m in range(1, grid.n_frames):
        previous = grid.starts[m - 1] + offsets[m - 1]
        natural = grid.padded[previous + hop : previous + hop + window]
        start = grid.starts[m]
        region = grid.padded[start - tolerance : start + tolerance + window]
        similarity = correlate(region, natural, mode="valid")
        offsets[m] = int(np.argmax(similarity)) - tolerance
    return offsets


def _time_domain_ola(clip: AudioClip, p: TsmParams, tolerance: int) -> AudioClip:
    grid = _FrameGrid(clip.samples, p, tolerance)
    window = hann(p.window_len)
    offsets = _wsola_offsets(grid) if tolerance > 0 else None
    out = grid.overlap_add(grid.frames(offsets) * window, window)
    return clip.with_samples(out)


def ola(clip: AudioClip, p: TsmParams) -> AudioClip:
    return _time_domain_ola(clip, p, tolerance=0)


def wsola(clip: AudioClip, p: WsolaParams) -> AudioClip:
    """OLA whose analysis frames may move by up to +-tolerance samples.

    Each frame after the first is placed where it best correlates with the
    natural continuation of the frame before it.
    """
    return _time_domain_ola(clip, p.base, tolerance=p.tolerance)


def _wrap(phase: np.ndarray) -> np.ndarray:
    return (phase + np.pi) % (2.0 * np.pi) - np.pi


def _find_peaks(magnitude: np.ndarray) -> np.ndarray:
    """Bins louder than two neighbors on each side and within 60 dB of the frame maximum."""
    padded = np.concatenate([[-np.inf, -np.inf], magnitude, [-np.inf, -np.inf]])
    center = padded[2:-2]
    is_peak = (
        (center > padded[:-4])
        & (center > padded[1:-3])
        & (center > padded[3:-1])
        & (center > padded[4:])
        & (center > PEAK_FLOOR * magnitude.max(initial=0.0))
    )
    return np.flatnonzero(is_peak)


def _lock_to_peaks(
    magnitude: np.ndarray, phase: np.ndarray, propagated: np.ndarray
) -> np.ndarray:
    peaks = _find_peaks(magnitude)
    if peaks.size == 0:
        return propagated

    # region boundaries sit at the quietest bin between neighboring peaks
    boundaries = np.array(
        [a + int(np.argmin(magnitude[a : b + 1])) for a, b in zip(peaks[:-1], peaks[1:])],
        dtype=np.int64,
    )
    region = np.searchsorted(boundaries, np.arange(magnitude.size), side="left")
    rotation = propagated[peaks] - phase[peaks]
    return phase + rotation[region]


def _vocoder(clip: AudioClip, p: TsmParams, phase_locking: bool) -> AudioClip:
    grid = _FrameGrid(clip.samples, p)
    window = hann(p.window_len)
    spectra = np.fft.rfft(grid.frames() * window, axis=1)
    magnitude = np.abs(spectra)
    phase = np.angle(spectra)
    bin_freq = 2.0 * np.pi * np.arange(magnitude.shape[1]) / p.window_len

    synth_phase = np.empty_like(phase)
    synth_phase[0] = phase[0]
    for m in range(1, grid.n_frames):
        hop = int(grid.analysis_hops[m - 1])
        if hop > 0:
            deviation = _wrap(phase[m] - phase[m - 1] - bin_freq * hop)
            inst_freq = bin_freq + deviation / hop
        else:
            inst_freq = bin_freq
        propagated = synth_phase[m - 1] + p.synthesis_hop * inst_freq
        if phase_locking:
            propagated = _lock_to_peaks(magnitude[m], phase[m], propagated)
        synth_phase[m] = np.mod(propagated, 2.0 * np.pi)

    synth = magnitude * np.exp(1j * synth_phase)
    frames = np.fft.irfft(synth, n=p.window_len, axis=1) * window
    return clip.with_samples(grid.overlap_add(frames, window**2))


def phase_vocoder(clip: AudioClip, p: TsmParams) -> AudioClip:
    return _vocoder(clip, p, phase_locking=False)


def pv_identity_phase_locking(clip: AudioClip, p: TsmParams) -> AudioClip:
    """Phase vocoder whose bins follow the phase rotation of their spectral peak."""
    return _vocoder(clip, p, phase_locking=True)


def stft_complex(
    samples: np.ndarray, window_len: int = HPSS_STFT_WINDOW, hop: int = HPSS_STFT_HOP
) -> np.ndarray:
    _, _, spectrum = stft(
        samples, window="hann", nperseg=window_len, noverlap=window_len - hop, boundary="zeros"
    )
    return spectrum


def istft_complex(
    spectrum: np.ndarray,
    length: int,
    window_len: int = HPSS_STFT_WINDOW,
    hop: int = HPSS_STFT_HOP,
) -> np.ndarray:
    _, samples = istft(spectrum, window="hann", nperseg=window_len, noverlap=window_len - hop)
    samples = samples[:length]
    if samples.size < length:
        samples = np.pad(samples, (0, length - samples.size))
    return samples


def hpss_separate(
    mag: TimeFreqMatrix, median_len: int = HPSS_MEDIAN_LEN
) -> Tuple[np.ndarray, np.ndarray]:
    """Binary (harmonic, percussive) masks; harmonic wins ties, so they partition every bin."""
    if median_len < 1 or median_len % 2 == 0:
        raise ValidationError(f"Median length must be odd and positive, got {median_len}")

    values = np.array(mag.values, dtype=np.float64)
    harmonic = medfilt2d(values, [1, median_len])
    percussive = medfilt2d(values, [median_len, 1])
    harmonic_mask = harmonic >= percussive
    return harmonic_mask, ~harmonic_mask


def hpss_tsm(
    clip: AudioClip, p: TsmParams, percussive: Optional[TsmParams] = None
) -> AudioClip:
    """PV with phase locking on the harmonic part, short-window OLA on the percussive part."""
    if len(clip) < p.window_len:
        raise ClipTooShortError(
            f"Clip of {len(clip)} samples is shorter than the TSM window ({p.window_len})"
        )
    percussive = percussive or TsmParams(alpha=p.alpha, synthesis_hop=128, window_len=256)

    spectrum = stft_complex(clip.samples)
    freqs = np.arange(spectrum.shape[0]) * clip.sample_rate / HPSS_STFT_WINDOW
    magnitude = TimeFreqMatrix(values=np.abs(spectrum), frequencies=freqs, frame_s=0.0)
    harmonic_mask, percussive_mask = hpss_separate(magnitude)

    harmonic_part = clip.with_samples(istft_complex(spectrum * harmonic_mask, len(clip)))
    percussive_part = clip.with_samples(istft_complex(spectrum * percussive_mask, len(clip)))

    stretched_h = pv_identity_phase_locking(harmonic_part, p).samples
    stretched_p = ola(percussive_part, percussive).samples
    n = min(stretched_h.size, stretched_p.size)
    return clip.with_samples(stretched_h[:n] + stretched_p[:n])


def stretch(
    clip: AudioClip, algorithm: str, alpha: float, preset: TsmPreset = DEFAULT_PRESET
) -> AudioClip:
    ola_params = TsmParams(
        alpha=alpha, synthesis_hop=preset.ola_synthesis_hop, window_len=preset.ola_window_len
    )
    pv_params = TsmParams(
        alpha=alpha, synthesis_hop=preset.pv_synthesis_hop, window_len=preset.window_len
    )

    if algorithm == "ola":
        return ola(clip, ola_params)
    if algorithm == "wsola":
        return wsola(clip, WsolaParams(base=ola_params, tolerance=preset.wsola_tolerance))
    if algorithm == "pv":
        return phase_vocoder(clip, pv_params)
    if algorithm == "pv_ipl":
        return pv_identity_phase_locking(clip, pv_params)
    if algorithm == "hpss":
        percussive = TsmParams(
            alpha=alpha,
            synthesis_hop=preset.percussive_synthesis_hop,
            window_len=preset.percussive_window_len,
        )
        return hpss_tsm(clip, pv_params, percussive)
    raise ValidationError(f"Unknown TSM algorithm: {algorithm}")


def augment_tsm(clip: AudioClip, preset: TsmPreset = DEFAULT_PRESET) -> List[AudioClip]:
    """Every algorithm at every factor, algorithms outermost; no randomness."""
    alphas = preset.resolved_alphas()
    copies = [
        stretch(clip, algorithm, alpha, preset) for algorithm in TSM_ALGORITHMS for alpha in alphas
    ]
    logger.debug(f"TSM produced {len(copies)} copies for factors {alphas}")
    return copies
