"""Audio to time-frequency matrix mappings and 8-bit quantization.

Four representations are supported: Gaussian-window STFT magnitude (DGT),
Mel filterbank power, gammatone RMS and cochleagram energy. Matrices have
frequency on rows (low to high) and time on columns.
"""

import logging
from functools import lru_cache

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy import fft as sp_fft
from scipy.signal import fftconvolve
from scipy.signal.windows import gaussian

from sonoforge.adapters import image_io
from sonoforge.domain.entities import AudioClip, GammatoneBank, GrayImage, MelBank, TimeFreqMatrix
from sonoforge.domain.exceptions import ClipTooShortError, ShapeMismatchError, ValidationError
from sonoforge.domain.models import GammatoneParams, MelParams, RepresentationConfig, StftParams

logger = logging.getLogger(__name__)

DB_EPSILON = 1e-10
GAMMATONE_BANDWIDTH_FACTOR = 1.019
GAMMATONE_TAIL_CYCLES = 15
GRAY_SNAP_DECIMALS = 9
DEFAULT_CONFIG = RepresentationConfig()


# --- STFT / DGT -------------------------------------------------------------


def _frames(samples: np.ndarray, frame_len: int, hop: int, what: str) -> np.ndarray:
    if samples.size < frame_len:
        raise ClipTooShortError(
            f"Clip of {samples.size} samples is shorter than one {what} ({frame_len})"
        )
    return sliding_window_view(samples, frame_len)[::hop]


def gaussian_window(p: StftParams) -> np.ndarray:
    return gaussian(p.window_len, std=p.gaussian_std, sym=True)


def stft_magnitude(clip: AudioClip, p: StftParams) -> np.ndarray:
    frames = _frames(clip.samples, p.window_len, p.hop, "window")
    spectrum = sp_fft.rfft(frames * gaussian_window(p), n=p.fft_len, axis=1)
    return np.abs(spectrum).T


def dgt_spectrogram(clip: AudioClip, p: StftParams = StftParams()) -> TimeFreqMatrix:
    magnitude = stft_magnitude(clip, p)
    frequencies = np.arange(magnitude.shape[0]) * clip.sample_rate / p.fft_len
    return TimeFreqMatrix(
        values=magnitude, frequencies=frequencies, frame_s=p.hop / clip.sample_rate
    )


# --- Mel --------------------------------------------------------------------


def hz_to_mel(f):
    values = np.asarray(f, dtype=np.float64)
    if np.any(values < 0):
        raise ValidationError("Frequency must be >= 0 Hz")
    mel = 2595.0 * np.log10(1.0 + values / 700.0)
    return float(mel) if mel.ndim == 0 else mel


def mel_to_hz(m):
    values = np.asarray(m, dtype=np.float64)
    hz = 700.0 * (10.0 ** (values / 2595.0) - 1.0)
    return float(hz) if hz.ndim == 0 else hz


@lru_cache(maxsize=32)
def build_mel_bank(
    sample_rate: int, fft_len: int, n_filters: int = 64, f_lo: float = 0.0, f_hi: float = None
) -> MelBank:
    """
    Triangular filters centered on a Mel-uniform grid between f_lo and f_hi.

    Each filter is 1 at its own center bin and 0 at its neighbors' centers.
    The first and last filters stay at 1 out to the band edges, so the
    weights sum to 1 on every bin inside [f_lo, f_hi].
    """
    nyquist = sample_rate / 2.0
    f_hi = nyquist if f_hi is None else f_hi
    if not 0.0 <= f_lo < f_hi <= nyquist:
        raise ValidationError(f"Mel band must satisfy 0 <= f_lo < f_hi <= {nyquist}")

    n_bins = fft_len // 2 + 1
    to_bin = fft_len / sample_rate
    lo_bin = int(round(f_lo * to_bin))
    hi_bin = min(n_bins - 1, int(round(f_hi * to_bin)))

    centers_hz = mel_to_hz(np.linspace(hz_to_mel(f_lo), hz_to_mel(f_hi), n_filters))
    centers = np.round(np.atleast_1d(centers_hz) * to_bin).astype(np.int64)
    centers = np.clip(centers, lo_bin, hi_bin)
    for i in range(1, n_filters):
        centers[i] = max(centers[i], centers[i - 1] + 1)
    if centers[-1] > hi_bin:
        raise ValidationError(
            f"{n_filters} Mel filters do not fit into {hi_bin - lo_bin + 1} FFT bins"
        )

    bins = np.arange(n_bins)
    weights = np.zeros((n_filters, n_bins))
    for i, center in enumerate(centers):
        if i == 0:
            rising = ((bins >= lo_bin) & (bins <= center)).astype(np.float64)
        else:
            left = centers[i - 1]
            ramp = (bins - left) / (center - left)
            rising = np.where((bins >= left) & (bins <= center), ramp, 0.0)
        if i == n_filters - 1:
            falling = ((bins >= center) & (bins <= hi_bin)).astype(np.float64)
        else:
            right = centers[i + 1]
            ramp = (right - bins) / (right - center)
            falling = np.where((bins >= center) & (bins <= right), ramp, 0.0)
        weights[i] = np.maximum(rising, falling)

    center_bins = centers.astype(np.float64)
    center_bins.setflags(write=False)
    weights.setflags(write=False)
    return MelBank(
        sample_rate=sample_rate,
        fft_len=fft_len,
        f_lo=f_lo,
        f_hi=f_hi,
        center_bins=center_bins,
        weights=weights,
    )


def mel_spectrogram(clip: AudioClip, p: StftParams, bank: MelBank) -> TimeFreqMatrix:
    n_bins = p.fft_len // 2 + 1
    if bank.fft_len != p.fft_len or bank.weights.shape[1] != n_bins:
        raise ShapeMismatchError(
            f"Mel bank built for fft_len={bank.fft_len} cannot filter fft_len={p.fft_len}"
        )
    if bank.sample_rate != clip.sample_rate:
        raise ShapeMismatchError(
            f"Mel bank built for {bank.sample_rate} Hz cannot filter a {clip.sample_rate} Hz clip"
        )

    power = stft_magnitude(clip, p) ** 2
    return TimeFreqMatrix(
        values=bank.weights @ power,
        frequencies=bank.center_hz,
        frame_s=p.hop / clip.sample_rate,
    )


# --- Gammatone ----------------------------------------------------------------


def erb(f):
    return 24.7 * (4.37 * np.asarray(f, dtype=np.float64) / 1000.0 + 1.0)


def erb_space(f_lo: float, f_hi: float, n: int) -> np.ndarray:
    """n frequencies equally spaced on the ERB-rate scale, f_lo and f_hi included."""
    if n < 1 or not 0 < f_lo <= f_hi:
        raise ValidationError("erb_space needs n >= 1 and 0 < f_lo <= f_hi")
    rate_lo, rate_hi = (21.4 * np.log10(1.0 + 4.37 * f / 1000.0) for f in (f_lo, f_hi))
    rates = np.linspace(rate_lo, rate_hi, n)
    return (10.0 ** (rates / 21.4) - 1.0) * 1000.0 / 4.37


def gammatone_response(bank: GammatoneBank, channel: int, t):
    """h(t) = a t^(n-1) exp(-2 pi B t) cos(2 pi f t + phase) for t >= 0, else 0."""
    if not 0 <= channel < bank.n_channels:
        raise ValidationError(f"Channel {channel} out of range [0, {bank.n_channels})")

    times = np.asarray(t, dtype=np.float64)
    a = bank.gains[channel]
    b = bank.bandwidths[channel]
    f = bank.centers[channel]
    positive = np.maximum(times, 0.0)
    h = (
        a
        * positive ** (bank.order - 1)
        * np.exp(-2.0 * np.pi * b * positive)
        * np.cos(2.0 * np.pi * f * positive + bank.phase)
    )
    h = np.where(times < 0, 0.0, h)
    return float(h) if h.ndim == 0 else h


def gammatone_taps(bank: GammatoneBank, channel: int) -> np.ndarray:
    duration = (bank.order + GAMMATONE_TAIL_CYCLES) / (2.0 * np.pi * bank.bandwidths[channel])
    n_taps = max(1, int(np.ceil(duration * bank.sample_rate)))
    return gammatone_response(bank, channel, np.arange(n_taps) / bank.sample_rate)


@lru_cache(maxsize=16)
def build_gammatone_bank(
    sample_rate: int,
    n_channels: int = 64,
    f_lo: float = 50.0,
    f_hi_ratio: float = 0.45,
    order: int = 4,
    phase: float = 0.0,
) -> GammatoneBank:
    """ERB-spaced bank, gains scaled for unit peak magnitude response per channel."""
    centers = erb_space(f_lo, f_hi_ratio * sample_rate, n_channels)
    bandwidths = GAMMATONE_BANDWIDTH_FACTOR * erb(centers)
    unit = GammatoneBank(
        sample_rate=sample_rate,
        centers=centers,
        bandwidths=bandwidths,
        gains=np.ones(n_channels),
        order=order,
        phase=phase,
    )

    gains = np.empty(n_channels)
    for channel in range(n_channels):
        taps = gammatone_taps(unit, channel)
        n_fft = sp_fft.next_fast_len(max(4 * taps.size, 8192))
        gains[channel] = 1.0 / np.max(np.abs(sp_fft.rfft(taps, n=n_fft)))

    logger.debug(f"Built gammatone bank: {n_channels} channels up to {centers[-1]:.1f} Hz")
    return GammatoneBank(
        sample_rate=sample_rate,
        centers=centers,
        bandwidths=bandwidths,
        gains=gains,
        order=order,
        phase=phase,
    )


def gammatone_filter(clip: AudioClip, bank: GammatoneBank) -> np.ndarray:
    """Causal filtering of the clip by every channel; shape (channels, samples)."""
    if bank.sample_rate != clip.sample_rate:
        raise ShapeMismatchError(
            f"Gammatone bank built for {bank.sample_rate} Hz "
            f"cannot filter a {clip.sample_rate} Hz clip"
        )
    n = len(clip)
    return np.stack(
        [fftconvolve(clip.samples, gammatone_taps(bank, c))[:n] for c in range(bank.n_channels)]
    )


def gammatone_spectrogram(
    clip: AudioClip, bank: GammatoneBank, frame_len: int = 1024, hop: int = 256
) -> TimeFreqMatrix:
    if frame_len < 1 or hop < 1:
        raise ValidationError("frame_len and hop must be >= 1")
    _frames(clip.samples, frame_len, hop, "frame")

    filtered = gammatone_filter(clip, bank)
    frames = sliding_window_view(filtered, frame_len, axis=1)[:, ::hop]
    values = np.sqrt(np.mean(frames**2, axis=2))
    return TimeFreqMatrix(values=values, frequencies=bank.centers, frame_s=hop / clip.sample_rate)


def cochleagram(
    clip: AudioClip, bank: GammatoneBank, win_s: float = 0.020, hop_s: float = 0.010
) -> TimeFreqMatrix:
    if not win_s >= hop_s > 0:
        raise ValidationError(f"Cochleagram needs win_s >= hop_s > 0, got {win_s}, {hop_s}")
    win = max(1, int(round(win_s * clip.sample_rate)))
    hop = max(1, int(round(hop_s * clip.sample_rate)))
    _frames(clip.samples, win, hop, "window")

    filtered = gammatone_filter(clip, bank)
    frames = sliding_window_view(filtered, win, axis=1)[:, ::hop]
    values = np.sum(frames**2, axis=2)
    return TimeFreqMatrix(values=values, frequencies=bank.centers, frame_s=hop / clip.sample_rate)


# --- Scaling and quantization -------------------------------------------------


def to_db(m: TimeFreqMatrix, floor_db: float = -80.0) -> TimeFreqMatrix:
    if floor_db >= 0:
        raise ValidationError(f"floor_db must be negative, got {floor_db}")
    db = 20.0 * np.log10(np.maximum(m.values, 0.0) + DB_EPSILON)
    return m.with_values(np.maximum(db, db.max() + floor_db))


def to_gray(m: TimeFreqMatrix) -> GrayImage:
    values = m.values
    lo, hi = values.min(), values.max()
    if hi == lo:
        return GrayImage(pixels=np.zeros(values.shape, dtype=np.uint8))
    # snap ratios that land a rounding error below an integer level
    scaled = np.floor(np.round(255.0 * (values - lo) / (hi - lo), GRAY_SNAP_DECIMALS))
    return GrayImage(pixels=np.clip(scaled, 0, 255).astype(np.uint8))


# --- Dispatch -------------------------------------------------------------------


def _mel_bank_for(sample_rate: int, stft: StftParams, p: MelParams) -> MelBank:
    return build_mel_bank(sample_rate, stft.fft_len, p.n_filters, p.f_lo, p.f_hi)


def _gammatone_bank_for(sample_rate: int, p: GammatoneParams) -> GammatoneBank:
    return build_gammatone_bank(sample_rate, p.n_channels, p.f_lo, p.f_hi_ratio, p.order, p.phase)


def clip_to_matrix(
    clip: AudioClip, config: RepresentationConfig = DEFAULT_CONFIG
) -> TimeFreqMatrix:
    name = config.name
    if name == "dgt":
        return dgt_spectrogram(clip, config.stft)
    if name == "mel":
        bank = _mel_bank_for(clip.sample_rate, config.stft, config.mel)
        return mel_spectrogram(clip, config.stft, bank)
    if name == "gamma":
        bank = _gammatone_bank_for(clip.sample_rate, config.gammatone)
        return gammatone_spectrogram(clip, bank, config.gammatone.frame_len, config.gammatone.hop)
    if name == "cochlea":
        bank = _gammatone_bank_for(clip.sample_rate, config.gammatone)
        return cochleagram(clip, bank, config.cochleagram.win_s, config.cochleagram.hop_s)
    raise ValidationError(f"Unknown representation: {name}")


def matrix_to_image(m: TimeFreqMatrix, config: RepresentationConfig = DEFAULT_CONFIG) -> GrayImage:
    if config.db:
        m = to_db(m, config.floor_db)
    image = to_gray(m)
    if config.resize is not None:
        rows, cols = config.resize
        image = image_io.resize_image(image, rows, cols)
    return image


def clip_to_image(clip: AudioClip, config: RepresentationConfig = DEFAULT_CONFIG) -> GrayImage:
    return matrix_to_image(clip_to_matrix(clip, config), config)

