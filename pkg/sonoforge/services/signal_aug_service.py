"""Waveform-domain augmentations and the SGN, SSA and SSiA generators."""

import logging
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from sonoforge.domain.entities import AudioClip, RngStream
from sonoforge.domain.exceptions import SilentClipError, ValidationError
from sonoforge.domain.models import (
    DrcCurve,
    SgnPreset,
    SsaPreset,
    SsiaPreset,
    TsmParams,
    TsmPreset,
    WowParams,
)
from sonoforge.services import tsm_service
from sonoforge.services.audio_service import sinc_interpolate
from sonoforge.services.rng_service import fork, rng_integer, rng_uniform, spawn_generator

logger = logging.getLogger(__name__)

LEVEL_EPSILON = 1e-10
SGN_COPIES = 10
SSA_COPIES = 10
SSIA_COPIES = 29


def wow_warp(t, p: WowParams):
    """F(t) = t + a_m sin(2 pi f_m t) / (2 pi f_m), t in seconds."""
    times = np.asarray(t, dtype=np.float64)
    omega = 2.0 * np.pi * p.f_m
    return times + p.a_m * np.sin(omega * times) / omega


def wow_resample(clip: AudioClip, p: WowParams) -> AudioClip:
    if p.a_m == 0:
        return clip

    n = len(clip)
    warped = wow_warp(np.arange(n) / clip.sample_rate, p) * clip.sample_rate
    positions = np.clip(warped, 0.0, n - 1)
    return clip.with_samples(sinc_interpolate(clip.samples, positions))


def add_noise_snr(clip: AudioClip, snr_db: float, rng: RngStream) -> AudioClip:
    """Add white Gaussian noise scaled so the signal-to-noise ratio is exactly snr_db."""
    signal_power = float(np.mean(clip.samples**2))
    if signal_power == 0.0:
        raise SilentClipError("Cannot set an SNR on a silent clip")

    noise = spawn_generator(rng).standard_normal(len(clip))
    target_power = signal_power / 10.0 ** (snr_db / 10.0)
    noise *= np.sqrt(target_power / np.mean(noise**2))
    return clip.with_samples(clip.samples + noise)


def _noise_unless_silent(clip: AudioClip, snr_db: float, rng: RngStream) -> AudioClip:
    if float(np.mean(clip.samples**2)) == 0.0:
        logger.warning("Skipping additive noise on a silent clip")
        return clip
    return add_noise_snr(clip, snr_db, rng)


def clip_fraction(clip: AudioClip, fraction: float) -> AudioClip:
    """Scale so `fraction` of the samples leave [-1, 1], then hard-clip them to +-1."""
    if not 0.0 < fraction < 1.0:
        raise ValidationError(f"Clip fraction must be in (0, 1), got {fraction}")

    magnitude = np.abs(clip.samples)
    if not magnitude.any():
        logger.warning("clip_fraction got an all-zero clip, returning it unchanged")
        return clip

    level = float(np.quantile(magnitude, 1.0 - fraction))
    if level == 0.0:
        level = float(magnitude.max())
    scaled = clip.samples / level
    return clip.with_samples(np.where(np.abs(scaled) > 1.0, np.sign(scaled), scaled))


def change_speed(clip: AudioClip, factor: float) -> AudioClip:
    """Play back `factor` times faster at the same rate; pitch moves with speed."""
    if factor <= 0:
        raise ValidationError(f"Speed factor must be positive, got {factor}")
    if factor == 1.0:
        return clip

    n_out = max(1, int(round(len(clip) / factor)))
    positions = np.arange(n_out) * factor
    samples = sinc_interpolate(clip.samples, positions, cutoff=min(1.0, 1.0 / factor))
    return clip.with_samples(samples)


def harmonic_distortion(clip: AudioClip, iterations: int = 5) -> AudioClip:
    if iterations < 1:
        raise ValidationError(f"Distortion needs at least one iteration, got {iterations}")

    samples = clip.samples
    for _ in range(iterations):
        samples = np.sin(2.0 * np.pi * samples)
    return clip.with_samples(samples)


def apply_gain_db(clip: AudioClip, g: float) -> AudioClip:
    return clip.with_samples(clip.samples * 10.0 ** (g / 20.0))


def circular_time_shift(clip: AudioClip, t_star: int) -> AudioClip:
    """out[t] = in[(t_star + t) mod T]."""
    n = len(clip)
    if not 0 <= t_star <= n:
        raise ValidationError(f"Shift {t_star} outside [0, {n}]")
    return clip.with_samples(np.roll(clip.samples, -t_star))


def _curve_levels(levels: np.ndarray, curve: DrcCurve) -> np.ndarray:
    inputs = np.array([p[0] for p in curve.breakpoints])
    outputs = np.array([p[1] for p in curve.breakpoints])
    mapped = np.interp(levels, inputs, outputs)

    low_slope = (outputs[1] - outputs[0]) / (inputs[1] - inputs[0])
    high_slope = (outputs[-1] - outputs[-2]) / (inputs[-1] - inputs[-2])
    below = outputs[0] + (levels - inputs[0]) * low_slope
    above = outputs[-1] + (levels - inputs[-1]) * high_slope
    mapped = np.where(levels < inputs[0], below, mapped)
    mapped = np.where(levels > inputs[-1], above, mapped)
    return mapped


def dynamic_range_compress(clip: AudioClip, curve: DrcCurve = DrcCurve()) -> AudioClip:
    """Static per-sample gain from an input-level to output-level curve in dBFS."""
    levels = 20.0 * np.log10(np.abs(clip.samples) + LEVEL_EPSILON)
    gain_db = _curve_levels(levels, curve) - levels
    return clip.with_samples(clip.samples * 10.0 ** (gain_db / 20.0))


def pitch_shift(clip: AudioClip, semitones: float, preset: TsmPreset = TsmPreset()) -> AudioClip:
    """Phase-vocoder stretch by 2**(st/12), then speed change by the same ratio."""
    if semitones == 0:
        return clip

    ratio = 2.0 ** (semitones / 12.0)
    params = TsmParams(
        alpha=ratio, synthesis_hop=preset.pv_synthesis_hop, window_len=preset.window_len
    )
    shifted = change_speed(tsm_service.phase_vocoder(clip, params), ratio).samples

    n = len(clip)
    if shifted.size < n:
        shifted = np.pad(shifted, (0, n - shifted.size))
    return clip.with_samples(shifted[:n])


def _shift_samples(clip: AudioClip, seconds: float) -> AudioClip:
    return circular_time_shift(clip, int(round(clip.sample_rate * seconds)) % len(clip))


def _random_shift(clip: AudioClip, stream: RngStream) -> AudioClip:
    t_star, _ = rng_integer(stream, 0, len(clip))
    return circular_time_shift(clip, t_star)


# --- SGN ------------------------------------------------------------------------

SGN_TRANSFORMS = ("speed", "pitch", "gain", "noise", "shift")


@dataclass(frozen=True)
class SgnStep:
    transform: str
    value: float
    stream: RngStream


def sgn_plan(rng: RngStream, preset: SgnPreset = SgnPreset(), copy: int = 0) -> List[SgnStep]:
    """Transforms that fire for one copy, in application order, with their drawn values."""
    ranges = {
        "speed": preset.speed_range,
        "pitch": preset.pitch_range,
        "gain": preset.gain_range,
        "noise": preset.snr_range,
        "shift": preset.shift_range_s,
    }
    copy_stream = fork(rng, copy)
    steps = []
    for op, name in enumerate(SGN_TRANSFORMS):
        stream = fork(copy_stream, op)
        coin, stream = rng_uniform(stream, 0.0, 1.0)
        if coin >= preset.probability:
            continue
        value, stream = rng_uniform(stream, *ranges[name])
        steps.append(SgnStep(transform=name, value=value, stream=stream))
    return steps


def _apply_sgn_step(clip: AudioClip, step: SgnStep, tsm: TsmPreset) -> AudioClip:
    if step.transform == "speed":
        return change_speed(clip, step.value)
    if step.transform == "pitch":
        return pitch_shift(clip, step.value, tsm)
    if step.transform == "gain":
        return apply_gain_db(clip, step.value)
    if step.transform == "noise":
        return _noise_unless_silent(clip, step.value, step.stream)
    return _shift_samples(clip, step.value)


def augment_sgn(
    clip: AudioClip,
    rng: RngStream,
    preset: SgnPreset = SgnPreset(),
    copies: int = SGN_COPIES,
    tsm: Optional[TsmPreset] = None,
) -> List[AudioClip]:
    tsm = tsm or TsmPreset()
    outputs = []
    for copy in range(copies):
        augmented = clip
        for step in sgn_plan(rng, preset, copy):
            augmented = _apply_sgn_step(augmented, step, tsm)
        outputs.append(augmented)
    return outputs


# --- SSA ------------------------------------------------------------------------


def augment_ssa(
    clip: AudioClip,
    rng: RngStream,
    preset: SsaPreset = SsaPreset(),
    tsm: Optional[TsmPreset] = None,
) -> List[AudioClip]:
    """Ten fixed single-transform copies; only noise and the circular shift draw from rng."""
    tsm = tsm or TsmPreset()
    return [
        wow_resample(clip, preset.wow),
        _noise_unless_silent(clip, preset.snr_db, fork(rng, 1)),
        clip_fraction(clip, preset.clip_fraction),
        change_speed(clip, preset.speed),
        harmonic_distortion(clip, preset.distortion_iterations),
        apply_gain_db(clip, preset.gain_db),
        _random_shift(clip, fork(rng, 6)),
        dynamic_range_compress(clip, preset.drc),
        pitch_shift(clip, preset.pitch_up, tsm),
        pitch_shift(clip, preset.pitch_down, tsm),
    ]


# --- SSiA -----------------------------------------------------------------------


def augment_ssia(
    clip: AudioClip,
    rng: RngStream,
    preset: SsiaPreset = SsiaPreset(),
    copies: int = SSIA_COPIES,
    tsm: Optional[TsmPreset] = None,
) -> List[AudioClip]:
    """Each copy chains wow, speed, gain, circular shift and pitch with small random values."""
    tsm = tsm or TsmPreset()
    outputs = []
    for copy in range(copies):
        stream = fork(rng, copy)
        percent, stream = rng_uniform(stream, *preset.speed_percent_range)
        gain, stream = rng_uniform(stream, *preset.gain_range)
        semitones, stream = rng_uniform(stream, *preset.pitch_range)

        augmented = wow_resample(clip, preset.wow)
        augmented = change_speed(augmented, 1.0 + percent / 100.0)
        augmented = apply_gain_db(augmented, gain)
        augmented = _random_shift(augmented, stream)
        augmented = pitch_shift(augmented, semitones, tsm)
        outputs.append(augmented)
    return outputs
