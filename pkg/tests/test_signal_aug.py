from unittest.mock import patch

import numpy as np
import pytest

from sonoforge.domain.entities import AudioClip, RngStream
from sonoforge.domain.exceptions import SilentClipError, ValidationError
from sonoforge.domain.models import SgnPreset, TsmPreset, WowParams
from sonoforge.services.signal_aug_service import (
    SGN_TRANSFORMS,
    add_noise_snr,
    apply_gain_db,
    augment_sgn,
    augment_ssa,
    augment_ssia,
    change_speed,
    circular_time_shift,
    clip_fraction,
    dynamic_range_compress,
    harmonic_distortion,
    pitch_shift,
    sgn_plan,
    wow_resample,
    wow_warp,
)
from tests.synth import make_sine, peak_frequency


@pytest.fixture
def short_clip() -> AudioClip:
    return make_sine(440.0, rate=16000, seconds=0.5)


class TestNoise:
    @pytest.mark.parametrize("snr_db", [0.0, 10.0, 20.0])
    def test_snr_is_exact(self, sine_clip, stream, snr_db):
        noisy = add_noise_snr(sine_clip, snr_db, stream)
        noise = noisy.samples - sine_clip.samples
        measured = 10 * np.log10(np.mean(sine_clip.samples**2) / np.mean(noise**2))
        assert measured == pytest.approx(snr_db, abs=0.5)

    def test_same_stream_same_noise(self, sine_clip, stream):
        a = add_noise_snr(sine_clip, 10.0, stream)
        b = add_noise_snr(sine_clip, 10.0, stream)
        np.testing.assert_array_equal(a.samples, b.samples)

    def test_silent_clip(self, stream):
        with pytest.raises(SilentClipError):
            add_noise_snr(AudioClip(samples=np.zeros(100), sample_rate=8000), 10.0, stream)


class TestSpeedAndPitch:
    """Resampling-based speed change and the pitch shifter built on it."""

    def test_speed_shortens_and_raises_pitch(self, sine_clip):
        fast = change_speed(sine_clip, 1.15)
        assert len(fast) == round(32000 / 1.15)
        assert abs(peak_frequency(fast.samples, 32000) - 440.0 * 1.15) < 3.0

    def test_unit_speed_is_identity(self, sine_clip):
        assert change_speed(sine_clip, 1.0) is sine_clip

    def test_non_positive_speed(self, sine_clip):
        with pytest.raises(ValidationError):
            change_speed(sine_clip, 0.0)

    def test_pitch_up_two_semitones(self, sine_clip):
        shifted = pitch_shift(sine_clip, 2.0)
        assert len(shifted) == len(sine_clip)
        target = 440.0 * 2 ** (2 / 12)
        assert peak_frequency(shifted.samples, 32000) == pytest.approx(target, rel=0.02)

    def test_pitch_down_two_semitones(self, sine_clip):
        shifted = pitch_shift(sine_clip, -2.0)
        assert len(shifted) == len(sine_clip)
        target = 440.0 * 2 ** (-2 / 12)
        assert peak_frequency(shifted.samples, 32000) == pytest.approx(target, rel=0.02)

    def test_zero_semitones_is_identity(self, sine_clip):
        assert pitch_shift(sine_clip, 0.0) is sine_clip


class TestWaveformTransforms:
    def test_wow_warp_fixes_origin(self):
        assert wow_warp(0.0, WowParams()) == 0.0
        assert wow_warp(0.25, WowParams(a_m=0.0)) == 0.25

    def test_wow_keeps_length(self, short_clip):
        wobbled = wow_resample(short_clip, WowParams())
        assert len(wobbled) == len(short_clip)
        assert not np.allclose(wobbled.samples, short_clip.samples)

    def test_clip_fraction(self, sine_clip):
        clipped = clip_fraction(sine_clip, 0.1)
        saturated = np.mean(np.abs(clipped.samples) == 1.0)
        assert 0.09 <= saturated <= 0.11
        assert np.abs(clipped.samples).max() == 1.0

    def test_clip_fraction_bounds(self, sine_clip):
        with pytest.raises(ValidationError):
            clip_fraction(sine_clip, 1.0)

    def test_distortion_stays_in_range(self, sine_clip):
        distorted = harmonic_distortion(sine_clip, 5)
        assert np.abs(distorted.samples).max() <= 1.0

    def test_gain_doubles_amplitude(self, sine_clip):
        louder = apply_gain_db(sine_clip, 20 * np.log10(2.0))
        np.testing.assert_allclose(louder.samples, 2 * sine_clip.samples)

    def test_circular_shift(self):
        clip = AudioClip(samples=np.arange(1.0, 6.0), sample_rate=8000)
        np.testing.assert_array_equal(circular_time_shift(clip, 2).samples, [3, 4, 5, 1, 2])
        np.testing.assert_array_equal(circular_time_shift(clip, 5).samples, clip.samples)

    def test_circular_shift_bounds(self):
        clip = AudioClip(samples=np.ones(5), sample_rate=8000)
        with pytest.raises(ValidationError):
            circular_time_shift(clip, 6)

    def test_drc_follows_curve(self):
        clip = AudioClip(samples=np.array([1.0, 0.1, -0.1]), sample_rate=8000)
        compressed = dynamic_range_compress(clip).samples
        # 0 dBFS -> -8 dBFS, -20 dBFS -> -16 dBFS
        expected = [10 ** (-8 / 20), 10 ** (-16 / 20), -(10 ** (-16 / 20))]
        np.testing.assert_allclose(compressed, expected)

    def test_drc_is_monotone(self):
        levels = np.linspace(0.001, 1.0, 200)
        compressed = dynamic_range_compress(AudioClip(samples=levels, sample_rate=8000)).samples
        assert np.all(np.diff(compressed) > 0)


class TestSgn:
    """Random each-with-probability chains."""

    def test_each_transform_fires_about_half_the_time(self, stream):
        fired = {name: 0 for name in SGN_TRANSFORMS}
        for copy in range(1000):
            for step in sgn_plan(stream, SgnPreset(), copy):
                fired[step.transform] += 1
        for name, count in fired.items():
            assert 0.44 <= count / 1000 <= 0.56, name

    def test_steps_keep_fixed_order_and_ranges(self, stream):
        preset = SgnPreset()
        for copy in range(50):
            steps = sgn_plan(stream, preset, copy)
            names = [s.transform for s in steps]
            assert names == [n for n in SGN_TRANSFORMS if n in names]
            for step in steps:
                if step.transform == "speed":
                    assert 0.8 <= step.value < 1.2

    def test_probability_zero_copies_equal_original(self, short_clip, stream):
        copies = augment_sgn(short_clip, stream, SgnPreset(probability=0.0))
        assert len(copies) == 10
        for copy in copies:
            np.testing.assert_array_equal(copy.samples, short_clip.samples)

    def test_silent_clip_skips_noise(self, stream):
        silence = AudioClip(samples=np.zeros(8000), sample_rate=16000)
        copies = augment_sgn(silence, stream, SgnPreset(probability=1.0), copies=3)
        assert len(copies) == 3
        assert all(not c.samples.any() for c in copies)

    def test_pitch_step_uses_configured_tsm_preset(self, short_clip, stream):
        tsm = TsmPreset(pv_synthesis_hop=128)
        target = "sonoforge.services.signal_aug_service.pitch_shift"
        with patch(target, wraps=pitch_shift) as spy:
            augment_sgn(short_clip, stream, SgnPreset(probability=1.0), copies=1, tsm=tsm)
        assert spy.call_count == 1
        assert spy.call_args.args[2] is tsm

    def test_deterministic(self, short_clip, stream):
        a = augment_sgn(short_clip, stream)
        b = augment_sgn(short_clip, stream)
        for x, y in zip(a, b):
            np.testing.assert_array_equal(x.samples, y.samples)


class TestSsaAndSsia:
    def test_ssa_copies(self, short_clip, stream):
        copies = augment_ssa(short_clip, stream)
        assert len(copies) == 10
        assert len(copies[3]) == round(len(short_clip) / 1.15)
        np.testing.assert_allclose(copies[5].samples, short_clip.samples * 10 ** 0.5)

    def test_ssa_on_silent_clip(self, stream):
        silence = AudioClip(samples=np.zeros(8000), sample_rate=16000)
        copies = augment_ssa(silence, stream)
        assert len(copies) == 10
        assert not copies[1].samples.any()

    def test_ssa_pitch_copies_use_tsm_preset(self, short_clip, stream):
        tsm = TsmPreset(pv_synthesis_hop=128)
        with patch("sonoforge.services.signal_aug_service.pitch_shift", wraps=pitch_shift) as spy:
            augment_ssa(short_clip, stream, tsm=tsm)
        assert [c.args[2] for c in spy.call_args_list] == [tsm, tsm]

    def test_ssia_copies(self, short_clip, stream):
        copies = augment_ssia(short_clip, stream)
        assert len(copies) == 29
        assert len({c.samples.tobytes() for c in copies}) == 29

    def test_ssia_is_deterministic(self, short_clip, stream):
        a = augment_ssia(short_clip, stream, copies=3)
        b = augment_ssia(short_clip, stream, copies=3)
        for x, y in zip(a, b):
            np.testing.assert_array_equal(x.samples, y.samples)

    def test_other_seed_other_copies(self, short_clip):
        a = augment_ssia(short_clip, RngStream(seed=1), copies=1)[0]
        b = augment_ssia(short_clip, RngStream(seed=2), copies=1)[0]
        assert not np.array_equal(a.samples, b.samples)
