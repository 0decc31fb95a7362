import numpy as np
import pytest
from scipy import fft as sp_fft

from sonoforge.domain.entities import GammatoneBank, TimeFreqMatrix
from sonoforge.domain.exceptions import ClipTooShortError, ShapeMismatchError, ValidationError
from sonoforge.domain.models import RepresentationConfig, StftParams
from sonoforge.services.repr_service import (
    build_gammatone_bank,
    build_mel_bank,
    clip_to_image,
    clip_to_matrix,
    cochleagram,
    dgt_spectrogram,
    erb,
    erb_space,
    gammatone_response,
    gammatone_spectrogram,
    gammatone_taps,
    hz_to_mel,
    mel_spectrogram,
    mel_to_hz,
    to_db,
    to_gray,
)
from tests.synth import make_noise_bursts, make_sine


def _matrix(values) -> TimeFreqMatrix:
    values = np.asarray(values, dtype=float)
    return TimeFreqMatrix(values=values, frequencies=np.arange(values.shape[0]), frame_s=0.01)


class TestDgt:
    """Gaussian-window STFT magnitude."""

    def test_shape_and_bin_frequencies(self, sine_clip):
        m = dgt_spectrogram(sine_clip)
        assert m.shape == (513, 122)
        assert m.frequencies[1] == pytest.approx(31.25)
        assert m.frame_s == pytest.approx(256 / 32000)

    def test_peak_row_matches_tone(self):
        m = dgt_spectrogram(make_sine(1000.0))
        assert int(np.argmax(m.values.mean(axis=1))) == 32

    def test_default_window_std_is_a_sixth_of_the_window(self):
        assert StftParams().gaussian_std == pytest.approx(1024 / 6)

    def test_clip_shorter_than_window(self):
        with pytest.raises(ClipTooShortError):
            dgt_spectrogram(make_sine(seconds=0.01))

    def test_hop_longer_than_window_rejected(self):
        with pytest.raises(ValueError):
            StftParams(window_len=256, hop=512, fft_len=1024)


class TestMel:
    def test_scale_reference_points(self):
        assert hz_to_mel(0.0) == 0.0
        assert hz_to_mel(1000.0) == pytest.approx(1000.0, abs=0.05)
        assert mel_to_hz(hz_to_mel(440.0)) == pytest.approx(440.0)

    def test_negative_frequency_rejected(self):
        with pytest.raises(ValidationError):
            hz_to_mel(-1.0)

    def test_weights_partition_unity_inside_band(self):
        bank = build_mel_bank(32000, 1024, 64)
        np.testing.assert_allclose(bank.weights.sum(axis=0), 1.0, atol=1e-12)

    def test_each_filter_peaks_at_its_center(self):
        bank = build_mel_bank(32000, 1024, 64)
        centers = bank.center_bins.astype(int)
        assert np.all(np.diff(centers) > 0)
        np.testing.assert_array_equal(bank.weights[np.arange(64), centers], 1.0)

    def test_band_limits(self):
        with pytest.raises(ValidationError):
            build_mel_bank(16000, 512, 32, f_lo=4000.0, f_hi=2000.0)
        with pytest.raises(ValidationError):
            build_mel_bank(16000, 512, 32, f_hi=9000.0)

    def test_too_many_filters(self):
        with pytest.raises(ValidationError):
            build_mel_bank(8000, 64, 40)

    def test_spectrogram_uses_bank_rows(self, sine_clip):
        p = StftParams()
        bank = build_mel_bank(32000, 1024, 40)
        m = mel_spectrogram(sine_clip, p, bank)
        assert m.shape == (40, 122)
        np.testing.assert_allclose(m.frequencies, bank.center_hz)

    def test_bank_for_other_fft_size(self, sine_clip):
        bank = build_mel_bank(32000, 512, 40)
        with pytest.raises(ShapeMismatchError):
            mel_spectrogram(sine_clip, StftParams(), bank)

    def test_bank_for_other_rate(self, sine_clip):
        bank = build_mel_bank(16000, 1024, 40)
        with pytest.raises(ShapeMismatchError):
            mel_spectrogram(sine_clip, StftParams(), bank)


class TestGammatone:
    """ERB-spaced gammatone filterbank and the two envelopes built on it."""

    def test_erb_space_endpoints(self):
        centers = erb_space(50.0, 14400.0, 64)
        assert centers[0] == pytest.approx(50.0)
        assert centers[-1] == pytest.approx(14400.0)
        assert np.all(np.diff(centers) > 0)

    def test_response_is_causal(self):
        bank = build_gammatone_bank(16000)
        assert gammatone_response(bank, 10, -0.001) == 0.0
        assert gammatone_response(bank, 10, 0.0) == 0.0

    def test_single_pole_response_value(self):
        bank = GammatoneBank(
            sample_rate=16000, centers=[0.0], bandwidths=[100.0], gains=[1.0], order=1, phase=0.0
        )
        assert gammatone_response(bank, 0, 0.001) == pytest.approx(np.exp(-0.2 * np.pi))
        assert gammatone_response(bank, 0, 0.001) == pytest.approx(0.5335, abs=1e-4)

    def test_doubling_gains_doubles_spectrogram(self):
        clip = make_sine(1000.0, rate=16000, seconds=0.5)
        bank = build_gammatone_bank(16000)
        louder = GammatoneBank(
            sample_rate=bank.sample_rate,
            centers=bank.centers,
            bandwidths=bank.bandwidths,
            gains=2.0 * bank.gains,
            order=bank.order,
            phase=bank.phase,
        )
        np.testing.assert_allclose(
            gammatone_spectrogram(clip, louder).values,
            2.0 * gammatone_spectrogram(clip, bank).values,
            rtol=1e-9,
        )

    def test_unknown_channel(self):
        with pytest.raises(ValidationError):
            gammatone_response(build_gammatone_bank(16000), 64, 0.0)

    def test_gains_give_unit_peak_response(self):
        bank = build_gammatone_bank(16000)
        for channel in (0, 31, 63):
            taps = gammatone_taps(bank, channel)
            n_fft = sp_fft.next_fast_len(max(4 * taps.size, 8192))
            peak = np.max(np.abs(sp_fft.rfft(taps, n=n_fft)))
            assert peak == pytest.approx(1.0, rel=1e-6)

    def test_bandwidths_follow_erb(self):
        bank = build_gammatone_bank(16000)
        np.testing.assert_allclose(bank.bandwidths, 1.019 * erb(bank.centers))

    def test_strongest_channel_is_near_tone(self):
        clip = make_sine(1000.0, rate=16000)
        bank = build_gammatone_bank(16000)
        m = gammatone_spectrogram(clip, bank)
        strongest = bank.centers[int(np.argmax(m.values.mean(axis=1)))]
        assert abs(strongest - 1000.0) < erb(1000.0)

    def test_envelope_shapes(self):
        clip = make_sine(1000.0, rate=16000)
        bank = build_gammatone_bank(16000)
        assert gammatone_spectrogram(clip, bank).shape == (64, 59)
        # 20 ms windows with 10 ms hop at 16 kHz
        assert cochleagram(clip, bank).shape == (64, 99)

    def test_bank_for_other_rate(self, sine_clip):
        with pytest.raises(ShapeMismatchError):
            gammatone_spectrogram(sine_clip, build_gammatone_bank(16000))

    def test_cochleagram_is_non_negative(self):
        clip = make_noise_bursts(4, rate=16000, seconds=0.5)
        assert np.all(cochleagram(clip, build_gammatone_bank(16000)).values >= 0)

    def test_cochleagram_of_repeated_clip(self):
        # 1 kHz at 16 kHz: 0.5 s is a whole number of periods
        clip = make_sine(1000.0, rate=16000, seconds=0.5)
        twice = clip.with_samples(np.concatenate([clip.samples, clip.samples]))
        bank = build_gammatone_bank(16000)
        single = cochleagram(clip, bank, win_s=0.02, hop_s=0.02).values
        double = cochleagram(twice, bank, win_s=0.02, hop_s=0.02).values
        n = single.shape[1]
        assert double.shape == (single.shape[0], 2 * n)
        # past the longest filter tail both halves see the same steady state
        np.testing.assert_allclose(
            double[:, n + 5 :], double[:, 5:n], rtol=1e-6, atol=1e-9 * double.max()
        )
        np.testing.assert_allclose(double[:, :n], single, rtol=1e-9, atol=1e-12 * single.max())

    def test_cochleagram_hop_longer_than_window(self, sine_clip):
        with pytest.raises(ValidationError):
            cochleagram(sine_clip, build_gammatone_bank(32000), win_s=0.01, hop_s=0.02)


class TestQuantization:
    def test_affine_invariance(self):
        rng = np.random.default_rng(2024)
        for _ in range(100):
            m = rng.standard_normal((20, 30))
            a, b = rng.uniform(0.1, 10.0), rng.uniform(-5.0, 5.0)
            np.testing.assert_array_equal(
                to_gray(_matrix(a * m + b)).pixels, to_gray(_matrix(m)).pixels
            )

    def test_to_gray_scales_to_full_range(self):
        image = to_gray(_matrix([[0, 1], [2, 3]]))
        np.testing.assert_array_equal(image.pixels, [[0, 85], [170, 255]])

    def test_constant_matrix_is_black(self):
        image = to_gray(_matrix(np.full((3, 4), 7.0)))
        assert image.pixels.dtype == np.uint8
        assert not image.pixels.any()

    def test_db_floor(self):
        db = to_db(_matrix([[1.0, 1e-9], [0.0, 0.5]]), floor_db=-60.0)
        assert db.values.max() == pytest.approx(0.0, abs=1e-6)
        assert db.values.min() == pytest.approx(-60.0)

    def test_positive_floor_rejected(self):
        with pytest.raises(ValidationError):
            to_db(_matrix([[1.0]]), floor_db=10.0)


class TestDispatch:
    @pytest.mark.parametrize(
        "name, rows", [("dgt", 513), ("mel", 64), ("gamma", 64), ("cochlea", 64)]
    )
    def test_rows_per_representation(self, name, rows):
        clip = make_sine(rate=16000)
        m = clip_to_matrix(clip, RepresentationConfig(name=name))
        assert m.shape[0] == rows

    def test_image_spans_full_gray_range(self, sine_clip):
        image = clip_to_image(sine_clip)
        assert image.shape == (513, 122)
        assert image.pixels.min() == 0
        assert image.pixels.max() == 255

    def test_resize(self, sine_clip):
        image = clip_to_image(sine_clip, RepresentationConfig(resize=(128, 64)))
        assert image.shape == (128, 64)

    def test_same_clip_same_image(self, sine_clip):
        a = clip_to_image(sine_clip, RepresentationConfig(name="mel"))
        b = clip_to_image(sine_clip, RepresentationConfig(name="mel"))
        np.testing.assert_array_equal(a.pixels, b.pixels)


class TestScaling:
    """Scaling the clip by c scales magnitudes by c and energies by c**2."""

    @pytest.mark.parametrize("name, power", [("dgt", 1), ("mel", 2), ("gamma", 1), ("cochlea", 2)])
    def test_scaling_law(self, name, power):
        clip = make_noise_bursts(6, rate=16000, seconds=0.5)
        config = RepresentationConfig(name=name, db=False)
        base = clip_to_matrix(clip, config).values
        scaled = clip_to_matrix(clip.with_samples(3.0 * clip.samples), config).values
        np.testing.assert_allclose(scaled, 3.0**power * base, rtol=1e-6, atol=1e-12 * base.max())
