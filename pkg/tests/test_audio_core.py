import io

import numpy as np
import pytest
import soundfile as sf

from sonoforge.adapters.wav_io import encode_wav, load_wav, load_wav_bytes, save_wav
from sonoforge.domain.entities import AudioClip
from sonoforge.domain.exceptions import (
    AudioFileNotFoundError,
    EmptyClipError,
    InvalidClipError,
    MalformedHeaderError,
    NotFoundError,
    UnsupportedCodecError,
    ValidationError,
)
from sonoforge.services.audio_service import resample, rms, sinc_interpolate
from tests.synth import make_sine, peak_frequency


def _wav(data: np.ndarray, rate: int = 8000, subtype: str = "PCM_16", fmt: str = "WAV") -> bytes:
    buffer = io.BytesIO()
    sf.write(buffer, data, rate, format=fmt, subtype=subtype)
    return buffer.getvalue()


class TestAudioClip:
    """Validation of the clip value type."""

    def test_empty_clip_rejected(self):
        with pytest.raises(EmptyClipError):
            AudioClip(samples=np.zeros(0), sample_rate=8000)

    def test_multichannel_array_rejected(self):
        with pytest.raises(InvalidClipError):
            AudioClip(samples=np.zeros((10, 2)), sample_rate=8000)

    def test_non_finite_samples_rejected(self):
        with pytest.raises(InvalidClipError):
            AudioClip(samples=np.array([0.0, np.nan]), sample_rate=8000)

    def test_samples_are_read_only(self, sine_clip):
        with pytest.raises(ValueError):
            sine_clip.samples[0] = 1.0

    def test_duration(self):
        clip = AudioClip(samples=np.zeros(16000), sample_rate=32000)
        assert clip.duration == 0.5


class TestLoadWav:
    """Decoding of RIFF/WAVE files."""

    def test_pcm16_codes_scale_by_two_to_the_fifteen(self):
        codes = np.array([0, 16384, -32768, 32767], dtype=np.int16)
        clip = load_wav_bytes(_wav(codes))
        assert clip.sample_rate == 8000
        np.testing.assert_array_equal(clip.samples, codes / 32768.0)

    def test_pcm24_and_float_are_supported(self):
        values = np.array([0.0, 0.25, -0.5])
        pcm24 = load_wav_bytes(_wav(values, subtype="PCM_24"))
        floats = load_wav_bytes(_wav(values.astype(np.float32), subtype="FLOAT"))
        np.testing.assert_allclose(pcm24.samples, values, atol=2**-23)
        np.testing.assert_allclose(floats.samples, values, atol=1e-7)

    def test_stereo_is_mixed_by_channel_mean(self):
        stereo = np.array([[16384, 0], [-16384, -16384]], dtype=np.int16)
        clip = load_wav_bytes(_wav(stereo))
        np.testing.assert_allclose(clip.samples, [0.25, -0.5])

    def test_missing_file(self, tmp_path):
        with pytest.raises(AudioFileNotFoundError) as exc_info:
            load_wav(tmp_path / "missing.wav")
        assert isinstance(exc_info.value, NotFoundError)

    def test_garbage_header(self):
        with pytest.raises(MalformedHeaderError):
            load_wav_bytes(b"RIFF\x00\x00\x00\x00WAVEjunkjunkjunk")

    def test_other_container_is_unsupported(self):
        data = _wav(np.zeros(100, dtype=np.int16), fmt="AIFF")
        with pytest.raises(UnsupportedCodecError):
            load_wav_bytes(data)

    def test_zero_frames(self):
        with pytest.raises(EmptyClipError):
            load_wav_bytes(_wav(np.zeros(0, dtype=np.int16)))


class TestEncodeWav:
    """16-bit PCM output with clamping."""

    def test_out_of_range_samples_are_clamped(self):
        clip = AudioClip(samples=np.array([1.5, -1.0, 0.5, -2.0]), sample_rate=8000)
        codes, rate = sf.read(io.BytesIO(encode_wav(clip)), dtype="int16")
        assert rate == 8000
        np.testing.assert_array_equal(codes, [32767, -32768, 16384, -32768])

    def test_save_and_load(self, tmp_path, sine_clip):
        path = save_wav(sine_clip, tmp_path / "nested" / "sine.wav")
        loaded = load_wav(path)
        assert loaded.sample_rate == sine_clip.sample_rate
        np.testing.assert_allclose(loaded.samples, sine_clip.samples, atol=2**-15)


class TestResample:
    """Windowed-sinc rate conversion."""

    def test_same_rate_is_identity(self, sine_clip):
        assert resample(sine_clip, sine_clip.sample_rate) is sine_clip

    def test_output_length(self, sine_clip):
        assert len(resample(sine_clip, 44100)) == 44100
        assert len(resample(sine_clip, 16000)) == 16000

    def test_tone_frequency_is_kept(self, sine_clip):
        down = resample(sine_clip, 16000)
        assert abs(peak_frequency(down.samples, 16000) - 440.0) <= 2.0

    def test_round_trip_of_band_limited_signal(self):
        clip = make_sine(440.0)
        tapered = clip.with_samples(clip.samples * np.hanning(len(clip)))
        back = resample(resample(tapered, 16000), 32000)
        np.testing.assert_allclose(
            back.samples[2000:-2000], tapered.samples[2000:-2000], atol=1e-2
        )

    def test_non_positive_rate_rejected(self, sine_clip):
        with pytest.raises(ValidationError):
            resample(sine_clip, 0)

    def test_integer_positions_return_samples(self):
        samples = np.sin(np.arange(200) * 0.1)
        values = sinc_interpolate(samples, np.arange(50, 150, dtype=float))
        np.testing.assert_allclose(values, samples[50:150], atol=1e-12)

    def test_invalid_cutoff_rejected(self):
        with pytest.raises(ValidationError):
            sinc_interpolate(np.zeros(10), np.zeros(3), cutoff=1.5)


def test_rms_of_sine():
    clip = make_sine(amp=1.0)
    assert rms(clip) == pytest.approx(1 / np.sqrt(2), rel=1e-6)
