"""Value types that carry sample, matrix and score arrays.

All arrays are copied on construction and frozen (``writeable=False``).
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Optional, Tuple

import numpy as np

from sonoforge.domain.exceptions import (
    DuplicateError,
    EmptyClipError,
    InvalidClipError,
    InvalidImageError,
    ShapeMismatchError,
    ValidationError,
)


def _frozen(values, dtype) -> np.ndarray:
    array = np.array(values, dtype=dtype, copy=True)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class AudioClip:
    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        samples = _frozen(self.samples, np.float64)
        if samples.ndim != 1:
            raise InvalidClipError(f"Clip must be mono, got shape {samples.shape}")
        if samples.size == 0:
            raise EmptyClipError("empty clip")
        if int(self.sample_rate) <= 0:
            raise InvalidClipError(f"Sample rate must be positive, got {self.sample_rate}")
        if not np.all(np.isfinite(samples)):
            raise InvalidClipError("Clip contains NaN or Inf samples")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate", int(self.sample_rate))

    def __len__(self) -> int:
        return int(self.samples.size)

    @property
    def duration(self) -> float:
        return len(self) / self.sample_rate

    def with_samples(self, samples) -> "AudioClip":
        return AudioClip(samples=samples, sample_rate=self.sample_rate)


@dataclass(frozen=True, eq=False)
class TimeFreqMatrix:
    """Rows are frequency bins from low to high, columns are time frames."""

    values: np.ndarray
    frequencies: np.ndarray
    frame_s: float

    def __post_init__(self):
        values = _frozen(self.values, np.float64)
        if values.ndim != 2 or values.shape[0] < 1 or values.shape[1] < 1:
            raise ValidationError(f"Matrix must be non-empty 2-D, got {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValidationError("Time-frequency matrix contains NaN or Inf")
        frequencies = _frozen(self.frequencies, np.float64)
        if frequencies.shape != (values.shape[0],):
            raise ShapeMismatchError("One center frequency per row is required")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "frequencies", frequencies)

    @property
    def shape(self) -> Tuple[int, int]:
        return self.values.shape

    def with_values(self, values) -> "TimeFreqMatrix":
        return TimeFreqMatrix(values=values, frequencies=self.frequencies, frame_s=self.frame_s)


@dataclass(frozen=True, eq=False)
class GrayImage:
    pixels: np.ndarray

    def __post_init__(self):
        raw = np.asarray(self.pixels)
        if raw.ndim != 2 or raw.shape[0] < 1 or raw.shape[1] < 1:
            raise InvalidImageError(f"Image must be non-empty 2-D, got shape {raw.shape}")
        if raw.size and (raw.min() < 0 or raw.max() > 255):
            raise InvalidImageError("Pixels must lie in [0, 255]")
        object.__setattr__(self, "pixels", _frozen(raw, np.uint8))

    @property
    def shape(self) -> Tuple[int, int]:
        return self.pixels.shape


@dataclass(frozen=True, eq=False)
class MelBank:
    sample_rate: int
    fft_len: int
    f_lo: float
    f_hi: float
    center_bins: np.ndarray
    weights: np.ndarray

    @property
    def n_filters(self) -> int:
        return int(self.weights.shape[0])

    @property
    def center_hz(self) -> np.ndarray:
        return self.center_bins * self.sample_rate / self.fft_len


@dataclass(frozen=True, eq=False)
class GammatoneBank:
    sample_rate: int
    centers: np.ndarray
    bandwidths: np.ndarray
    gains: np.ndarray
    order: int = 4
    phase: float = 0.0

    def __post_init__(self):
        centers = _frozen(self.centers, np.float64)
        bandwidths = _frozen(self.bandwidths, np.float64)
        gains = _frozen(self.gains, np.float64)
        if not (centers.ndim == bandwidths.ndim == gains.ndim == 1):
            raise ShapeMismatchError("Gammatone parameters must be 1-D")
        if not (centers.size == bandwidths.size == gains.size) or centers.size == 0:
            raise ShapeMismatchError("Gammatone parameters need one entry per channel")
        if np.any(bandwidths <= 0) or np.any(centers < 0):
            raise ValidationError("Gammatone centers must be >= 0 and bandwidths > 0")
        if np.any(np.diff(bandwidths) <= 0):
            raise ValidationError("Gammatone bandwidths must increase with center frequency")
        if self.order < 1:
            raise ValidationError("Gammatone order must be >= 1")
        object.__setattr__(self, "centers", centers)
        object.__setattr__(self, "bandwidths", bandwidths)
        object.__setattr__(self, "gains", gains)

    @property
    def n_channels(self) -> int:
        return int(self.centers.size)


@dataclass(frozen=True, eq=False)
class ScoreMatrix:
    pattern_ids: Tuple[str, ...]
    class_names: Tuple[str, ...]
    scores: np.ndarray
    source_tag: str = ""

    def __post_init__(self):
        pattern_ids = tuple(str(p) for p in self.pattern_ids)
        class_names = tuple(str(c) for c in self.class_names)
        scores = _frozen(self.scores, np.float64)
        if len(set(pattern_ids)) != len(pattern_ids):
            seen = set()
            dupes = sorted({p for p in pattern_ids if p in seen or seen.add(p)})
            raise DuplicateError(f"Duplicate pattern ids in score matrix: {', '.join(dupes)}")
        if scores.shape != (len(pattern_ids), len(class_names)):
            raise ShapeMismatchError(
                f"Scores shape {scores.shape} does not match "
                f"{len(pattern_ids)} patterns x {len(class_names)} classes"
            )
        object.__setattr__(self, "pattern_ids", pattern_ids)
        object.__setattr__(self, "class_names", class_names)
        object.__setattr__(self, "scores", scores)

    def with_scores(self, scores, source_tag: Optional[str] = None) -> "ScoreMatrix":
        return ScoreMatrix(
            pattern_ids=self.pattern_ids,
            class_names=self.class_names,
            scores=scores,
            source_tag=self.source_tag if source_tag is None else source_tag,
        )

    def rows_for(self, pattern_ids) -> np.ndarray:
        index = {p: i for i, p in enumerate(self.pattern_ids)}
        return np.array([index[p] for p in pattern_ids], dtype=np.int64)


@dataclass(frozen=True)
class FoldSplit:
    fold_id: int
    train_ids: Tuple[str, ...]
    test_ids: Tuple[str, ...]

    def __post_init__(self):
        overlap = set(self.train_ids) & set(self.test_ids)
        if overlap:
            raise ValidationError(
                f"Fold {self.fold_id}: train and test share {', '.join(sorted(overlap))}"
            )


@dataclass(frozen=True, eq=False)
class EvalReport:
    fold_accuracies: Dict[int, float]
    mean_accuracy: float
    per_class_accuracy: Dict[str, float]
    confusion: np.ndarray
    class_names: Tuple[str, ...]
    source_tag: str = ""


@dataclass(frozen=True)
class ManifestRow:
    pattern_id: str
    wav_path: Path
    label: str
    fold: int


@dataclass(frozen=True)
class Manifest:
    rows: Tuple[ManifestRow, ...]
    source: Optional[Path] = None

    def __len__(self) -> int:
        return len(self.rows)

    @property
    def folds(self) -> Tuple[int, ...]:
        return tuple(sorted({row.fold for row in self.rows}))

    @property
    def labels(self) -> Dict[str, str]:
        return {row.pattern_id: row.label for row in self.rows}


@dataclass(frozen=True, eq=False)
class Centroids:
    class_names: Tuple[str, ...]
    vectors: np.ndarray
    down: int
    counts: Tuple[int, ...] = field(default=())


UINT64_MASK = (1 << 64) - 1


@dataclass(frozen=True)
class RngStream:
    """Counter-based random stream; a plain value, never shared mutable state."""

    seed: int
    counter: int = 0

    def __post_init__(self):
        if not (0 <= self.seed <= UINT64_MASK and 0 <= self.counter <= UINT64_MASK):
            raise ValidationError("RngStream seed and counter must be unsigned 64-bit integers")
