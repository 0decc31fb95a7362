import math
from typing import Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

RepresentationName = Literal["dgt", "mel", "gamma", "cochlea"]
ImageFormat = Literal["png", "pgm"]
ProtocolName = Literal["noaug", "sgn", "ssa", "ssia", "tsm", "sspa", "susa"]
ApplyRule = Literal["none", "each-with-prob", "one-per-copy", "all-per-copy", "grid"]
TsmAlgorithm = Literal["ola", "wsola", "pv", "pv_ipl", "hpss"]

TSM_ALGORITHMS: Tuple[str, ...] = ("ola", "wsola", "pv", "pv_ipl", "hpss")
TSM_FACTOR_PRESETS: Dict[str, Tuple[float, ...]] = {
    "default": (0.8, 1.5),
    "wide": (0.5, 1.8),
}


class FrozenModel(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


def _ordered_range(value: Tuple[float, float], field_name: str) -> Tuple[float, float]:
    lo, hi = value
    if lo > hi:
        raise ValueError(f"{field_name} lower bound {lo} exceeds upper bound {hi}")
    return value


class StftParams(FrozenModel):
    window_len: int = Field(1024, gt=0, description="Analysis window length in samples")
    hop: int = Field(256, gt=0, description="Hop between frames in samples")
    sigma2: float = Field(
        18.0 / math.pi,
        gt=0,
        description="Gaussian width: w(u) = exp(-pi * sigma2 * u**2), u in window lengths",
    )
    fft_len: int = Field(1024, gt=0, description="FFT size in samples")

    @model_validator(mode="after")
    def validate_sizes(self):
        if not (self.hop <= self.window_len <= self.fft_len):
            raise ValueError("StftParams requires 0 < hop <= window_len <= fft_len")
        return self

    @property
    def gaussian_std(self) -> float:
        """Window std in samples; the default sigma2 yields window_len / 6."""
        return self.window_len / math.sqrt(2.0 * math.pi * self.sigma2)


class MelParams(FrozenModel):
    n_filters: int = Field(64, ge=1)
    f_lo: float = Field(0.0, ge=0)
    f_hi: Optional[float] = Field(None, gt=0, description="Defaults to Nyquist")


class GammatoneParams(FrozenModel):
    n_channels: int = Field(64, ge=1)
    f_lo: float = Field(50.0, gt=0)
    f_hi_ratio: float = Field(0.45, gt=0, lt=0.5, description="Top center over rate")
    order: int = Field(4, ge=1)
    phase: float = 0.0
    frame_len: int = Field(1024, gt=0)
    hop: int = Field(256, gt=0)


class CochleagramParams(FrozenModel):
    win_s: float = Field(0.020, gt=0)
    hop_s: float = Field(0.010, gt=0)

    @model_validator(mode="after")
    def validate_hop(self):
        if self.hop_s > self.win_s:
            raise ValueError("Cochleagram hop_s must not exceed win_s")
        return self


class RepresentationConfig(FrozenModel):
    name: RepresentationName = "dgt"
    stft: StftParams = StftParams()
    mel: MelParams = MelParams()
    gammatone: GammatoneParams = GammatoneParams()
    cochleagram: CochleagramParams = CochleagramParams()
    db: bool = True
    floor_db: float = Field(-80.0, lt=0)
    resize: Optional[Tuple[int, int]] = Field(None, description="(rows, cols) bilinear resize")

    @field_validator("resize")
    @classmethod
    def validate_resize(cls, value):
        if value is not None and (value[0] < 1 or value[1] < 1):
            raise ValueError("Resize dimensions must be >= 1")
        return value


class WowParams(FrozenModel):
    a_m: float = 3.0
    f_m: float = Field(2.0, gt=0)


class DrcCurve(FrozenModel):
    breakpoints: Tuple[Tuple[float, float], ...] = (
        (-90.0, -80.0),
        (-60.0, -50.0),
        (-40.0, -30.0),
        (-20.0, -16.0),
        (0.0, -8.0),
    )

    @field_validator("breakpoints")
    @classmethod
    def validate_breakpoints(cls, value):
        if len(value) < 2:
            raise ValueError("DRC curve needs at least two breakpoints")
        inputs = [p[0] for p in value]
        outputs = [p[1] for p in value]
        if any(b <= a for a, b in zip(inputs, inputs[1:])):
            raise ValueError("DRC input levels must be strictly increasing")
        if any(b < a for a, b in zip(outputs, outputs[1:])):
            raise ValueError("DRC output levels must be non-decreasing")
        return value


class TsmParams(FrozenModel):
    """alpha = H_s / H_a; H_s is an integer hop, H_a is derived and may be fractional."""

    alpha: float = Field(..., gt=0)
    synthesis_hop: int = Field(512, gt=0)
    window_len: int = Field(1024, gt=0)

    @property
    def analysis_hop(self) -> float:
        return self.synthesis_hop / self.alpha

    @model_validator(mode="after")
    def validate_hops(self):
        if self.analysis_hop > self.window_len:
            raise ValueError("Analysis hop H_s / alpha must not exceed window_len")
        return self


class WsolaParams(FrozenModel):
    base: TsmParams
    tolerance: int = Field(512, ge=0)


class VtlnParams(FrozenModel):
    alpha: float = Field(1.0, gt=0)
    f0: Optional[int] = Field(None, gt=0, description="Defaults to round(0.6 * fmax)")
    fmax: Optional[int] = Field(None, gt=0, description="Defaults to the top row index")
    a: float = Field(0.9, gt=0)
    b: float = Field(1.1, gt=0)

    @model_validator(mode="after")
    def validate_bounds(self):
        if self.a > self.b:
            raise ValueError("VTLN draw interval requires a <= b")
        if self.f0 is not None and self.fmax is not None and not self.f0 < self.fmax:
            raise ValueError("VTLN requires 0 < f0 < fmax")
        if self.f0 is not None and self.fmax is not None:
            if not max(self.alpha, self.b) * self.f0 < self.fmax:
                raise ValueError("VTLN requires alpha * f0 < fmax for alpha and b")
        return self


class MaskSpec(FrozenModel):
    row_width: int = Field(5, ge=1)
    col_width: int = Field(15, ge=1)
    max_rows: int = Field(2, ge=0)
    max_cols: int = Field(1, ge=0)


class SgnPreset(FrozenModel):
    probability: float = Field(0.5, ge=0, le=1)
    speed_range: Tuple[float, float] = (0.8, 1.2)
    pitch_range: Tuple[float, float] = (-2.0, 2.0)
    gain_range: Tuple[float, float] = (-3.0, 3.0)
    snr_range: Tuple[float, float] = (0.0, 10.0)
    shift_range_s: Tuple[float, float] = (-0.005, 0.005)

    @field_validator("speed_range", "pitch_range", "gain_range", "snr_range", "shift_range_s")
    @classmethod
    def validate_ranges(cls, value, info):
        return _ordered_range(value, info.field_name)

    @field_validator("speed_range")
    @classmethod
    def validate_speed(cls, value):
        if value[0] <= 0:
            raise ValueError("Speed factors must be positive")
        return value


class SsaPreset(FrozenModel):
    wow: WowParams = WowParams()
    snr_db: float = 10.0
    clip_fraction: float = Field(0.1, gt=0, lt=1)
    speed: float = Field(1.15, gt=0)
    distortion_iterations: int = Field(5, ge=1)
    gain_db: float = 10.0
    drc: DrcCurve = DrcCurve()
    pitch_up: float = 2.0
    pitch_down: float = -2.0


class SsiaPreset(FrozenModel):
    wow: WowParams = WowParams()
    speed_percent_range: Tuple[float, float] = (-5.0, 5.0)
    gain_range: Tuple[float, float] = (-0.5, 0.5)
    pitch_range: Tuple[float, float] = (-0.5, 0.5)

    @field_validator("speed_percent_range", "gain_range", "pitch_range")
    @classmethod
    def validate_ranges(cls, value, info):
        lo, hi = _ordered_range(value, info.field_name)
        if info.field_name == "speed_percent_range" and lo <= -100:
            raise ValueError("Speed change must stay above -100 percent")
        return value


class TsmPreset(FrozenModel):
    factors: str = "default"
    alphas: Optional[Tuple[float, ...]] = Field(None, description="Overrides factors")
    window_len: int = Field(1024, gt=0)
    ola_window_len: int = Field(4096, gt=0, description="Shared by OLA and WSOLA")
    ola_synthesis_hop: int = Field(2048, gt=0)
    pv_synthesis_hop: int = Field(256, gt=0)
    wsola_tolerance: int = Field(512, ge=0)
    percussive_window_len: int = Field(256, gt=0)
    percussive_synthesis_hop: int = Field(128, gt=0)

    @field_validator("factors")
    @classmethod
    def validate_factors(cls, value):
        if value not in TSM_FACTOR_PRESETS:
            raise ValueError(f"Unknown TSM factor preset: {value}")
        return value

    @field_validator("alphas")
    @classmethod
    def validate_alphas(cls, value):
        if value is not None and (not value or any(a <= 0 for a in value)):
            raise ValueError("TSM factors must be a non-empty list of positive numbers")
        return value

    def resolved_alphas(self) -> Tuple[float, ...]:
        return tuple(self.alphas) if self.alphas else TSM_FACTOR_PRESETS[self.factors]


class SspaPreset(FrozenModel):
    max_row_shift_ratio: float = Field(0.1, ge=0, lt=1)
    vtln: VtlnParams = VtlnParams()
    n_slices: int = Field(10, ge=1)
    n_anchors: int = Field(5, ge=2)
    max_disp_ratio: float = Field(0.05, ge=0, lt=1)
    mask: MaskSpec = MaskSpec()
    noise_range: Tuple[float, float] = (1.0 - math.sqrt(3.0), 1.0 + math.sqrt(3.0))
    noise_prob: float = Field(0.3, ge=0, le=1)


class SusaPreset(FrozenModel):
    row_shift_range: Tuple[float, float] = (-1.0, 1.0)
    vtln: VtlnParams = VtlnParams()
    n_slices: int = Field(10, ge=1)
    mask: MaskSpec = MaskSpec(row_width=1, col_width=1, max_rows=2, max_cols=2)
    noise_range: Tuple[float, float] = (0.3, 1.7)
    noise_prob: float = Field(0.1, ge=0, le=1)


class ProtocolPresets(FrozenModel):
    sgn: SgnPreset = SgnPreset()
    ssa: SsaPreset = SsaPreset()
    ssia: SsiaPreset = SsiaPreset()
    tsm: TsmPreset = TsmPreset()
    sspa: SspaPreset = SspaPreset()
    susa: SusaPreset = SusaPreset()


class ProtocolSpec(FrozenModel):
    name: ProtocolName
    copies: int = Field(..., ge=0)
    domain: Literal["none", "signal", "spectrogram"]
    rule: ApplyRule
    transforms: Tuple[str, ...]


class PipelineConfig(FrozenModel):
    schema_version: Literal[1] = 1
    working_rate: int = Field(32000, gt=0)
    representation: RepresentationConfig = RepresentationConfig()
    protocols: Tuple[ProtocolName, ...] = ("noaug",)
    presets: ProtocolPresets = ProtocolPresets()
    seed: int = Field(0, ge=0, lt=2**64)
    out_dir: str = "out"
    export_format: ImageFormat = "pgm"
    workers: int = Field(1, ge=1)
    skip_errors: bool = False
    previews: bool = False

    @field_validator("protocols")
    @classmethod
    def validate_protocols(cls, value):
        if not value:
            raise ValueError("At least one protocol is required")
        if len(set(value)) != len(value):
            raise ValueError("Protocols must not repeat")
        return value


class ProtocolCounts(BaseModel):
    train: int = 0
    test: int = 0


class RunSummary(BaseModel):
    schema_version: int = 1
    seed: int
    representation: RepresentationName
    export_format: ImageFormat
    protocols: List[str]
    folds: Dict[str, Dict[str, ProtocolCounts]]
    files_written: int
    failures: List[str] = []


class FusionMember(BaseModel):
    source_tag: str
    accuracy: float


class FusionResponse(BaseModel):
    members: List[FusionMember]
    normalized: bool
    accuracy: float
    predictions: Dict[str, str]
