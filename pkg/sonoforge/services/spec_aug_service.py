"""Spectrogram-image augmentations and the SSpA and SuSA generators.

Every transform maps an 8-bit image to an image of the same size; arithmetic
results are rounded and clamped back to [0, 255]. Row 0 is the lowest
frequency band.
"""

import logging
from typing import List, Optional, Sequence

import numpy as np

from sonoforge.domain.entities import GrayImage, RngStream
from sonoforge.domain.exceptions import ValidationError
from sonoforge.domain.models import MaskSpec, SspaPreset, SusaPreset, VtlnParams
from sonoforge.services.rng_service import fork, rng_integer, rng_uniform, spawn_generator

logger = logging.getLogger(__name__)

SSPA_COPIES = 5
SUSA_COPIES = 29


def _to_pixels(values: np.ndarray) -> GrayImage:
    return GrayImage(pixels=np.clip(np.round(values), 0, 255).astype(np.uint8))


def spec_pitch_time_shift(img: GrayImage, row_shift: int, col_shift: int) -> GrayImage:
    """Rows move up by row_shift with zero fill; columns rotate right by col_shift."""
    rows, cols = img.shape
    if abs(row_shift) >= rows:
        raise ValidationError(f"Row shift {row_shift} out of range for {rows} rows")
    if abs(col_shift) > cols:
        raise ValidationError(f"Column shift {col_shift} out of range for {cols} columns")

    shifted = np.zeros_like(img.pixels)
    if row_shift >= 0:
        shifted[row_shift:] = img.pixels[: rows - row_shift]
    else:
        shifted[:row_shift] = img.pixels[-row_shift:]
    return GrayImage(pixels=np.roll(shifted, col_shift, axis=1))


def vtln_bounds(img: GrayImage, p: VtlnParams):
    fmax = p.fmax if p.fmax is not None else img.shape[0] - 1
    f0 = p.f0 if p.f0 is not None else int(round(0.6 * fmax))
    if not 0 < f0 < fmax:
        raise ValidationError(f"VTLN needs 0 < f0 < fmax, got f0={f0}, fmax={fmax}")
    return f0, fmax


def vtln_map(f, alpha: float, f0: float, fmax: float):
    """Piecewise-linear warp G with G(0) = 0, G(f0) = alpha f0 and G(fmax) = fmax."""
    freqs = np.asarray(f, dtype=np.float64)
    upper_slope = (fmax - alpha * f0) / (fmax - f0)
    return np.where(freqs < f0, alpha * freqs, fmax - upper_slope * (fmax - freqs))


def _warp_rows(block: np.ndarray, alpha: float, f0: int, fmax: int) -> np.ndarray:
    """Output row G(f) takes the value of input row f, linear between integer rows."""
    rows = block.shape[0]
    grid = np.arange(rows, dtype=np.float64)
    source = np.interp(grid, vtln_map(grid, alpha, f0, fmax), grid)
    lower = np.floor(source).astype(np.int64)
    upper = np.minimum(lower + 1, rows - 1)
    frac = (source - lower)[:, None]
    return block[lower] * (1.0 - frac) + block[upper] * frac


def vtln_warp(
    img: GrayImage,
    p: VtlnParams = VtlnParams(),
    n_slices: int = 10,
    rng: Optional[RngStream] = None,
    alphas: Optional[Sequence[float]] = None,
) -> GrayImage:
    """
    Warp the frequency axis slice by slice.

    The image is cut into n_slices time slices. Each slice gets its own
    alpha: taken from `alphas` when given, drawn uniformly from [a, b] when
    an rng is given, otherwise p.alpha.
    """
    rows, cols = img.shape
    if cols < n_slices or n_slices < 1:
        raise ValidationError(f"Image with {cols} columns cannot be cut into {n_slices} slices")
    f0, fmax = vtln_bounds(img, p)

    if alphas is None:
        alphas = []
        stream = rng
        for _ in range(n_slices):
            if stream is None:
                alphas.append(p.alpha)
            else:
                value, stream = rng_uniform(stream, p.a, p.b)
                alphas.append(value)
    if len(alphas) != n_slices:
        raise ValidationError(f"Expected {n_slices} warp factors, got {len(alphas)}")
    if any(not alpha * f0 < fmax for alpha in alphas):
        raise ValidationError(f"VTLN needs alpha * f0 < fmax, got f0={f0}, fmax={fmax}")

    source = img.pixels.astype(np.float64)
    slices = np.array_split(np.arange(cols), n_slices)
    out = np.empty_like(source)
    for columns, alpha in zip(slices, alphas):
        out[:, columns] = _warp_rows(source[:, columns], alpha, f0, fmax)
    return _to_pixels(out)


def spec_circular_time_shift(
    img: GrayImage, T: Optional[int] = None, rng: Optional[RngStream] = None
) -> GrayImage:
    """Columns T..M followed by columns 1..T-1 (1-based); T is drawn from rng when omitted."""
    cols = img.shape[1]
    if T is None:
        if rng is None:
            raise ValidationError("Either a shift T or an rng is required")
        T, _ = rng_integer(rng, 1, cols)
    if not 1 <= T <= cols:
        raise ValidationError(f"Shift T={T} outside [1, {cols}]")
    return GrayImage(pixels=np.roll(img.pixels, -(T - 1), axis=1))


def _mask_bands(
    pixels: np.ndarray, starts: Sequence[int], width: int, axis: int
) -> np.ndarray:
    for start in starts:
        if axis == 0:
            pixels[start : start + width, :] = 0
        else:
            pixels[:, start : start + width] = 0
    return pixels


def tps_warp_mask(
    img: GrayImage,
    n_anchors: int,
    max_disp: float,
    mask: MaskSpec,
    rng: RngStream,
) -> GrayImage:
    """
    Horizontal-only anchor warp followed by a frequency-time mask.

    Interior anchor columns move by up to max_disp pixels; every other column
    is interpolated linearly between anchors. Then mask.max_rows row bands of
    mask.row_width and mask.max_cols column bands of mask.col_width are zeroed.
    """
    rows, cols = img.shape
    if mask.row_width >= rows or mask.col_width >= cols:
        raise ValidationError(
            f"Mask bands {mask.row_width}x{mask.col_width} do not fit a {rows}x{cols} image"
        )
    if n_anchors < 2:
        raise ValidationError("TPS warp needs at least two anchors")

    anchors = np.linspace(0, cols - 1, n_anchors)
    # keep displaced anchors ordered
    limit = min(float(max_disp), (anchors[1] - anchors[0]) / 2.0 - 0.5) if n_anchors > 1 else 0.0

    warp_stream = fork(rng, 0)
    pixels = img.pixels.astype(np.float64)
    if limit > 0:
        displacement = np.zeros(n_anchors)
        for i in range(1, n_anchors - 1):
            displacement[i], warp_stream = rng_uniform(warp_stream, -limit, limit)
        grid = np.arange(cols, dtype=np.float64)
        source = np.interp(grid, anchors + displacement, anchors)
        left = np.floor(source).astype(np.int64)
        right = np.minimum(left + 1, cols - 1)
        frac = (source - left)[None, :]
        pixels = pixels[:, left] * (1.0 - frac) + pixels[:, right] * frac

    warped = np.clip(np.round(pixels), 0, 255).astype(np.uint8)

    mask_stream = fork(rng, 1)
    row_starts = []
    for _ in range(mask.max_rows):
        start, mask_stream = rng_integer(mask_stream, 0, rows - mask.row_width)
        row_starts.append(start)
    col_starts = []
    for _ in range(mask.max_cols):
        start, mask_stream = rng_integer(mask_stream, 0, cols - mask.col_width)
        col_starts.append(start)

    warped = _mask_bands(warped, row_starts, mask.row_width, axis=0)
    warped = _mask_bands(warped, col_starts, mask.col_width, axis=1)
    return GrayImage(pixels=warped)


def freq_time_mask(img: GrayImage, mask: MaskSpec, rng: RngStream) -> GrayImage:
    """Zero 0..max_rows random rows and 0..max_cols random columns (bands of mask widths)."""
    rows, cols = img.shape
    n_rows, stream = rng_integer(rng, 0, mask.max_rows)
    n_cols, stream = rng_integer(stream, 0, mask.max_cols)

    generator = spawn_generator(stream)
    row_starts = generator.choice(rows, size=min(n_rows, rows), replace=False)
    col_starts = generator.choice(cols, size=min(n_cols, cols), replace=False)

    pixels = np.array(img.pixels)
    pixels = _mask_bands(pixels, row_starts, mask.row_width, axis=0)
    pixels = _mask_bands(pixels, col_starts, mask.col_width, axis=1)
    return GrayImage(pixels=pixels)


def mult_noise(img: GrayImage, lo: float, hi: float, prob: float, rng: RngStream) -> GrayImage:
    """Each pixel is multiplied, with probability prob, by u ~ U[lo, hi]."""
    if lo > hi:
        raise ValidationError(f"Noise range lower bound {lo} exceeds upper bound {hi}")
    if not 0.0 <= prob <= 1.0:
        raise ValidationError(f"Noise probability must be in [0, 1], got {prob}")

    generator = spawn_generator(rng)
    selected = generator.random(img.shape) < prob
    factors = generator.uniform(lo, hi, img.shape)
    pixels = img.pixels.astype(np.float64)
    noisy = np.clip(np.round(pixels * factors), 0, 255)
    return GrayImage(pixels=np.where(selected, noisy, pixels).astype(np.uint8))


# --- Protocols -------------------------------------------------------------------


def _random_shifts(img: GrayImage, preset: SspaPreset, rng: RngStream) -> GrayImage:
    rows, cols = img.shape
    max_rows = min(rows - 1, max(1, int(preset.max_row_shift_ratio * rows)))
    row_shift, stream = rng_integer(rng, -max_rows, max_rows)
    col_shift, _ = rng_integer(stream, 0, cols - 1)
    return spec_pitch_time_shift(img, row_shift, col_shift)


def augment_sspa(
    img: GrayImage, rng: RngStream, preset: SspaPreset = SspaPreset()
) -> List[GrayImage]:
    cols = img.shape[1]
    return [
        _random_shifts(img, preset, fork(rng, 0)),
        vtln_warp(img, preset.vtln, preset.n_slices, rng=fork(rng, 1)),
        spec_circular_time_shift(img, rng=fork(rng, 2)),
        tps_warp_mask(
            img, preset.n_anchors, round(preset.max_disp_ratio * cols), preset.mask, fork(rng, 3)
        ),
        mult_noise(img, *preset.noise_range, preset.noise_prob, fork(rng, 4)),
    ]


def augment_susa(
    img: GrayImage, rng: RngStream, preset: SusaPreset = SusaPreset(), copies: int = SUSA_COPIES
) -> List[GrayImage]:
    """Every copy chains pitch shift, VTLN, circular shift, masking and noise."""
    outputs = []
    for copy in range(copies):
        stream = fork(rng, copy)
        shift, _ = rng_uniform(fork(stream, 0), *preset.row_shift_range)
        row_shift = max(-(img.shape[0] - 1), min(img.shape[0] - 1, int(round(shift))))

        augmented = spec_pitch_time_shift(img, row_shift, 0)
        augmented = vtln_warp(augmented, preset.vtln, preset.n_slices, rng=fork(stream, 1))
        augmented = spec_circular_time_shift(augmented, rng=fork(stream, 2))
        augmented = freq_time_mask(augmented, preset.mask, fork(stream, 3))
        augmented = mult_noise(augmented, *preset.noise_range, preset.noise_prob, fork(stream, 4))
        outputs.append(augmented)
    return outputs
