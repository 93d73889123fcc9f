"""Pixel-level primitives: grayscale, blur score, perceptual hash, histograms, SSIM, comparators.

All functions are pure and safe to call concurrently on distinct inputs.
"""

import logging
from collections.abc import Sequence
from functools import lru_cache

import cv2
import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy import fft, ndimage

from .models import Frame, GrayImage, PerceptualHash, SamplingParams, SsimParams

logger = logging.getLogger(__name__)

LUMA_WEIGHTS = np.array([0.299, 0.587, 0.114])
HASH_SIZE = 32
HASH_BITS = 64
HISTOGRAM_BINS = 64


def to_grayscale(frame: Frame | np.ndarray) -> GrayImage:
    """ITU-R 601 luma: 0.299 R + 0.587 G + 0.114 B, clamped to [0, 255]."""
    pixels = frame.pixels if isinstance(frame, Frame) else np.asarray(frame)
    if pixels.ndim == 2:
        return GrayImage(pixels.astype(np.float64))
    return GrayImage(pixels[..., :3].astype(np.float64) @ LUMA_WEIGHTS)


def laplacian_variance(g: GrayImage) -> float:
    """Population variance of the 4-neighbour Laplacian response (replicate border).

    Images smaller than 3×3 score 0 by convention.
    """
    if g.height < 3 or g.width < 3:
        return 0.0
    response = ndimage.laplace(g.data, mode="nearest")
    return float(response.var())


def is_blurry(g: GrayImage, threshold: float) -> bool:
    """True iff the Laplacian variance is below ``threshold`` (equal counts as sharp)."""
    return laplacian_variance(g) < threshold


def area_resize(data: np.ndarray, width: int, height: int) -> np.ndarray:
    """Resize a float image with area averaging."""
    return cv2.resize(
        np.ascontiguousarray(data, dtype=np.float64), (width, height), interpolation=cv2.INTER_AREA
    )


@lru_cache(maxsize=8)
def _zigzag(n: int, count: int) -> tuple[np.ndarray, np.ndarray]:
    """Row/column indices of the first ``count`` coefficients in JPEG zigzag order."""
    rows, cols = [], []
    for s in range(2 * n - 1):
        diagonal = [(r, s - r) for r in range(max(0, s - n + 1), min(s, n - 1) + 1)]
        if s % 2 == 0:
            diagonal.reverse()
        for r, c in diagonal:
            rows.append(r)
            cols.append(c)
            if len(rows) == count:
                return np.array(rows), np.array(cols)
    return np.array(rows), np.array(cols)


def phash(g: GrayImage) -> PerceptualHash:
    """64-bit DCT perceptual hash.

    Area-resize to 32×32, 2-D type-II DCT, take the 65 lowest-frequency
    coefficients in zigzag order, drop DC, and set each bit iff its coefficient
    exceeds the median of the 64.
    """
    small = area_resize(g.data, HASH_SIZE, HASH_SIZE)
    coeffs = fft.dctn(small, type=2, norm="ortho")
    rows, cols = _zigzag(HASH_SIZE, HASH_BITS + 1)
    low = coeffs[rows[1:], cols[1:]]
    # Flat images produce float dust instead of exact zeros; round it away.
    low = np.round(low, 6)
    return PerceptualHash(low > np.median(low))


BitsLike = PerceptualHash | str | int | Sequence[int] | np.ndarray


def _natural_width(value: BitsLike) -> int | None:
    """Bit width implied by an integer or ``0x`` string; None for explicit bit sequences."""
    if isinstance(value, str) and value.lower().startswith("0x"):
        return 4 * len(value[2:])
    if isinstance(value, int) and not isinstance(value, bool):
        return max(1, value.bit_length())
    return None


def _int_bits(number: int, width: int) -> np.ndarray:
    if number < 0 or number.bit_length() > width:
        raise ValueError(f"{number} does not fit in {width} bits")
    return np.array([(number >> (width - 1 - i)) & 1 for i in range(width)], dtype=bool)


def _as_bits(value: BitsLike, width: int | None = None) -> np.ndarray:
    if isinstance(value, PerceptualHash):
        return value.bits
    if isinstance(value, str) and value.lower().startswith("0x"):
        try:
            number = int(value[2:], 16)
        except ValueError:
            raise ValueError(f"Not a hex string: {value!r}") from None
        return _int_bits(number, width or 4 * len(value[2:]))
    if isinstance(value, int) and not isinstance(value, bool):
        return _int_bits(value, width or max(1, value.bit_length()))
    if isinstance(value, str):
        text = value[2:] if value.startswith("0b") else value
        if set(text) - {"0", "1"}:
            raise ValueError(f"Not a bitstring: {value!r}")
        return np.array([c == "1" for c in text], dtype=bool)
    return np.asarray(value).astype(bool).ravel()


def hamming_distance(a: BitsLike, b: BitsLike, bits: int | None = None) -> int:
    """Number of differing positions between two equal-length bitstrings.

    Accepts hashes, ``0b``/plain bitstrings, bit sequences, integers and ``0x``
    hex strings. Integers and hex strings are expanded to ``bits`` positions,
    by default the wider of their natural widths (4 per hex digit).
    """
    if bits is None:
        widths = [w for w in (_natural_width(a), _natural_width(b)) if w is not None]
        bits = max(widths) if widths else None
    bits_a, bits_b = _as_bits(a, bits), _as_bits(b, bits)
    if bits_a.size != bits_b.size:
        raise ValueError(f"Bitstring length mismatch: {bits_a.size} vs {bits_b.size}")
    return int(np.count_nonzero(bits_a != bits_b))


def intensity_histogram(g: GrayImage) -> np.ndarray:
    """Normalized 64-bin intensity histogram."""
    counts, _ = np.histogram(g.data, bins=HISTOGRAM_BINS, range=(0.0, 256.0))
    return counts / g.data.size


def histogram_prescreen(a: GrayImage, b: GrayImage, reject_threshold: float = 0.5) -> bool:
    """Fast reject before SSIM: True ("may be similar") iff L1 histogram distance ≤ threshold."""
    distance = float(np.abs(intensity_histogram(a) - intensity_histogram(b)).sum())
    return distance <= reject_threshold


def _check_same_shape(a: GrayImage, b: GrayImage) -> None:
    if a.shape != b.shape:
        raise ValueError(f"Image dimension mismatch: {a.shape} vs {b.shape}")


def _ssim_from_stats(mu_x, mu_y, var_x, var_y, cov_xy, c1: float, c2: float):
    return ((2 * mu_x * mu_y + c1) * (2 * cov_xy + c2)) / (
        (mu_x**2 + mu_y**2 + c1) * (var_x + var_y + c2)
    )


def ssim(a: GrayImage, b: GrayImage, p: SsimParams | None = None) -> float:
    """Global SSIM treating the whole image as one window (population statistics)."""
    p = p or SsimParams()
    _check_same_shape(a, b)
    x, y = a.data, b.data
    mu_x, mu_y = x.mean(), y.mean()
    cov_xy = ((x - mu_x) * (y - mu_y)).mean()
    return float(_ssim_from_stats(mu_x, mu_y, x.var(), y.var(), cov_xy, p.c1, p.c2))


def downsample_gray(g: GrayImage, width: int) -> GrayImage:
    """Area-downsample to ``width`` preserving aspect ratio (never upsamples)."""
    if g.width <= width:
        return g
    height = max(1, round(g.height * width / g.width))
    return GrayImage(area_resize(g.data, width, height))


def window_side(height: int, width: int, p: SsimParams) -> int:
    """Adaptive window: max(p.window, min(H, W) // 8), never larger than the image."""
    return min(max(p.window, min(height, width) // 8), height, width)


def _window_starts(length: int, side: int, stride: int) -> np.ndarray:
    starts = list(range(0, length - side + 1, stride))
    if starts[-1] != length - side:
        starts.append(length - side)
    return np.array(starts)


def min_window_ssim(a: GrayImage, b: GrayImage, p: SsimParams | None = None) -> float:
    """Minimum SSIM over overlapping adaptive windows after downsampling both images."""
    p = p or SsimParams()
    a = downsample_gray(a, p.downsample_width)
    b = downsample_gray(b, p.downsample_width)
    _check_same_shape(a, b)

    side = window_side(a.height, a.width, p)
    stride = max(1, int(round(side * (1.0 - p.overlap_frac))))
    ys = _window_starts(a.height, side, stride)
    xs = _window_starts(a.width, side, stride)

    wx = sliding_window_view(a.data, (side, side))[np.ix_(ys, xs)]
    wy = sliding_window_view(b.data, (side, side))[np.ix_(ys, xs)]
    mu_x = wx.mean(axis=(-2, -1))
    mu_y = wy.mean(axis=(-2, -1))
    var_x = wx.var(axis=(-2, -1))
    var_y = wy.var(axis=(-2, -1))
    cov_xy = (
        (wx - mu_x[..., None, None]) * (wy - mu_y[..., None, None])
    ).mean(axis=(-2, -1))
    scores = _ssim_from_stats(mu_x, mu_y, var_x, var_y, cov_xy, p.c1, p.c2)
    return float(scores.min())


def l1_distance(a: GrayImage, b: GrayImage) -> float:
    """Mean absolute intensity difference."""
    _check_same_shape(a, b)
    return float(np.abs(a.data - b.data).mean())


def hybrid_similar(
    prev: Frame,
    cur: Frame,
    p: SamplingParams,
    sp: SsimParams | None = None,
) -> bool:
    """Comparator dispatch for keyframe selection.

    phash_ssim: pHash gate, histogram prescreen, then windowed-SSIM confirm.
    l1: mean absolute difference only. phash_l1: pHash gate then L1 confirm.
    Frames of different sizes are never similar.
    """
    sp = sp or SsimParams()
    ga, gb = to_grayscale(prev), to_grayscale(cur)
    if ga.shape != gb.shape:
        logger.debug(f"Frames {prev.index}/{cur.index} differ in size; treating as dissimilar")
        return False

    if p.comparator == "l1":
        distance = l1_distance(ga, gb)
        logger.debug(f"l1({prev.index}, {cur.index}) = {distance:.2f}")
        return distance <= p.l1_threshold

    bits = phash(ga) - phash(gb)
    logger.debug(f"phash distance({prev.index}, {cur.index}) = {bits}")
    if bits > p.phash_threshold:
        return False

    if p.comparator == "phash_l1":
        return l1_distance(ga, gb) <= p.l1_threshold

    if not histogram_prescreen(ga, gb, p.histogram_reject):
        logger.debug(f"histogram prescreen rejected ({prev.index}, {cur.index})")
        return False
    score = min_window_ssim(ga, gb, sp)
    logger.debug(f"min window ssim({prev.index}, {cur.index}) = {score:.4f}")
    return score >= p.ssim_threshold
