"""Synthetic scrolling UI sequences with known ground truth.

Pages are tall seeded layouts of rectangles, ellipses, line segments and
pseudo-text bands over a noisy background, so every viewport is sharp and rich
in corners. Sequences place a fixed status bar and navigation bar around a page
window; corruption inserts exact duplicates and box-blurred copies.

Synthetic frames are spaced 1/SYNTH_FPS seconds apart, so sampling them with
``fps=SYNTH_FPS, interval_s=1/SYNTH_FPS`` visits every frame.
"""

import json
import logging
from collections.abc import Sequence
from dataclasses import dataclass, replace
from pathlib import Path

import cv2
import numpy as np
from PIL import Image, ImageDraw

from .imgproc import is_blurry, to_grayscale
from .ingest import save_png
from .models import Frame, SyntheticTruth

logger = logging.getLogger(__name__)

SYNTH_FPS = 2.0
NOISE_STD = 6.0
DEFAULT_VIEWPORT = (360, 640)
DEFAULT_BARS = (48, 96)
MAX_BLUR_RADIUS = 64


@dataclass
class PageSpec:
    """Parameters of a synthetic page.

    Attributes:
        height: Page height in pixels (at least twice ``viewport_height``)
        width: Page width in pixels
        texture_density: Relative number of drawn elements; 0 gives a flat page
        seed: RNG seed
        viewport_height: Height of the viewport the page will be scrolled under
    """

    height: int
    width: int = DEFAULT_VIEWPORT[0]
    texture_density: float = 1.0
    seed: int = 0
    viewport_height: int = DEFAULT_VIEWPORT[1]


def _color(rng: np.random.Generator, low: int, high: int) -> tuple[int, int, int]:
    return tuple(int(v) for v in rng.integers(low, high, 3))


def _text_band(
    draw: ImageDraw.ImageDraw, rng: np.random.Generator, x0: int, y0: int, width: int, lines: int
) -> None:
    """Rows of word-like blocks separated by gaps."""
    ink = _color(rng, 0, 90)
    for line in range(lines):
        y = y0 + line * 14
        x = x0
        while x < x0 + width:
            word = int(rng.integers(4, 22))
            draw.rectangle([x, y, x + word, y + int(rng.integers(6, 10))], fill=ink)
            x += word + int(rng.integers(3, 9))


def generate_page(spec: PageSpec) -> np.ndarray:
    """Seeded H×W×3 page; identical specs give identical pixels.

    Raises:
        ValueError: Degenerate dimensions or height below twice the viewport
    """
    if spec.width < 32 or spec.viewport_height < 32:
        raise ValueError(f"Page too narrow or viewport too short: {spec}")
    if spec.height < 2 * spec.viewport_height:
        raise ValueError(
            f"Page height {spec.height} must be >= 2 × viewport height {spec.viewport_height}"
        )
    if spec.texture_density < 0:
        raise ValueError(f"texture_density must be >= 0, got {spec.texture_density}")

    rng = np.random.default_rng(spec.seed)
    w, h = spec.width, spec.height
    img = Image.new("RGB", (w, h), _color(rng, 225, 250))
    draw = ImageDraw.Draw(img)

    count = int(round(spec.texture_density * w * h / 5000))
    for _ in range(count):
        kind = int(rng.integers(0, 4))
        x0, y0 = int(rng.integers(0, w)), int(rng.integers(0, h))
        bw, bh = int(rng.integers(12, max(13, w // 3))), int(rng.integers(8, 80))
        color = _color(rng, 0, 200)
        if kind == 0:
            draw.rectangle([x0, y0, x0 + bw, y0 + bh], fill=color)
        elif kind == 1:
            draw.ellipse([x0, y0, x0 + bw, y0 + bh], fill=color, outline=_color(rng, 0, 60))
        elif kind == 2:
            x1, y1 = int(rng.integers(0, w)), y0 + int(rng.integers(-60, 60))
            draw.line([x0, y0, x1, y1], fill=color, width=int(rng.integers(2, 5)))
        else:
            _text_band(draw, rng, x0, y0, bw, int(rng.integers(1, 4)))

    pixels = np.asarray(img, dtype=np.float64)
    if spec.texture_density > 0:
        pixels = pixels + rng.normal(0.0, NOISE_STD, pixels.shape)
    return np.clip(np.rint(pixels), 0, 255).astype(np.uint8)


def _bar(width: int, height: int, rng: np.random.Generator, dark: bool) -> np.ndarray:
    """Status/navigation bar: flat fill, a row of icons, light noise."""
    base = _color(rng, 20, 70) if dark else _color(rng, 190, 230)
    img = Image.new("RGB", (width, height), base)
    draw = ImageDraw.Draw(img)
    icon = max(6, height // 3)
    x = icon // 2
    while x + icon < width:
        y = (height - icon) // 2
        fill = _color(rng, 150, 255) if dark else _color(rng, 0, 110)
        if rng.random() < 0.5:
            draw.rectangle([x, y, x + icon, y + icon], fill=fill)
        else:
            draw.ellipse([x, y, x + icon, y + icon], fill=fill)
        x += icon + int(rng.integers(icon // 2, 3 * icon))
    pixels = np.asarray(img, dtype=np.float64) + rng.normal(0.0, NOISE_STD, (height, width, 3))
    return np.clip(np.rint(pixels), 0, 255).astype(np.uint8)


def _screen_ids(offsets: Sequence[int]) -> list[int]:
    ids: dict[int, int] = {}
    return [ids.setdefault(o, len(ids)) for o in offsets]


def render_sequence(
    page: np.ndarray,
    viewport: tuple[int, int],
    offsets: Sequence[int],
    h_top: int = DEFAULT_BARS[0],
    h_bot: int = DEFAULT_BARS[1],
    seed: int = 0,
) -> tuple[list[Frame], SyntheticTruth]:
    """Render one frame per offset: top bar, page window at the offset, bottom bar.

    Raises:
        ValueError: Width mismatch, bars filling the viewport, or an offset out of range
    """
    width, height = viewport
    if page.shape[1] != width:
        raise ValueError(f"Page width {page.shape[1]} does not match viewport width {width}")
    content_h = height - h_top - h_bot
    if h_top < 0 or h_bot < 0 or content_h < 1:
        raise ValueError(f"Bars {h_top}+{h_bot} leave no content in viewport height {height}")
    for offset in offsets:
        if not 0 <= offset <= page.shape[0] - content_h:
            raise ValueError(
                f"Offset {offset} outside [0, {page.shape[0] - content_h}] for page height "
                f"{page.shape[0]}"
            )

    rng = np.random.default_rng(seed)
    top = _bar(width, h_top, rng, dark=True) if h_top else np.zeros((0, width, 3), np.uint8)
    bot = _bar(width, h_bot, rng, dark=False) if h_bot else np.zeros((0, width, 3), np.uint8)

    frames = [
        Frame(
            index=i,
            timestamp_s=i / SYNTH_FPS,
            pixels=np.vstack([top, page[offset : offset + content_h], bot]),
        )
        for i, offset in enumerate(offsets)
    ]
    ids = _screen_ids(offsets)
    truth = SyntheticTruth(
        page=page,
        viewport=(width, height),
        scroll_offsets=list(offsets),
        h_top=h_top,
        h_bot=h_bot,
        distinct_screens=len(set(ids)),
        screen_ids=ids,
    )
    return frames, truth


def blur_until(pixels: np.ndarray, threshold: float = 100.0) -> np.ndarray:
    """Box-blur with a growing radius until the result is blurry at ``threshold``."""
    radius = 2
    while radius <= MAX_BLUR_RADIUS:
        blurred = cv2.blur(pixels, (2 * radius + 1, 2 * radius + 1))
        if is_blurry(to_grayscale(blurred), threshold):
            logger.debug(f"Blur radius {radius} reached threshold {threshold}")
            return blurred
        radius *= 2
    raise ValueError(f"Could not blur below threshold {threshold} with radius {MAX_BLUR_RADIUS}")


def corrupt_sequence(
    frames: Sequence[Frame],
    truth: SyntheticTruth,
    dup_count: int,
    blur_count: int,
    seed: int = 0,
    blur_threshold: float = 100.0,
) -> tuple[list[Frame], SyntheticTruth]:
    """Insert exact duplicates before and blurred copies after randomly chosen anchors.

    Each original frame receives at most one duplicate and one blurred copy, so the
    last frame of every run of identical frames is the original.

    Raises:
        ValueError: More insertions requested than frames available
    """
    n = len(frames)
    if not 0 <= dup_count <= n or not 0 <= blur_count <= n:
        raise ValueError(
            f"dup_count={dup_count} and blur_count={blur_count} must be within [0, {n}]"
        )
    rng = np.random.default_rng(seed)
    dup_anchors = set(rng.choice(n, size=dup_count, replace=False).tolist())
    blur_anchors = set(rng.choice(n, size=blur_count, replace=False).tolist())

    pixels: list[np.ndarray] = []
    offsets: list[int] = []
    ids: list[int] = []
    duplicate_map: dict[int, int] = {}
    blur_indices: list[int] = []

    for i, frame in enumerate(frames):
        offset, screen = truth.scroll_offsets[i], truth.screen_ids[i]
        if i in dup_anchors:
            duplicate_map[len(pixels)] = offset
            pixels.append(frame.pixels.copy())
            offsets.append(offset)
            ids.append(screen)
        pixels.append(frame.pixels)
        offsets.append(offset)
        ids.append(screen)
        if i in blur_anchors:
            blur_indices.append(len(pixels))
            pixels.append(blur_until(frame.pixels, blur_threshold))
            offsets.append(offset)
            ids.append(screen)

    corrupted = [
        Frame(index=i, timestamp_s=i / SYNTH_FPS, pixels=p) for i, p in enumerate(pixels)
    ]
    new_truth = replace(
        truth,
        scroll_offsets=offsets,
        duplicate_map=duplicate_map,
        blur_indices=blur_indices,
        screen_ids=ids,
    )
    return corrupted, new_truth


def _page_for(
    offsets: Sequence[int], viewport: tuple[int, int], content_h: int, seed: int
) -> np.ndarray:
    height = max(2 * viewport[1], max(offsets) + content_h)
    return generate_page(
        PageSpec(height=height, width=viewport[0], seed=seed, viewport_height=viewport[1])
    )


def build_keyframe_corpus(
    n: int,
    seed: int = 0,
    viewport: tuple[int, int] = DEFAULT_VIEWPORT,
    screens: tuple[int, int] = (4, 7),
) -> list[tuple[list[Frame], SyntheticTruth]]:
    """Trajectories of distinct screens with one duplicate per screen and blur on half.

    Consecutive screens overlap by at most 40% of the content height, so each one
    is a distinct screen for keyframe selection.
    """
    rng = np.random.default_rng(seed)
    h_top, h_bot = DEFAULT_BARS
    content_h = viewport[1] - h_top - h_bot
    corpus = []
    for t in range(n):
        count = int(rng.integers(screens[0], screens[1] + 1))
        steps = rng.integers(int(0.6 * content_h), content_h + 1, size=count - 1)
        offsets = [0, *np.cumsum(steps).tolist()]
        page = _page_for(offsets, viewport, content_h, seed=seed * 1000 + t)
        frames, truth = render_sequence(page, viewport, offsets, h_top, h_bot, seed=seed + t)
        corpus.append(
            corrupt_sequence(
                frames, truth, dup_count=count, blur_count=count // 2, seed=seed * 1000 + t
            )
        )
    logger.info(f"Built keyframe corpus of {n} trajectories")
    return corpus


def build_scroll_corpus(
    n: int,
    seed: int = 0,
    viewport: tuple[int, int] = DEFAULT_VIEWPORT,
    frames_per_sequence: int = 5,
) -> list[tuple[list[Frame], SyntheticTruth]]:
    """Clean scroll sequences with 40-65% content overlap between neighbours."""
    rng = np.random.default_rng(seed)
    h_top, h_bot = DEFAULT_BARS
    content_h = viewport[1] - h_top - h_bot
    corpus = []
    for t in range(n):
        low, high = int(0.35 * content_h), int(0.6 * content_h)
        steps = rng.integers(low, high + 1, size=frames_per_sequence - 1)
        offsets = [0, *np.cumsum(steps).tolist()]
        page = _page_for(offsets, viewport, content_h, seed=seed * 1000 + 500 + t)
        corpus.append(render_sequence(page, viewport, offsets, h_top, h_bot, seed=seed + t))
    logger.info(f"Built scroll corpus of {n} sequences")
    return corpus


def write_corpus(
    corpus: Sequence[tuple[Sequence[Frame], SyntheticTruth]],
    out_dir: str | Path,
    prefix: str = "traj",
) -> list[Path]:
    """Write ``<prefix>_NNN/frames/frame_NNNNNN.png``, ``page.png`` and ``truth.json``."""
    out = Path(out_dir)
    written = []
    for i, (frames, truth) in enumerate(corpus):
        root = out / f"{prefix}_{i:03d}"
        for frame in frames:
            save_png(frame.pixels, root / "frames" / f"frame_{frame.index:06d}.png")
        save_png(truth.page, root / "page.png")
        (root / "truth.json").write_text(
            json.dumps(truth.to_dict(), sort_keys=True, indent=2) + "\n",
            encoding="utf-8",
            newline="\n",
        )
        written.append(root)
    logger.info(f"Wrote {len(written)} sequences to {out}")
    return written


def read_truth(path: str | Path) -> dict:
    """Load a ``truth.json`` written by :func:`write_corpus`."""
    return json.loads(Path(path).read_text(encoding="utf-8"))
