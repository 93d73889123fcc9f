"""Frame ingestion: frame directories, external video decoding, sampling and resizing."""

import logging
import math
import re
import shlex
import subprocess
import tempfile
from pathlib import Path

import cv2
import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import ConfigError, IngestError
from .models import Frame

logger = logging.getLogger(__name__)

FRAME_SUFFIXES = (".png", ".jpg", ".jpeg")
MIN_TARGET_WIDTH = 16

_NUMBER = re.compile(r"(\d+)")


def load_frames(
    source: str | Path,
    kind: str = "frame_dir",
    fps: float = 30.0,
    decoder_cmd: str | None = None,
) -> list[Frame]:
    """Load a frame sequence from disk.

    Args:
        source: Frame directory or video file
        kind: "frame_dir" or "video_file"
        fps: Frame rate used to synthesize timestamps (index / fps)
        decoder_cmd: External decoder command for video input. ``{input}``,
            ``{output}`` and ``{fps}`` are substituted; it must write
            ``frame_%06d.png`` files into ``{output}``.

    Returns:
        Frames in source order with indices 0..N-1

    Raises:
        IngestError: Missing path, empty directory or undecodable image
        ConfigError: Video input without a configured decoder
    """
    path = Path(source)
    if not path.exists():
        raise IngestError(f"Source not found: {source}")

    if kind == "frame_dir":
        if not path.is_dir():
            raise IngestError(f"Frame source must be a directory: {source}")
        return _load_frame_dir(path, fps)
    if kind == "video_file":
        if not decoder_cmd:
            raise ConfigError(
                "Video input requires an external decoder; set decoder_cmd in [ingest] "
                "or FCMIR_DECODER_CMD"
            )
        return _decode_video(path, fps, decoder_cmd)
    raise ConfigError(f"Unknown source kind '{kind}', expected frame_dir or video_file")


def _frame_sort_key(path: Path) -> tuple[int, str]:
    """Sort by the last number in the stem, then by name for stability."""
    numbers = _NUMBER.findall(path.stem)
    return (int(numbers[-1]) if numbers else -1, path.name)


def _load_frame_dir(directory: Path, fps: float) -> list[Frame]:
    paths = sorted(
        (p for p in directory.iterdir() if p.is_file() and p.suffix.lower() in FRAME_SUFFIXES),
        key=_frame_sort_key,
    )
    if not paths:
        raise IngestError(f"no frames in {directory}")

    frames = []
    for index, frame_path in enumerate(paths):
        try:
            with Image.open(frame_path) as img:
                pixels = np.asarray(img.convert("RGB"))
        except (UnidentifiedImageError, OSError) as e:
            raise IngestError(f"Failed to decode {frame_path}: {e}") from e
        frames.append(
            Frame(
                index=index,
                timestamp_s=index / fps,
                pixels=pixels,
                source_path=str(frame_path),
            )
        )

    logger.info(f"Loaded {len(frames)} frames from {directory}")
    return frames


def _decode_video(video: Path, fps: float, decoder_cmd: str) -> list[Frame]:
    with tempfile.TemporaryDirectory(prefix="fcmir-decode-") as tmp:
        cmd = [
            part.format(input=str(video), output=tmp, fps=fps)
            for part in shlex.split(decoder_cmd)
        ]
        logger.info(f"Decoding {video.name} with {cmd[0]}")
        try:
            result = subprocess.run(cmd, capture_output=True, text=True, check=False)
        except FileNotFoundError as e:
            raise ConfigError(f"Decoder not found: {cmd[0]}") from e
        if result.returncode != 0:
            raise IngestError(
                f"Decoder exited with {result.returncode} for {video}: {result.stderr.strip()}"
            )
        frames = _load_frame_dir(Path(tmp), fps)
        # Decoded files live in a temp dir; keep the video as provenance instead.
        for frame in frames:
            frame.source_path = str(video)
        return frames


def sample_indices(fps: float, interval_s: float, total: int) -> list[int]:
    """Indices visited by interval sampling.

    skip = floor(fps · Δt), clamped to at least 1; returns every i in [0, total)
    with i mod skip = 0.
    """
    if fps <= 0:
        raise ValueError(f"fps must be > 0, got {fps}")
    if interval_s <= 0:
        raise ValueError(f"interval_s must be > 0, got {interval_s}")
    # Absorb float error so that e.g. 0.29 * 100 floors to 29, not 28.
    skip = max(1, math.floor(fps * interval_s + 1e-9))
    return list(range(0, max(total, 0), skip))


def resize_pixels_to_width(pixels: np.ndarray, target_w: int) -> np.ndarray:
    """Downscale an H×W(×C) array to ``target_w`` with area averaging; never upscales."""
    if target_w < MIN_TARGET_WIDTH:
        raise ValueError(f"target width must be >= {MIN_TARGET_WIDTH}, got {target_w}")
    height, width = pixels.shape[:2]
    if width <= target_w:
        return pixels
    target_h = max(1, round(height * target_w / width))
    return cv2.resize(pixels, (target_w, target_h), interpolation=cv2.INTER_AREA)


def resize_to_width(frame: Frame, target_w: int) -> Frame:
    """Downscale a frame to ``target_w`` preserving aspect ratio.

    Frames already at most ``target_w`` wide are returned unchanged.
    """
    resized = resize_pixels_to_width(frame.pixels, target_w)
    if resized is frame.pixels:
        return frame
    return Frame(
        index=frame.index,
        timestamp_s=frame.timestamp_s,
        pixels=resized,
        source_path=frame.source_path,
    )


def save_png(pixels: np.ndarray, path: str | Path) -> None:
    """Write an RGB array as lossless PNG, creating parent directories."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(np.ascontiguousarray(pixels, dtype=np.uint8)).save(path, format="PNG")
