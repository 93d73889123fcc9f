"""Similarity-based keyframe selection and compression accounting."""

import logging
from collections.abc import Sequence
from pathlib import Path

from .imgproc import hybrid_similar, laplacian_variance, to_grayscale
from .ingest import sample_indices, save_png
from .models import (
    Frame,
    KeyframeManifest,
    RetainedFrame,
    SamplingParams,
    SsimParams,
    StitchedImage,
    StitchParams,
)
from .stitch import stitch_batch

logger = logging.getLogger(__name__)

MODALITIES = ("uniform", "last_frame", "keyframes", "keyframes_stitched")


def select_keyframes(
    frames: Sequence[Frame],
    params: SamplingParams,
    ssim_params: SsimParams | None = None,
    source_id: str = "",
) -> KeyframeManifest:
    """Select keyframes from an ordered frame sequence.

    Frames are visited every ``skip`` positions. Blurry frames are dropped.
    Consecutive similar clear frames accumulate in a batch; when a dissimilar
    frame arrives the batch's last frame is retained and a new batch starts.
    The trailing batch is flushed at the end.

    With ``compare_against="last_sampled"`` the reference for similarity is the
    previously sampled frame even when it was blurry; ``"last_retained"`` only
    ever compares against the newest frame of the current batch.

    Raises:
        ValueError: If ``frames`` is empty
    """
    if not frames:
        raise ValueError("select_keyframes requires at least one frame")
    ssim_params = ssim_params or SsimParams()

    positions = sample_indices(params.fps, params.interval_s, len(frames))
    sampled = [frames[pos] for pos in positions]

    retained: list[Frame] = []
    blurry: list[int] = []
    batch: list[Frame] = []
    prev: Frame | None = None

    for frame in sampled:
        score = laplacian_variance(to_grayscale(frame))
        if score < params.blur_threshold:
            logger.debug(f"Frame {frame.index} blurry (variance {score:.1f})")
            blurry.append(frame.index)
        elif prev is None:
            batch = [frame]
        elif hybrid_similar(prev, frame, params, ssim_params):
            batch.append(frame)
        else:
            if batch:
                retained.append(batch[-1])
            batch = [frame]

        if params.compare_against == "last_sampled":
            prev = frame
        elif batch:
            prev = batch[-1]

    if batch:
        retained.append(batch[-1])

    manifest = KeyframeManifest(
        source_id=source_id,
        params=params,
        sampled_indices=[f.index for f in sampled],
        retained=[RetainedFrame(index=f.index) for f in retained],
        blurry_indices=blurry,
    )
    if sampled:
        frame_pct, pixel_pct = compression_stats(sampled, retained)
        manifest.frame_compression_pct = frame_pct
        manifest.pixel_compression_pct = pixel_pct

    logger.info(
        f"Selected {len(retained)} of {len(sampled)} sampled frames "
        f"({manifest.frame_compression_pct:.1f}% frame compression)"
    )
    return manifest


def compression_stats(
    sampled: Sequence[Frame], retained: Sequence[Frame | StitchedImage]
) -> tuple[float, float]:
    """Percentage of sampled frames and of sampled pixel area that was removed.

    ``retained`` may be keyframes or stitched images; areas are taken as-is.

    Raises:
        ValueError: If nothing was sampled
    """
    if not sampled:
        raise ValueError("compression_stats requires at least one sampled frame")
    sampled_area = sum(f.area for f in sampled)
    retained_area = sum(r.area for r in retained)
    frame_pct = (1.0 - len(retained) / len(sampled)) * 100.0
    pixel_pct = (1.0 - retained_area / sampled_area) * 100.0
    return _clamp_pct(frame_pct), _clamp_pct(pixel_pct)


def _clamp_pct(value: float) -> float:
    return min(100.0, max(0.0, value))


def retained_frames(manifest: KeyframeManifest, frames: Sequence[Frame]) -> list[Frame]:
    """The frames referenced by ``manifest.retained``, in retained order."""
    by_index = {f.index: f for f in frames}
    missing = [i for i in manifest.retained_indices if i not in by_index]
    if missing:
        raise ValueError(f"Retained indices not present in frames: {missing}")
    return [by_index[i] for i in manifest.retained_indices]


def write_keyframes(
    manifest: KeyframeManifest,
    frames: Sequence[Frame],
    root: str | Path,
    subdir: str = "keyframes",
) -> KeyframeManifest:
    """Write retained frames as PNG under ``root/subdir`` and record relative paths."""
    root = Path(root)
    for entry, frame in zip(manifest.retained, retained_frames(manifest, frames)):
        relative = Path(subdir) / f"frame_{frame.index:06d}.png"
        save_png(frame.pixels, root / relative)
        entry.path = relative.as_posix()
    return manifest


def build_inputs(
    frames: Sequence[Frame],
    modality: str,
    params: SamplingParams,
    ssim_params: SsimParams | None = None,
    stitch_params: StitchParams | None = None,
) -> tuple[list[Frame | StitchedImage], tuple[float, float]]:
    """Images handed to the model under one input form, plus their compression.

    Modalities:
        uniform: every sampled frame
        last_frame: only the final sampled frame
        keyframes: the retained keyframe sequence
        keyframes_stitched: retained keyframes with scroll runs stitched
    """
    if modality not in MODALITIES:
        raise ValueError(f"Unknown modality '{modality}', expected {MODALITIES}")
    positions = sample_indices(params.fps, params.interval_s, len(frames))
    sampled = [frames[pos] for pos in positions]

    images: list[Frame | StitchedImage]
    if modality == "uniform":
        images = list(sampled)
    elif modality == "last_frame":
        images = [sampled[-1]]
    else:
        manifest = select_keyframes(frames, params, ssim_params)
        keyframes = retained_frames(manifest, frames)
        if modality == "keyframes" or not keyframes:
            images = list(keyframes)
        else:
            images = list(stitch_batch(keyframes, stitch_params))
    return images, compression_stats(sampled, images)
