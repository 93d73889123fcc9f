"""Comparator and input-form ablations over a synthetic (or annotated) corpus.

A corpus directory holds one subdirectory per trajectory with ``frames/`` and,
for synthetic corpora, ``truth.json``. An optional ``references.csv`` with
columns ``trajectory,reference`` enables the summary-quality columns.
"""

import logging
from collections.abc import Sequence
from dataclasses import replace
from pathlib import Path

import numpy as np
import pandas as pd

from .config import EffectiveConfig
from .csvio import read_input_csv
from .embeddings import EmbeddingProvider, make_provider
from .errors import ConfigError
from .evalkit import embedding_similarity, rouge_average, tokenize
from .ingest import load_frames, sample_indices
from .keyframe import MODALITIES, build_inputs, retained_frames, select_keyframes
from .llm import LLMClient, limit_images, summarize_intent
from .models import COMPARATORS, Frame, StitchedImage
from .synth import read_truth

logger = logging.getLogger(__name__)

REPORT_COLUMNS = [
    "comparator",
    "trajectories",
    "sampled",
    "retained",
    "frame_compression_pct",
    "pixel_compression_pct",
    "screen_coverage",
    "duplicates_retained",
]
INPUT_COLUMNS = [
    "input_form",
    "trajectories",
    "sampled",
    "images",
    "frame_compression_pct",
    "pixel_compression_pct",
]
QUALITY_COLUMNS = ["sbert", "rouge_avg"]


def corpus_trajectories(corpus_dir: str | Path) -> list[Path]:
    """Trajectory directories (those holding a ``frames/`` subdirectory), sorted by name."""
    root = Path(corpus_dir)
    if not root.is_dir():
        raise ConfigError(f"Corpus directory not found: {corpus_dir}")
    found = sorted(p for p in root.iterdir() if (p / "frames").is_dir())
    if not found:
        raise ConfigError(f"No trajectories (*/frames/) under {corpus_dir}")
    return found


def _coverage(retained: Sequence[int], truth: dict) -> tuple[float, int]:
    ids = truth["screen_ids"]
    covered = {ids[i] for i in retained}
    duplicates = {int(k) for k in truth.get("duplicate_map", {})}
    return len(covered) / max(1, truth["distinct_screens"]), len(duplicates & set(retained))


def _references(
    corpus_dir: str | Path, config: EffectiveConfig, provider: EmbeddingProvider | None
) -> tuple[dict[str, str] | None, EmbeddingProvider | None]:
    ref_path = Path(corpus_dir) / "references.csv"
    if not (config.endpoint.configured and ref_path.exists()):
        return None, provider
    df = read_input_csv(ref_path, required=["trajectory", "reference"])
    return dict(zip(df["trajectory"], df["reference"])), provider or make_provider(config.endpoint)


def _pct(kept: float, total: float) -> float:
    return 100.0 * (1 - kept / total) if total else 0.0


def ablate(
    corpus_dir: str | Path,
    config: EffectiveConfig,
    comparators: Sequence[str] = COMPARATORS,
    provider: EmbeddingProvider | None = None,
) -> pd.DataFrame:
    """One report row per comparator.

    Compression is pooled over the corpus (1 − Σ retained / Σ sampled). Screen
    coverage and retained duplicates are reported when every trajectory has a
    truth file; summary quality when an endpoint and ``references.csv`` exist.
    """
    unknown = [c for c in comparators if c not in COMPARATORS]
    if unknown:
        raise ConfigError(f"Unknown comparator(s) {unknown}, expected {COMPARATORS}")
    trajectories = corpus_trajectories(corpus_dir)
    loaded = [load_frames(t / "frames", fps=config.sampling.fps) for t in trajectories]
    truths = [
        read_truth(t / "truth.json") if (t / "truth.json").exists() else None
        for t in trajectories
    ]
    references, provider = _references(corpus_dir, config, provider)

    rows = []
    for comparator in comparators:
        params = replace(config.sampling, comparator=comparator)
        sampled = retained = 0
        sampled_area = retained_area = 0
        coverage, duplicates, sbert, rouge = [], 0, [], []
        for traj, frames, truth in zip(trajectories, loaded, truths):
            km = select_keyframes(frames, params, config.ssim, source_id=traj.name)
            keyframes = retained_frames(km, frames)
            by_index = {f.index: f for f in frames}
            sampled += len(km.sampled_indices)
            retained += len(keyframes)
            sampled_area += sum(by_index[i].area for i in km.sampled_indices)
            retained_area += sum(f.area for f in keyframes)
            if truth is not None:
                cov, dup = _coverage(km.retained_indices, truth)
                coverage.append(cov)
                duplicates += dup
            if references is not None and traj.name in references:
                s, r = _summary_quality(keyframes, references[traj.name], config, provider)
                sbert.append(s)
                rouge.append(r)

        row = {
            "comparator": comparator,
            "trajectories": len(trajectories),
            "sampled": sampled,
            "retained": retained,
            "frame_compression_pct": _pct(retained, sampled),
            "pixel_compression_pct": _pct(retained_area, sampled_area),
            "screen_coverage": float(np.mean(coverage)) if len(coverage) == len(truths) else None,
            "duplicates_retained": duplicates if len(coverage) == len(truths) else None,
        }
        if references is not None:
            row["sbert"] = float(np.mean(sbert)) if sbert else None
            row["rouge_avg"] = float(np.mean(rouge)) if rouge else None
        logger.info(
            f"{comparator}: kept {retained}/{sampled} frames "
            f"({row['frame_compression_pct']:.1f}% compression)"
        )
        rows.append(row)

    columns = REPORT_COLUMNS + (QUALITY_COLUMNS if references is not None else [])
    return pd.DataFrame(rows, columns=columns)


def ablate_inputs(
    corpus_dir: str | Path,
    config: EffectiveConfig,
    input_forms: Sequence[str] = MODALITIES,
    provider: EmbeddingProvider | None = None,
) -> pd.DataFrame:
    """One report row per input form handed to the model.

    Forms are every sampled frame (``uniform``), the final sampled frame
    (``last_frame``), the keyframes, and the keyframes with scroll runs stitched.
    Compression is pooled like ``ablate``; stitched panoramas count by area.
    """
    unknown = [m for m in input_forms if m not in MODALITIES]
    if unknown:
        raise ConfigError(f"Unknown input form(s) {unknown}, expected {MODALITIES}")
    trajectories = corpus_trajectories(corpus_dir)
    loaded = [load_frames(t / "frames", fps=config.sampling.fps) for t in trajectories]
    references, provider = _references(corpus_dir, config, provider)

    rows = []
    for form in input_forms:
        sampled = kept = 0
        sampled_area = kept_area = 0
        sbert, rouge = [], []
        for traj, frames in zip(trajectories, loaded):
            images, _ = build_inputs(frames, form, config.sampling, config.ssim, config.stitch)
            positions = sample_indices(config.sampling.fps, config.sampling.interval_s, len(frames))
            sampled += len(positions)
            sampled_area += sum(frames[p].area for p in positions)
            kept += len(images)
            kept_area += sum(image.area for image in images)
            if references is not None and traj.name in references and images:
                s, r = _summary_quality(images, references[traj.name], config, provider)
                sbert.append(s)
                rouge.append(r)

        row = {
            "input_form": form,
            "trajectories": len(trajectories),
            "sampled": sampled,
            "images": kept,
            "frame_compression_pct": _pct(kept, sampled),
            "pixel_compression_pct": max(0.0, _pct(kept_area, sampled_area)),
        }
        if references is not None:
            row["sbert"] = float(np.mean(sbert)) if sbert else None
            row["rouge_avg"] = float(np.mean(rouge)) if rouge else None
        logger.info(f"{form}: {kept} images from {sampled} sampled frames")
        rows.append(row)

    columns = INPUT_COLUMNS + (QUALITY_COLUMNS if references is not None else [])
    return pd.DataFrame(rows, columns=columns)


def _summary_quality(
    images: Sequence[Frame | StitchedImage],
    reference: str,
    config: EffectiveConfig,
    provider: EmbeddingProvider,
) -> tuple[float, float]:
    with LLMClient(config.endpoint) as client:
        summary = summarize_intent(limit_images(images, config.endpoint.max_images), client)
    prediction = summary.operation
    semantic = 0.0
    if tokenize(prediction):
        semantic = embedding_similarity(prediction, reference, provider)
    return semantic, rouge_average(prediction, reference)
