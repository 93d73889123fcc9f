"""Stage orchestration: sample → stitch → summarize → suggest (→ judge).

Artifacts are written into a staging directory next to the output directory and
promoted with a rename once the run ends, so readers never see a half-written
output tree. A failing stage still promotes its partial manifest, marked
``incomplete`` with the error message.
"""

import logging
import os
import shutil
import tempfile
import threading
import time
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from .config import EffectiveConfig
from .errors import ConfigError, FcmirError, StageError
from .ingest import load_frames, sample_indices, save_png
from .keyframe import compression_stats, retained_frames, select_keyframes, write_keyframes
from .llm import (
    LLMClient,
    generate_suggestions,
    in_flight_slots,
    judge_score,
    limit_images,
    summarize_intent,
)
from .manifest import STAGES, ManifestIO, validate_manifest
from .models import SUGGESTION_KINDS, Frame, PipelineManifest, StitchedImage
from .prompts import load_template
from .stitch import stitch_batch

logger = logging.getLogger(__name__)

REQUIRES = {
    "sample": None,
    "stitch": "sample",
    "summarize": "sample",
    "suggest": "summarize",
    "judge": "summarize",
}
ENDPOINT_STAGES = ("summarize", "suggest", "judge")


def validate_stages(stages: Sequence[str]) -> list[str]:
    """Stages in execution order.

    Raises:
        ConfigError: Unknown stage, empty selection, or a stage without its prerequisite
    """
    unknown = [s for s in stages if s not in STAGES]
    if unknown:
        raise ConfigError(f"Unknown stage(s) {unknown}, expected a subset of {STAGES}")
    if not stages:
        raise ConfigError("No stages selected")
    selected = set(stages)
    for stage in selected:
        needed = REQUIRES[stage]
        if needed is not None and needed not in selected:
            raise ConfigError(f"Invalid stage chain: '{stage}' requires '{needed}'")
    return [s for s in STAGES if s in selected]


def _check_output_dir(out_dir: Path) -> None:
    """Refuse to replace anything but an empty directory or a previous fcmir output."""
    if not out_dir.exists() or not any(out_dir.iterdir()):
        return
    manifest_path = out_dir / "manifest.json"
    if not manifest_path.exists():
        raise ConfigError(
            f"Output directory {out_dir} is not empty and holds no manifest.json; refusing to "
            "replace it"
        )
    try:
        previous = ManifestIO.read(manifest_path)
    except (OSError, ValueError, TypeError, AttributeError) as e:
        raise ConfigError(f"Unreadable {manifest_path}; refusing to replace {out_dir}: {e}") from e
    if not str(previous.generator).startswith("fcmir/"):
        raise ConfigError(
            f"{manifest_path} was not written by fcmir (generator {previous.generator!r}); "
            f"refusing to replace {out_dir}"
        )


def _promote(staging: Path, out_dir: Path) -> None:
    if out_dir.exists():
        shutil.rmtree(out_dir)
    os.replace(staging, out_dir)


@dataclass
class _Timer:
    timings: dict[str, float]
    stage: str
    start: float = 0.0

    def __enter__(self) -> "_Timer":
        logger.info(f"Stage '{self.stage}' started")
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc) -> None:
        self.timings[self.stage] = round((time.perf_counter() - self.start) * 1000.0, 3)


def run_pipeline(
    source: str | Path,
    config: EffectiveConfig,
    stages: Sequence[str],
    out_dir: str | Path,
    source_id: str | None = None,
    gold: str | None = None,
    llm_slots: threading.BoundedSemaphore | None = None,
) -> PipelineManifest:
    """Run the selected stages over one source and write the output tree.

    Output layout: ``manifest.json``, ``keyframes/``, ``stitched/``,
    ``responses/`` (raw endpoint bodies) and ``reports/``. A finished manifest
    must pass ``validate_manifest`` before it is promoted as complete. Runs that
    pass the same ``llm_slots`` share one endpoint in-flight limit.

    Raises:
        ConfigError: Invalid stage chain, missing endpoint or gold reference,
            or an output directory that is not a previous fcmir output
        StageError: A stage failed (partial manifest written)
        EndpointError: The endpoint failed after retries (partial manifest written)
    """
    ordered = validate_stages(stages)
    if any(s in ENDPOINT_STAGES for s in ordered) and not config.endpoint.configured:
        raise ConfigError(
            f"Stages {[s for s in ordered if s in ENDPOINT_STAGES]} need an endpoint; set "
            "[endpoint] base_url or FCMIR_API_BASE"
        )
    if "judge" in ordered and not gold:
        raise ConfigError("The judge stage needs a gold reference summary (--gold)")

    source = Path(source)
    out_dir = Path(out_dir)
    _check_output_dir(out_dir)
    out_dir.parent.mkdir(parents=True, exist_ok=True)
    staging = Path(tempfile.mkdtemp(dir=out_dir.parent, prefix=f".{out_dir.name}.staging-"))

    manifest = ManifestIO.create(source_id or source.name, ordered)
    manifest.config = config.to_dict()
    manifest.digests = config.digests()

    try:
        _run_stages(source, config, ordered, staging, manifest, gold, llm_slots)
        manifest.status = "complete"
        problems = validate_manifest(manifest.to_dict())
        if problems:
            manifest.status = "incomplete"
            raise StageError(f"{manifest.source_id}: invalid manifest: {'; '.join(problems)}")
    except FcmirError as e:
        manifest.error = str(e)
        logger.error(f"{manifest.source_id}: {e}")
        raise
    except Exception as e:
        manifest.error = f"{type(e).__name__}: {e}"
        raise StageError(f"{manifest.source_id}: {manifest.error}") from e
    finally:
        ManifestIO.write(manifest, staging / "manifest.json")
        _promote(staging, out_dir)
        logger.info(f"Wrote {out_dir / 'manifest.json'} ({manifest.status})")
    return manifest


def _run_stages(
    source: Path,
    config: EffectiveConfig,
    ordered: list[str],
    staging: Path,
    manifest: PipelineManifest,
    gold: str | None,
    llm_slots: threading.BoundedSemaphore | None = None,
) -> None:
    timings = manifest.timings_ms
    (staging / "reports").mkdir(exist_ok=True)

    with _Timer(timings, "sample"):
        frames = load_frames(
            source,
            kind=config.ingest.kind,
            fps=config.sampling.fps,
            decoder_cmd=config.ingest.decoder_cmd or None,
        )
        keyframe_manifest = select_keyframes(
            frames, config.sampling, config.ssim, source_id=manifest.source_id
        )
        write_keyframes(keyframe_manifest, frames, staging)
        keyframes = retained_frames(keyframe_manifest, frames)
        positions = sample_indices(config.sampling.fps, config.sampling.interval_s, len(frames))
        sampled = [frames[p] for p in positions]
        manifest.keyframes = keyframe_manifest.to_dict()
        manifest.compression = {
            "frame_pct": keyframe_manifest.frame_compression_pct,
            "pixel_pct": keyframe_manifest.pixel_compression_pct,
        }

    images: list[Frame | StitchedImage] = list(keyframes)
    if "stitch" in ordered:
        with _Timer(timings, "stitch"):
            stitched = stitch_batch(keyframes, config.stitch) if keyframes else []
            for i, image in enumerate(stitched):
                image.path = f"stitched/stitch_{i:03d}.png"
                save_png(image.pixels, staging / image.path)
            manifest.stitched = [image.to_record() for image in stitched]
            frame_pct, pixel_pct = compression_stats(sampled, stitched)
            manifest.compression = {"frame_pct": frame_pct, "pixel_pct": pixel_pct}
            images = list(stitched)

    if not any(s in ENDPOINT_STAGES for s in ordered):
        return

    endpoint = config.endpoint
    template_dir = config.paths.template_dir or None
    llm_images = limit_images(images, endpoint.max_images)
    if len(llm_images) < len(images):
        logger.warning(
            f"Sending {len(llm_images)} of {len(images)} images (max_images={endpoint.max_images})"
        )

    with LLMClient(endpoint, archive_dir=staging / "responses", slots=llm_slots) as client:
        with _Timer(timings, "summarize"):
            template = load_template("summarize", template_dir, endpoint.max_images)
            summary = summarize_intent(llm_images, client, template)
            manifest.intent = summary.to_dict()

        if "suggest" in ordered:
            with _Timer(timings, "suggest"):
                suggestions = {}
                for kind in SUGGESTION_KINDS:
                    template = load_template(f"suggest_{kind}", template_dir, endpoint.max_images)
                    result = generate_suggestions(summary, llm_images, kind, client, template)
                    suggestions[kind] = result.to_dict()
                manifest.suggestions = suggestions

        if "judge" in ordered:
            with _Timer(timings, "judge"):
                template = load_template("judge_summary", template_dir, endpoint.max_images)
                card = judge_score(summary, gold or "", "summary", client, llm_images, template)
                manifest.score_cards = [card.to_dict()]


@dataclass
class SourceResult:
    """Outcome of one source in a multi-source run."""

    source: str
    out_dir: str
    manifest: PipelineManifest | None = None
    error: FcmirError | None = None


def run_many(
    sources: Sequence[str | Path],
    config: EffectiveConfig,
    stages: Sequence[str],
    out_root: str | Path,
    jobs: int = 1,
    gold: str | None = None,
) -> list[SourceResult]:
    """Run independent pipelines over several sources, ``jobs`` at a time.

    Each source gets ``out_root/<source name>``; results keep the input order.
    All sources share one ``max_in_flight`` budget, so at most that many
    endpoint requests are outstanding however large ``jobs`` is.
    """
    if jobs < 1:
        raise ConfigError(f"--jobs must be >= 1, got {jobs}")
    validate_stages(stages)
    names = [Path(s).name for s in sources]
    if len(set(names)) != len(names):
        raise ConfigError(f"Source names must be unique to share an output root: {names}")
    slots = in_flight_slots(config.endpoint)

    def run_one(source: str | Path) -> SourceResult:
        out_dir = Path(out_root) / Path(source).name
        result = SourceResult(source=str(source), out_dir=str(out_dir))
        try:
            result.manifest = run_pipeline(
                source, config, stages, out_dir, gold=gold, llm_slots=slots
            )
        except FcmirError as e:
            result.error = e
        return result

    if jobs == 1:
        return [run_one(s) for s in sources]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(run_one, sources))
