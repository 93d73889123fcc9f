"""I/O for manifest.json and other JSON artifacts.

Writes are deterministic (sorted keys, 2-space indent, LF newlines, UTF-8,
trailing newline) and atomic (temp file + rename).
"""

import json
import os
import tempfile
from pathlib import Path
from typing import Any

from . import __version__
from .models import PipelineManifest

SCHEMA_VERSION = 1
STAGES = ("sample", "stitch", "summarize", "suggest", "judge")
TIMING_FIELDS = ("timings_ms",)


def write_json_atomic(data: Any, path: str | Path) -> None:
    """Serialize ``data`` to ``path`` with deterministic formatting, atomically."""
    path_obj = Path(path)
    path_obj.parent.mkdir(parents=True, exist_ok=True)
    json_str = json.dumps(data, sort_keys=True, indent=2, ensure_ascii=False) + "\n"

    tmp_fd, tmp_path = tempfile.mkstemp(
        dir=path_obj.parent, prefix=f".{path_obj.name}.", suffix=".tmp", text=True
    )
    try:
        with os.fdopen(tmp_fd, "w", encoding="utf-8", newline="\n") as f:
            f.write(json_str)
        os.replace(tmp_path, path_obj)
    except Exception:
        try:
            os.unlink(tmp_path)
        except OSError:
            pass
        raise


class ManifestIO:
    """Read and write manifest.json."""

    @staticmethod
    def write(manifest: PipelineManifest, path: str | Path) -> None:
        write_json_atomic(manifest.to_dict(), path)

    @staticmethod
    def read(path: str | Path) -> PipelineManifest:
        """Load a manifest.

        Raises:
            FileNotFoundError: If the file doesn't exist
            json.JSONDecodeError: If the file is not valid JSON
        """
        with open(path, encoding="utf-8") as f:
            data = json.load(f)
        return PipelineManifest.from_dict(data)

    @staticmethod
    def create(source_id: str, stages: list[str]) -> PipelineManifest:
        return PipelineManifest(
            schema=SCHEMA_VERSION,
            generator=f"fcmir/{__version__}",
            source_id=source_id,
            stages=list(stages),
        )


def validate_manifest(data: dict[str, Any]) -> list[str]:
    """Schema check of a manifest dict; returns error messages (empty when valid)."""
    errors: list[str] = []
    if data.get("schema") != SCHEMA_VERSION:
        errors.append(f"schema must be {SCHEMA_VERSION}, got {data.get('schema')!r}")
    for key in ("generator", "source_id", "status", "stages", "config", "digests"):
        if key not in data:
            errors.append(f"missing required field '{key}'")
    if data.get("status") not in ("complete", "incomplete"):
        errors.append(f"status must be complete or incomplete, got {data.get('status')!r}")

    stages = data.get("stages", [])
    unknown = [s for s in stages if s not in STAGES]
    if unknown:
        errors.append(f"unknown stages: {unknown}")

    complete = data.get("status") == "complete"
    records = {
        "sample": "keyframes",
        "stitch": "stitched",
        "summarize": "intent",
        "suggest": "suggestions",
        "judge": "score_cards",
    }
    for stage, key in records.items():
        if complete and stage in stages and key not in data:
            errors.append(f"stage '{stage}' ran but '{key}' is missing")
        if stage not in stages and key in data:
            errors.append(f"'{key}' present but stage '{stage}' was not requested")

    intent = data.get("intent")
    if intent is not None:
        for key in ("Operation", "Intent"):
            if not isinstance(intent.get(key), str) or not intent.get(key):
                errors.append(f"intent.{key} must be a nonempty string")

    for kind, record in (data.get("suggestions") or {}).items():
        if not record.get("suggestions"):
            errors.append(f"suggestions.{kind} is empty")

    for record in data.get("keyframes", {}).get("retained", []):
        path = record.get("path")
        if path is not None and (Path(path).is_absolute() or ".." in Path(path).parts):
            errors.append(f"keyframe path must be relative to the output directory: {path}")
    return errors
