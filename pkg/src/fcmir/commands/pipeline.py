"""Pipeline commands (sample, stitch, summarize, suggest, pipeline) - run stages per source."""

import logging
from collections.abc import Mapping, Sequence
from pathlib import Path
from typing import Any

from rich.console import Console
from rich.table import Table

from fcmir.config import load_config
from fcmir.models import PipelineManifest
from fcmir.pipeline import run_many, run_pipeline, validate_stages

logger = logging.getLogger(__name__)
console = Console()


def pipeline_command(
    sources: Sequence[str],
    stages: Sequence[str],
    config_path: str | None = None,
    overrides: Mapping[str, Mapping[str, Any]] | None = None,
    jobs: int = 1,
    gold: str | None = None,
) -> int:
    """Run the selected stages over one or more sources.

    A single source is written to the output directory itself; several sources
    each get a subdirectory named after the source.

    Returns:
        0 on success, otherwise the exit code of the first failing source

    Raises:
        FcmirError: A single-source run failed (the CLI maps it to an exit code)
    """
    config = load_config(config_path, overrides=overrides)
    ordered = validate_stages(stages)
    out = Path(config.paths.output_dir)

    if len(sources) == 1:
        manifest = run_pipeline(sources[0], config, ordered, out, gold=gold)
        _print_summary([(sources[0], manifest, None)])
        console.print(f"[green]✓[/green] Wrote {out / 'manifest.json'}")
        return 0

    results = run_many(sources, config, ordered, out, jobs=jobs, gold=gold)
    _print_summary([(r.source, r.manifest, r.error) for r in results])
    failed = [r for r in results if r.error is not None]
    for r in failed:
        console.print(f"[red]Error:[/red] {r.source}: {r.error}")
    if failed:
        return failed[0].error.exit_code
    console.print(f"[green]✓[/green] Processed {len(results)} sources into {out}")
    return 0


def _print_summary(rows: Sequence[tuple[str, PipelineManifest | None, Exception | None]]) -> None:
    table = Table(show_header=True, header_style="bold cyan")
    table.add_column("Source", style="dim")
    table.add_column("Status")
    table.add_column("Sampled", justify="right")
    table.add_column("Retained", justify="right")
    table.add_column("Stitched", justify="right")
    table.add_column("Frame %", justify="right")
    table.add_column("Pixel %", justify="right")
    table.add_column("Intent")

    for source, manifest, error in rows:
        if manifest is None:
            table.add_row(Path(source).name, f"[red]failed[/red] {error}", *[""] * 6)
            continue
        keyframes = manifest.keyframes or {}
        compression = manifest.compression or {}
        complete = manifest.status == "complete"
        table.add_row(
            Path(source).name,
            "[green]complete[/green]" if complete else "[yellow]incomplete[/yellow]",
            str(len(keyframes.get("sampled_indices", []))),
            str(len(keyframes.get("retained", []))),
            "" if manifest.stitched is None else str(len(manifest.stitched)),
            f"{compression.get('frame_pct', 0.0):.1f}",
            f"{compression.get('pixel_pct', 0.0):.1f}",
            (manifest.intent or {}).get("Intent", ""),
        )
    console.print(table)
