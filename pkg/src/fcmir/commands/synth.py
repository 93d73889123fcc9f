"""Synth command implementation - writes seeded synthetic corpora with ground truth."""

import logging

from rich.console import Console

from fcmir.errors import ConfigError
from fcmir.synth import build_keyframe_corpus, build_scroll_corpus, write_corpus

logger = logging.getLogger(__name__)
console = Console()


def synth_command(out_dir: str, kind: str = "keyframe", count: int = 50, seed: int = 0) -> int:
    """Generate ``count`` trajectories of the given kind under ``out_dir``.

    Returns:
        0 on success

    Raises:
        ConfigError: Unknown kind or a nonpositive count
    """
    if count < 1:
        raise ConfigError(f"--count must be >= 1, got {count}")
    if kind == "keyframe":
        corpus = build_keyframe_corpus(count, seed=seed)
    elif kind == "scroll":
        corpus = build_scroll_corpus(count, seed=seed)
    else:
        raise ConfigError(f"Unknown corpus kind '{kind}', expected keyframe or scroll")

    written = write_corpus(corpus, out_dir)
    frames = sum(len(f) for f, _ in corpus)
    screens = sum(t.distinct_screens for _, t in corpus)
    console.print(
        f"[green]✓[/green] Wrote {len(written)} {kind} trajectories to {out_dir} "
        f"[dim]({frames} frames, {screens} distinct screens)[/dim]"
    )
    return 0
