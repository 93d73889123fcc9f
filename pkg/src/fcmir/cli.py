"""Command-line interface for fcmir."""

import argparse
import logging
import sys

from rich.console import Console
from rich.logging import RichHandler
from rich_argparse import RichHelpFormatter

from fcmir import __version__
from fcmir.errors import FcmirError

console = Console()

# dest -> (flag, type, help); dests match the config keys
SAMPLING_FLAGS = {
    "interval_s": ("--interval-s", float, "Sampling interval in seconds (default: 0.5)"),
    "fps": ("--fps", float, "Source frame rate for frame directories (default: 30)"),
    "blur_threshold": ("--blur-threshold", float, "Laplacian-variance blur gate (default: 100)"),
    "phash_threshold": ("--phash-threshold", int, "Max pHash Hamming distance (default: 10)"),
    "ssim_threshold": ("--ssim-threshold", float, "Min per-window SSIM (default: 0.85)"),
    "comparator": ("--comparator", str, "phash_ssim, l1 or phash_l1 (default: phash_ssim)"),
    "l1_threshold": ("--l1-threshold", float, "Max mean absolute difference for l1 comparators"),
    "histogram_reject": ("--histogram-reject", float, "Histogram prescreen rejection distance"),
    "compare_against": ("--compare-against", str, "last_sampled or last_retained"),
}
STITCH_FLAGS = {
    "ratio_threshold": ("--ratio-threshold", float, "Lowe ratio for ORB matches (default: 0.5)"),
    "knn_k": ("--knn-k", int, "Neighbours per descriptor (default: 2)"),
    "min_matches": ("--min-matches", int, "Matches needed to estimate an offset (default: 10)"),
    "max_features": ("--max-features", int, "Max ORB keypoints per image (default: 500)"),
    "fast_threshold": ("--fast-threshold", int, "FAST intensity delta (default: 20)"),
    "strip_height": ("--strip-height", int, "Row-block height for bar detection (default: 16)"),
    "bar_hamming_max": ("--bar-hamming-max", int, "Max strip pHash distance for a common bar"),
    "max_bar_frac": ("--max-bar-frac", float, "Cap on bar height as a fraction of the image"),
    "max_x_drift": ("--max-x-drift", float, "Max horizontal drift of matches in pixels"),
    "bar_mean_delta_max": ("--bar-mean-delta-max", float, "Max mean difference of a bar strip"),
}
ENDPOINT_FLAGS = {
    "model": ("--model", str, "Model name sent to the endpoint"),
    "max_images": ("--max-images", int, "Max images per request (default: 16)"),
    "image_width": ("--image-width", int, "Upload width in pixels (default: 512, fast: 384)"),
}


def _add_flags(parser: argparse.ArgumentParser, title: str, flags: dict) -> None:
    group = parser.add_argument_group(title)
    for dest, (flag, kind, help_text) in flags.items():
        group.add_argument(flag, dest=dest, type=kind, default=None, help=help_text)


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="TOML config file (env FCMIR_* overrides it)")
    parser.add_argument("-v", "--verbose", action="store_true", help="Enable verbose logging")


def _add_run_args(parser: argparse.ArgumentParser, with_stitch: bool, with_endpoint: bool) -> None:
    parser.add_argument("sources", nargs="+", help="Frame directories (or video files)")
    parser.add_argument(
        "--out", help="Output directory; with several sources, one subdirectory per source"
    )
    parser.add_argument("--jobs", type=int, default=1, help="Sources processed in parallel")
    parser.add_argument(
        "--source-kind",
        choices=["frame_dir", "video_file"],
        default=None,
        help="How sources are read (default: frame_dir)",
    )
    _add_common(parser)
    _add_flags(parser, "sampling", SAMPLING_FLAGS)
    if with_stitch:
        _add_flags(parser, "stitching", STITCH_FLAGS)
    if with_endpoint:
        _add_flags(parser, "endpoint", ENDPOINT_FLAGS)
        parser.add_argument("--template-dir", help="Directory overriding packaged prompt templates")


def _overrides(args: argparse.Namespace) -> dict[str, dict]:
    """Config overrides from whichever flags the subcommand defines."""
    sections = {"sampling": SAMPLING_FLAGS, "stitch": STITCH_FLAGS, "endpoint": ENDPOINT_FLAGS}
    overrides = {
        section: {dest: getattr(args, dest) for dest in flags if hasattr(args, dest)}
        for section, flags in sections.items()
    }
    overrides["ingest"] = {"kind": getattr(args, "source_kind", None)}
    overrides["paths"] = {
        "output_dir": getattr(args, "out", None) if hasattr(args, "sources") else None,
        "template_dir": getattr(args, "template_dir", None),
    }
    return overrides


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fcmir",
        description=(
            "Compress UI screen recordings into keyframes and stitched panoramas, "
            "summarize user intent with a multimodal model, and evaluate the results"
        ),
        formatter_class=RichHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest="command", help="Available commands")

    sample_parser = subparsers.add_parser(
        "sample",
        help="Select keyframes from screen recordings",
        description="Blur-gated, similarity-based keyframe selection.",
        epilog="""
Examples:
  # Keyframes of a 30 fps frame dump, sampled every 0.5 s
  fcmir sample recording/ --out out/

  # Synthetic corpora are written at 2 fps
  fcmir sample synth/traj_000/frames --fps 2 --out out/

Output structure:
  out/manifest.json
  out/keyframes/frame_NNNNNN.png
        """,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    _add_run_args(sample_parser, with_stitch=False, with_endpoint=False)

    stitch_parser = subparsers.add_parser(
        "stitch",
        help="Select keyframes and stitch scrolling screens",
        description="Keyframe selection followed by scroll stitching with bar detection.",
        epilog="""
Examples:
  fcmir stitch recording/ --out out/
  fcmir stitch recording/ --out out/ --ratio-threshold 0.6 --min-matches 8

Output structure:
  out/manifest.json
  out/keyframes/frame_NNNNNN.png
  out/stitched/stitch_NNN.png
        """,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    _add_run_args(stitch_parser, with_stitch=True, with_endpoint=False)

    summarize_parser = subparsers.add_parser(
        "summarize",
        help="Summarize the operation and intent of a recording",
        description="sample → stitch → summarize against the configured endpoint.",
        epilog="""
Examples:
  FCMIR_API_BASE=https://host/v1 FCMIR_API_KEY=... fcmir summarize recording/ --out out/

  # Send unstitched keyframes instead of panoramas
  fcmir summarize recording/ --out out/ --no-stitch
        """,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    _add_run_args(summarize_parser, with_stitch=True, with_endpoint=True)
    summarize_parser.add_argument(
        "--no-stitch", action="store_true", help="Skip stitching; send keyframes as they are"
    )

    suggest_parser = subparsers.add_parser(
        "suggest",
        help="Summarize a recording and suggest next steps",
        description="sample → stitch → summarize → suggest (operation and search).",
        epilog="""
Examples:
  fcmir suggest recording/ --out out/ --model vision-model
        """,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    _add_run_args(suggest_parser, with_stitch=True, with_endpoint=True)
    suggest_parser.add_argument(
        "--no-stitch", action="store_true", help="Skip stitching; send keyframes as they are"
    )

    pipeline_parser = subparsers.add_parser(
        "pipeline",
        help="Run an explicit chain of stages",
        description="Run a chosen subset of sample, stitch, summarize, suggest and judge.",
        epilog="""
Examples:
  # Full run over several recordings, two at a time
  fcmir pipeline rec_a/ rec_b/ --out runs/ --jobs 2

  # Score the summary against a reference with the judge rubric
  fcmir pipeline rec/ --stages sample,summarize,judge --gold "Searched for a cafe nearby"

Exit codes:
  - 0: Success
  - 2: Configuration error (bad flags, config file or stage chain)
  - 3: A stage failed (partial manifest written, status "incomplete")
  - 4: The endpoint failed after retries
        """,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    _add_run_args(pipeline_parser, with_stitch=True, with_endpoint=True)
    pipeline_parser.add_argument(
        "--stages",
        default="sample,stitch,summarize,suggest",
        help="Comma-separated stages (default: sample,stitch,summarize,suggest)",
    )
    pipeline_parser.add_argument("--gold", help="Reference summary for the judge stage")

    eval_parser = subparsers.add_parser(
        "eval",
        help="Compute evaluation reports from CSV inputs",
        description="ROUGE/similarity, reward, judge aggregation, rater agreement, regression.",
        epilog="""
Examples:
  # predictions.csv columns: prediction,reference[,id]
  fcmir eval rouge predictions.csv --out reports/
  fcmir eval reward predictions.csv --out reports/

  # scores.csv columns: the five rubric metric names (0-2 each)
  fcmir eval judge scores.csv --rubric suggestion --out reports/

  # ratings.csv columns: rater_a,rater_b[,metric]
  fcmir eval agreement ratings.csv --out reports/

  # pairs.csv columns: x,y (or --x-column/--y-column)
  fcmir eval regress pairs.csv --x-column summary --y-column suggestion --out reports/

Output:
  reports/<kind>.json and reports/<kind>.csv
        """,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    eval_parser.add_argument(
        "kind", choices=["rouge", "reward", "judge", "agreement", "regress"], help="Report kind"
    )
    eval_parser.add_argument("input", help="Input CSV file")
    eval_parser.add_argument("--out", default="reports", help="Report directory (default: reports)")
    eval_parser.add_argument(
        "--rubric", choices=["summary", "suggestion"], default="summary", help="Judge rubric"
    )
    eval_parser.add_argument("--x-column", default="x", help="Regressor column (default: x)")
    eval_parser.add_argument("--y-column", default="y", help="Response column (default: y)")
    _add_common(eval_parser)

    synth_parser = subparsers.add_parser(
        "synth",
        help="Generate a synthetic screen-recording corpus with ground truth",
        description="Seeded synthetic trajectories for keyframe and stitching checks.",
        epilog="""
Examples:
  # 50 trajectories with injected duplicates and blurred frames
  fcmir synth corpus/ --kind keyframe --count 50 --seed 7

  # 30 clean scroll sequences for stitching
  fcmir synth scroll/ --kind scroll --count 30

Output structure:
  corpus/traj_NNN/frames/frame_NNNNNN.png   (2 fps)
  corpus/traj_NNN/page.png
  corpus/traj_NNN/truth.json
        """,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    synth_parser.add_argument("out", help="Corpus output directory")
    synth_parser.add_argument(
        "--kind", choices=["keyframe", "scroll"], default="keyframe", help="Corpus kind"
    )
    synth_parser.add_argument("--count", type=int, default=50, help="Trajectories (default: 50)")
    synth_parser.add_argument("--seed", type=int, default=0, help="Random seed (default: 0)")
    synth_parser.add_argument(
        "-v", "--verbose", action="store_true", help="Enable verbose logging"
    )

    ablate_parser = subparsers.add_parser(
        "ablate",
        help="Compare similarity comparators or model input forms over a corpus",
        description=(
            "Compression and coverage per comparator, or compression per input form "
            "(uniform, last_frame, keyframes, keyframes_stitched); summary quality with an "
            "endpoint."
        ),
        epilog="""
Examples:
  fcmir synth corpus/ --count 50
  fcmir ablate corpus/ --fps 2 --out reports/

  # What each input form costs (writes input_forms.csv)
  fcmir ablate corpus/ --fps 2 --axis input --inputs keyframes,keyframes_stitched

  # With corpus/references.csv (trajectory,reference) and an endpoint configured,
  # the report adds sbert and rouge_avg columns
        """,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    ablate_parser.add_argument("corpus", help="Directory of */frames trajectories")
    ablate_parser.add_argument(
        "--axis",
        choices=["comparator", "input"],
        default="comparator",
        help="What to vary (default: comparator)",
    )
    ablate_parser.add_argument(
        "--comparators",
        default="l1,phash_l1,phash_ssim",
        help="Comma-separated comparators (default: l1,phash_l1,phash_ssim)",
    )
    ablate_parser.add_argument(
        "--inputs",
        default="uniform,last_frame,keyframes,keyframes_stitched",
        help="Comma-separated input forms for --axis input (default: all four)",
    )
    ablate_parser.add_argument("--out", default="reports", help="Report directory")
    _add_common(ablate_parser)
    _add_flags(ablate_parser, "sampling", SAMPLING_FLAGS)

    return parser


def _stages_for(args: argparse.Namespace) -> list[str]:
    if args.command == "pipeline":
        return [s.strip() for s in args.stages.split(",") if s.strip()]
    chain = {
        "sample": ["sample"],
        "stitch": ["sample", "stitch"],
        "summarize": ["sample", "stitch", "summarize"],
        "suggest": ["sample", "stitch", "summarize", "suggest"],
    }[args.command]
    if getattr(args, "no_stitch", False):
        chain.remove("stitch")
    return chain


def main(argv: list[str] | None = None) -> int:
    """Main CLI entry point."""
    parser = build_parser()
    args = parser.parse_args(argv)

    if not args.command:
        parser.print_help()
        return 0

    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(message)s",
        handlers=[RichHandler(console=console, show_time=False, show_path=False)],
        force=True,
    )

    try:
        if args.command in ("sample", "stitch", "summarize", "suggest", "pipeline"):
            from fcmir.commands.pipeline import pipeline_command

            return pipeline_command(
                args.sources,
                _stages_for(args),
                config_path=args.config,
                overrides=_overrides(args),
                jobs=args.jobs,
                gold=getattr(args, "gold", None),
            )
        elif args.command == "eval":
            from fcmir.commands.eval import eval_command

            return eval_command(
                args.kind,
                args.input,
                args.out,
                config_path=args.config,
                rubric=args.rubric,
                x_column=args.x_column,
                y_column=args.y_column,
            )
        elif args.command == "synth":
            from fcmir.commands.synth import synth_command

            return synth_command(args.out, args.kind, args.count, args.seed)
        elif args.command == "ablate":
            from fcmir.commands.ablate import ablate_command

            variants = args.comparators if args.axis == "comparator" else args.inputs
            return ablate_command(
                args.corpus,
                [v.strip() for v in variants.split(",") if v.strip()],
                args.out,
                config_path=args.config,
                overrides=_overrides(args),
                axis=args.axis,
            )
    except FcmirError as e:
        console.print(f"[red]Error:[/red] {e}")
        if args.verbose:
            console.print_exception()
        return e.exit_code
    except Exception as e:
        console.print(f"[red]Error:[/red] {e}")
        if args.verbose:
            console.print_exception()
        return 1

    return 0


if __name__ == "__main__":
    sys.exit(main())
