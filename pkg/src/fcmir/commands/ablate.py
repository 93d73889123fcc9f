"""Ablate command implementation - comparator or input-form report over a corpus."""

import logging
from collections.abc import Mapping, Sequence
from pathlib import Path
from typing import Any

from rich.console import Console
from rich.table import Table

from fcmir.ablation import ablate, ablate_inputs
from fcmir.commands.eval import format_cell
from fcmir.config import load_config
from fcmir.csvio import write_report_csv
from fcmir.errors import ConfigError
from fcmir.manifest import write_json_atomic

logger = logging.getLogger(__name__)
console = Console()

AXES = {
    "comparator": ("ablation", "Comparator ablation"),
    "input": ("input_forms", "Input-form ablation"),
}


def ablate_command(
    corpus_dir: str,
    variants: Sequence[str],
    out_dir: str = "reports",
    config_path: str | None = None,
    overrides: Mapping[str, Mapping[str, Any]] | None = None,
    axis: str = "comparator",
) -> int:
    """Write ``<name>.csv`` and ``<name>.json`` to ``out_dir``.

    The comparator axis writes ``ablation.*``; the input axis ``input_forms.*``.
    """
    if axis not in AXES:
        raise ConfigError(f"Unknown ablation axis '{axis}', expected {sorted(AXES)}")
    config = load_config(config_path, overrides=overrides)
    if axis == "comparator":
        report = ablate(corpus_dir, config, variants)
    else:
        report = ablate_inputs(corpus_dir, config, variants)
    name, title = AXES[axis]

    out = Path(out_dir)
    sha256 = write_report_csv(report, out / f"{name}.csv")
    rows = report.astype(object).where(report.notna(), None).to_dict(orient="records")
    write_json_atomic(
        {
            "axis": axis,
            "corpus": str(corpus_dir),
            "sampling": config.sampling.to_dict(),
            "csv_sha256": sha256,
            "rows": rows,
        },
        out / f"{name}.json",
    )

    key = report.columns[0]
    table = Table(title=title, show_header=True, header_style="bold cyan")
    for column in report.columns:
        table.add_column(column, justify="left" if column == key else "right")
    for row in rows:
        table.add_row(*[format_cell(v) for v in row.values()])
    console.print(table)
    console.print(f"[green]✓[/green] Wrote {out / f'{name}.csv'}")
    return 0
