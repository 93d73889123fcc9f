"""Eval command implementation - turns CSV inputs into JSON + CSV reports."""

import logging
from pathlib import Path

import numpy as np
import pandas as pd
from rich.console import Console
from rich.table import Table

from fcmir.config import EffectiveConfig, load_config
from fcmir.csvio import read_input_csv, write_report_csv
from fcmir.embeddings import EmbeddingProvider, make_provider
from fcmir.errors import ConfigError, InputSchemaError
from fcmir.evalkit import (
    agreement,
    aggregate_scorecards,
    embedding_similarity,
    format_reward,
    ols_fit,
    rouge_average,
    rouge_l,
    rouge_n,
    tokenize,
    total_reward,
)
from fcmir.manifest import write_json_atomic
from fcmir.models import RUBRIC_METRICS, ScoreCard

logger = logging.getLogger(__name__)
console = Console()

EVAL_KINDS = ("rouge", "reward", "judge", "agreement", "regress")
ROUGE_COLUMNS = ["id", "sbert", "rouge1", "rouge2", "rougeL", "rouge_avg", "reward"]
REWARD_COLUMNS = ROUGE_COLUMNS + ["similarity", "format"]


def rouge_report(
    path: str | Path,
    provider: EmbeddingProvider,
    config: EffectiveConfig,
    breakdown: bool = False,
) -> pd.DataFrame:
    """Per-pair similarity metrics plus a trailing ``mean`` row.

    Input columns: ``prediction``, ``reference`` and optionally ``id``.
    ROUGE-2 is blank for one-token references and left out of their average.
    """
    df = read_input_csv(path, required=["prediction", "reference"])
    rows = []
    for idx, row in df.iterrows():
        pred, ref = row["prediction"], row["reference"]
        if not tokenize(ref):
            raise InputSchemaError(str(path), "reference has no tokens", line=int(idx) + 2)
        reward = total_reward(pred, ref, provider, config.reward, config.format_reward)
        rows.append(
            {
                "id": row.get("id") or str(idx),
                "sbert": embedding_similarity(pred, ref, provider) if tokenize(pred) else 0.0,
                "rouge1": rouge_n(pred, ref, 1).f1,
                "rouge2": rouge_n(pred, ref, 2).f1 if len(tokenize(ref)) >= 2 else np.nan,
                "rougeL": rouge_l(pred, ref).f1,
                "rouge_avg": rouge_average(pred, ref),
                "reward": reward.total,
                "similarity": reward.similarity,
                "format": format_reward(pred, config.format_reward),
            }
        )
    columns = REWARD_COLUMNS if breakdown else ROUGE_COLUMNS
    report = pd.DataFrame(rows, columns=REWARD_COLUMNS)
    mean = report.drop(columns="id").mean(skipna=True).to_dict()
    report = pd.concat([report, pd.DataFrame([{"id": "mean", **mean}])], ignore_index=True)
    return report[columns]


def judge_report(path: str | Path, rubric: str) -> pd.DataFrame:
    """Per-metric sums and normalized scores of 0-2 rubric ratings, plus an ``Average`` row.

    Input columns: the rubric's five metric names, one row per judged item.
    """
    metrics = RUBRIC_METRICS[rubric]
    df = read_input_csv(path, required=list(metrics), numeric=list(metrics))
    cards = []
    for idx, row in df.iterrows():
        try:
            values = {m: float(row[m]) for m in metrics}
            if any(not v.is_integer() for v in values.values()):
                raise ValueError(f"scores must be integers, got {values}")
            cards.append(ScoreCard(rubric, {m: int(v) for m, v in values.items()}))
        except ValueError as e:
            raise InputSchemaError(str(path), str(e), line=int(idx) + 2) from None
    if not cards:
        raise InputSchemaError(str(path), "no rating rows")
    report = aggregate_scorecards(cards)
    average = {
        "metric": "Average",
        "sum": int(report["sum"].sum()),
        "normalized": float(report["normalized"].mean()),
    }
    return pd.concat([report, pd.DataFrame([average])], ignore_index=True)


def agreement_report(path: str | Path) -> pd.DataFrame:
    """Accuracy and Cohen's kappa of two raters, per metric when a ``metric`` column exists.

    Input columns: ``rater_a``, ``rater_b`` (integer labels) and optionally ``metric``.
    The last row pools all ratings.
    """
    df = read_input_csv(path, required=["rater_a", "rater_b"], numeric=["rater_a", "rater_b"])
    if df.empty:
        raise InputSchemaError(str(path), "no rating rows")
    groups = list(df.groupby("metric", sort=False)) if "metric" in df.columns else []
    rows = []
    for name, group in [*groups, ("Overall", df)]:
        stats = agreement(group["rater_a"].tolist(), group["rater_b"].tolist())
        rows.append({"metric": name, **stats.to_dict()})
    return pd.DataFrame(rows, columns=["metric", "accuracy", "kappa", "n"])


def regress_report(path: str | Path, x_column: str, y_column: str) -> pd.DataFrame:
    """One-row OLS fit of ``y_column`` on ``x_column``."""
    df = read_input_csv(path, required=[x_column, y_column], numeric=[x_column, y_column])
    try:
        fit = ols_fit(df[x_column].tolist(), df[y_column].tolist())
    except ValueError as e:
        raise InputSchemaError(str(path), str(e)) from None
    return pd.DataFrame([{"x": x_column, "y": y_column, **fit.to_dict()}])


def _records(df: pd.DataFrame) -> list[dict]:
    return [
        {k: (None if isinstance(v, float) and np.isnan(v) else v) for k, v in row.items()}
        for row in df.to_dict(orient="records")
    ]


def eval_command(
    kind: str,
    input_path: str,
    out_dir: str = "reports",
    config_path: str | None = None,
    rubric: str = "summary",
    x_column: str = "x",
    y_column: str = "y",
    provider: EmbeddingProvider | None = None,
) -> int:
    """Build one report and write ``<out_dir>/<kind>.json`` and ``<out_dir>/<kind>.csv``.

    Returns:
        0 on success

    Raises:
        ConfigError: Unknown kind or bad configuration
        InputSchemaError: Input file violations, with path and line
    """
    if kind not in EVAL_KINDS:
        raise ConfigError(f"Unknown eval kind '{kind}', expected {EVAL_KINDS}")
    config = load_config(config_path)

    if kind in ("rouge", "reward"):
        provider = provider or make_provider(config.endpoint)
        logger.info(f"Embedding provider: {provider.identity}")
        report = rouge_report(input_path, provider, config, breakdown=kind == "reward")
    elif kind == "judge":
        report = judge_report(input_path, rubric)
    elif kind == "agreement":
        report = agreement_report(input_path)
    else:
        report = regress_report(input_path, x_column, y_column)

    out = Path(out_dir)
    csv_path = out / f"{kind}.csv"
    sha256 = write_report_csv(report, csv_path)
    payload = {
        "kind": kind,
        "input": str(input_path),
        "csv_sha256": sha256,
        "rows": _records(report),
    }
    if kind == "judge":
        payload["rubric"] = rubric
    if provider is not None:
        payload["embedding_provider"] = provider.identity
    write_json_atomic(payload, out / f"{kind}.json")

    _print_report(kind, report)
    console.print(f"[green]✓[/green] Wrote {csv_path} and {out / f'{kind}.json'}")
    return 0


def _print_report(kind: str, report: pd.DataFrame) -> None:
    table = Table(title=f"{kind} report", show_header=True, header_style="bold cyan")
    for column in report.columns:
        table.add_column(str(column), justify="left" if column in ("id", "metric") else "right")
    for row in _records(report):
        table.add_row(*[format_cell(v) for v in row.values()])
    console.print(table)


def format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.4f}"
    return str(value)
