"""Deterministic CSV reports and schema-checked CSV inputs."""

import csv
import hashlib
from collections.abc import Sequence
from pathlib import Path

import pandas as pd

from .errors import InputSchemaError


def write_report_csv(
    df: pd.DataFrame,
    path: str | Path,
    float_format: str = "%.6f",
) -> str:
    """Write a report table with deterministic formatting, rows and columns as given.

    Args:
        df: Table to write
        path: Output file path (parents are created)
        float_format: printf-style format for float columns

    Returns:
        SHA256 hash of the written file

    Determinism invariants:
        - UTF-8 encoding (no BOM)
        - LF newlines on all platforms
        - csv.QUOTE_MINIMAL
        - Empty string for missing values
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    df.to_csv(
        path,
        index=False,
        encoding="utf-8",
        lineterminator="\n",
        quoting=csv.QUOTE_MINIMAL,
        na_rep="",
        float_format=float_format,
    )
    with open(path, "rb") as f:
        return hashlib.sha256(f.read()).hexdigest()


def read_input_csv(
    path: str | Path,
    required: Sequence[str],
    numeric: Sequence[str] = (),
) -> pd.DataFrame:
    """Read an input table, checking columns and cell values.

    Empty cells in required columns and non-numeric cells in ``numeric`` columns
    are reported with their 1-indexed file line (header is line 1).

    Raises:
        InputSchemaError: Unreadable file, missing column, or a bad cell
    """
    path = str(path)
    try:
        df = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    except FileNotFoundError as e:
        raise InputSchemaError(path, "file not found") from e
    except (pd.errors.EmptyDataError, pd.errors.ParserError, UnicodeDecodeError) as e:
        raise InputSchemaError(path, f"cannot parse CSV: {e}") from e

    missing = [c for c in required if c not in df.columns]
    if missing:
        raise InputSchemaError(path, f"missing column(s): {', '.join(missing)}", line=1)

    for idx, row in df.iterrows():
        line = int(idx) + 2
        for column in required:
            if not str(row[column]).strip():
                raise InputSchemaError(path, f"empty value in column '{column}'", line=line)
        for column in numeric:
            try:
                float(row[column])
            except ValueError:
                raise InputSchemaError(
                    path, f"non-numeric value {row[column]!r} in column '{column}'", line=line
                ) from None

    for column in numeric:
        df[column] = pd.to_numeric(df[column])
    return df
