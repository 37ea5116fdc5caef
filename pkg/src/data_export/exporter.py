"""
Provides functions for exporting run results to files.

Tables are written as CSV with fixed column order, floats formatted with
%.17g (locale independent, round-trips float64), CRLF line endings and minimal
RFC-4180 quoting. Summaries are written as indented JSON with NaN stored as
null.

Supported formats:
- JSON: Human-readable text format
- CSV: Simple tabular format
"""

import csv
import json
import math
from pathlib import Path
from typing import Any, Dict, List, Mapping, Sequence, Union

import pandas as pd

FLOAT_FORMAT = "%.17g"
LINE_TERMINATOR = "\r\n"

TableLike = Union[pd.DataFrame, Sequence[Mapping[str, Any]]]


def _clean(value: Any) -> Any:
    if isinstance(value, float) and math.isnan(value):
        return None
    if isinstance(value, dict):
        return {k: _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    return value


def export_to_json(data: Dict[str, Any], filepath: Union[str, Path]) -> None:
    """
    Export a dict-like object to a JSON file.
    Args:
        data: The dict-like object to export.
        filepath: The path to the output JSON file.
    """
    with open(filepath, "w", encoding="utf-8", newline="\n") as f:
        json.dump(_clean(data), f, indent=2, allow_nan=False)
        f.write("\n")


def export_to_csv(
    data: TableLike,
    filepath: Union[str, Path],
    columns: Union[List[str], None] = None,
) -> None:
    """
    Export a table to a CSV file.
    Args:
        data: A DataFrame or a sequence of row dicts.
        filepath: The path to the output CSV file.
        columns: Column order; defaults to the DataFrame's own order.
    """
    df = data if isinstance(data, pd.DataFrame) else pd.DataFrame(list(data))
    if columns is not None:
        df = df.reindex(columns=columns)
    df.to_csv(
        filepath,
        index=False,
        float_format=FLOAT_FORMAT,
        lineterminator=LINE_TERMINATOR,
        quoting=csv.QUOTE_MINIMAL,
    )
