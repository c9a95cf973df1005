#  Copyright (c) modcs contributors.

import csv
import io
import json
import os
from decimal import Decimal, ROUND_HALF_UP
from pathlib import Path
from typing import Any, Dict, Iterable, Optional, Sequence

import numpy as np

from .errors import ConfigError
from .mc_logger import logger
from .structured_logging import convert

# documented in every report, since fractional sizes must become integers
ROUNDING_RULE = "round half up"

# process exit codes of the command line
EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3


def round_half_up(x: float) -> int:
    """Round to the nearest integer, ties away from zero for x >= 0."""
    return int(Decimal(repr(float(x))).quantize(Decimal(1), rounding=ROUND_HALF_UP))


def save_matrix_csv(path: str, matrix: np.ndarray) -> None:
    """Write a headerless CSV, one matrix row per line."""
    np.savetxt(path, np.atleast_2d(matrix), delimiter=",", fmt="%.17g")


def load_matrix_csv(path: str) -> np.ndarray:
    return np.loadtxt(path, delimiter=",", ndmin=2)


def load_vector_csv(path: str) -> np.ndarray:
    """Read a vector stored either as one row or as one column."""
    return np.loadtxt(path, delimiter=",", ndmin=2).ravel()


def load_json(path: str) -> Dict[str, Any]:
    try:
        with open(path, "r") as f:
            return json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"cannot read JSON config {path}: {e}") from e


def dump_json(data: Any, path: Optional[str] = None) -> str:
    """Serialize ``data`` (via structured_logging.convert) and optionally save it."""
    text = json.dumps(convert(data), indent=2)
    if path is not None:
        _ensure_parent(path)
        with open(path, "w") as f:
            f.write(text + "\n")
    return text


def write_rows_csv(
    rows: Sequence[Dict[str, Any]], path: Optional[str] = None, columns=None
) -> str:
    """Write dict rows as CSV with a header; returns the CSV text."""
    columns = list(columns or (rows[0].keys() if rows else []))
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=columns, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: _csv_value(row.get(k)) for k in columns})
    text = buffer.getvalue()
    if path is not None:
        _ensure_parent(path)
        with open(path, "w") as f:
            f.write(text)
    return text


def _csv_value(value):
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (np.floating, np.integer)):
        return repr(value.item())
    if isinstance(value, (list, tuple, np.ndarray)):
        return " ".join(str(v) for v in np.asarray(value).ravel().tolist())
    return "" if value is None else str(value)


def _ensure_parent(path: str) -> None:
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)


def print_report_summary(
    title: str, lines: Iterable[str], out: Optional[str] = None
) -> None:
    """Print the banner every report-producing command ends with."""
    print("\n" + "=" * 80)
    print(f"📊 {title}")
    print("=" * 80)
    for line in lines:
        print(f"  {line}")
    if out:
        size = "N/A"
        try:
            size_bytes = os.path.getsize(out)
            if size_bytes < 1024:
                size = f"{size_bytes}B"
            else:
                size = f"{size_bytes / 1024:.1f}KB"
        except OSError:
            pass
        print(f"📝 Written to: {Path(out)} ({size})")
    print("=" * 80 + "\n")
    logger.debug(f"{title}: summary printed")


def parse_index_list(text: Optional[str]) -> np.ndarray:
    """
    Read an index set given as "0,3,5", as a CSV file of integers, or empty.

    Raises:
        ConfigError: If an entry is not an integer.
    """
    if text is None or not text.strip():
        return np.zeros(0, dtype=np.int64)
    if os.path.exists(text):
        values = load_vector_csv(text)
        if not np.all(values == np.round(values)):
            raise ConfigError(f"{text} holds non-integer indices")
        return np.unique(values.astype(np.int64))
    try:
        parts = [int(part) for part in text.split(",") if part.strip()]
        return np.unique(np.asarray(parts, dtype=np.int64))
    except ValueError as e:
        raise ConfigError(f"cannot parse index list {text!r}: {e}") from e


def emit(text: str, out: Optional[str], title: str, lines: Iterable[str]) -> None:
    """Print ``text`` when there is no output file, else the summary banner."""
    if out is None:
        print(text, end="" if text.endswith("\n") else "\n")
    else:
        print_report_summary(title, lines, out)
