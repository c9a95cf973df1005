#  Copyright (c) modcs contributors.

import json
import math
from dataclasses import dataclass, field
from importlib.metadata import PackageNotFoundError, version
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from ..common import dump_json, ROUNDING_RULE, write_rows_csv
from ..errors import ConfigError
from ..structured_logging import convert
from ..types import OutputFormat


def package_version() -> str:
    try:
        return version("modcs")
    except PackageNotFoundError:
        return "0+unknown"


def binomial_se(p: float, trials: int) -> float:
    """√(p(1−p)/tot)."""
    if trials < 1:
        return float("nan")
    return math.sqrt(max(p * (1.0 - p), 0.0) / trials)


def mean_se(values: Sequence[float]) -> float:
    """Sample standard deviation over √count."""
    values = np.asarray(values, dtype=float)
    if values.size < 2:
        return 0.0 if values.size == 1 else float("nan")
    return float(np.std(values, ddof=1) / math.sqrt(values.size))


def pooled_nrmse(errors_sq: Sequence[float], norms_sq: Sequence[float]) -> float:
    """√(Σ‖x − x̂‖² / Σ‖x‖²), the Monte Carlo estimate of √(E‖x−x̂‖²/E‖x‖²)."""
    total = float(np.sum(norms_sq))
    if total <= 0:
        return float("nan")
    return math.sqrt(float(np.sum(errors_sq)) / total)


@dataclass
class ExperimentReport:
    """
    Per-cell Monte Carlo statistics plus the configuration that produced them.

    ``rows`` holds one dict per cell; ``columns`` fixes the CSV column order.
    Reports are reproducible from ``config`` alone except for ``wall_clock``,
    which is kept out of the CSV.
    """

    experiment: str
    columns: List[str]
    rows: List[Dict[str, Any]]
    config: Dict[str, Any]
    wall_clock: float = 0.0
    metadata: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        self.metadata.setdefault("rounding", ROUNDING_RULE)
        self.metadata.setdefault("version", package_version())

    def __len__(self) -> int:
        return len(self.rows)

    def column(self, name: str) -> List[Any]:
        return [row.get(name) for row in self.rows]

    def cell(self, **where) -> Dict[str, Any]:
        """The single row whose fields match ``where``."""
        hits = [
            row
            for row in self.rows
            if all(_same(row.get(k), v) for k, v in where.items())
        ]
        if len(hits) != 1:
            raise KeyError(f"{len(hits)} cells match {where}")
        return hits[0]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "experiment": self.experiment,
            "columns": list(self.columns),
            "rows": convert(self.rows),
            "config": convert(self.config),
            "wall_clock": self.wall_clock,
            "metadata": convert(self.metadata),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ExperimentReport":
        try:
            return cls(
                experiment=data["experiment"],
                columns=list(data["columns"]),
                rows=[dict(r) for r in data["rows"]],
                config=dict(data["config"]),
                wall_clock=float(data.get("wall_clock", 0.0)),
                metadata=dict(data.get("metadata", {})),
            )
        except (KeyError, TypeError) as e:
            raise ConfigError(f"not an experiment report: {e}") from e

    def to_csv(self, path: Optional[str] = None) -> str:
        return write_rows_csv(self.rows, path, columns=self.columns)

    def to_json(self, path: Optional[str] = None) -> str:
        return dump_json(self.to_dict(), path)

    @classmethod
    def from_json(cls, text_or_path: str) -> "ExperimentReport":
        text = text_or_path
        if not text_or_path.lstrip().startswith("{"):
            with open(text_or_path, "r") as f:
                text = f.read()
        return cls.from_dict(json.loads(text))

    def write(self, path: Optional[str], fmt: OutputFormat) -> str:
        if OutputFormat(fmt) == OutputFormat.JSON:
            return self.to_json(path)
        return self.to_csv(path)

    def summary_lines(self) -> List[str]:
        lines = [
            f"experiment: {self.experiment}",
            f"cells: {len(self.rows)}",
            f"trials per cell: {self.config.get('trials', 'n/a')}",
            f"seed: {self.config.get('seed', 'n/a')}",
            f"wall clock: {self.wall_clock:.1f}s",
        ]
        return lines


def _same(a, b) -> bool:
    if isinstance(a, float) or isinstance(b, float):
        try:
            return math.isclose(float(a), float(b), rel_tol=1e-12, abs_tol=1e-12)
        except (TypeError, ValueError):
            return False
    return a == b
