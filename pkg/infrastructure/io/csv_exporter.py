"""
infrastructure/io/csv_exporter.py

CSV export for sample dumps and check summaries.

Sample tables go through pandas with full float precision and a fixed
column order, so a fixed seed gives byte-identical files.
"""
from __future__ import annotations

import csv
import json
import logging
from pathlib import Path
from typing import Iterable, Optional, Sequence

import pandas as pd

from domain.errors import OutputDirectoryError
from infrastructure.io.json_writer import to_jsonable

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"

CHECK_COLUMNS = [
    "suite",
    "name",
    "verdict",
    "reason",
    "detail",
]


def write_rows_csv(rows: Iterable[dict], csv_path: Path, columns: Optional[Sequence[str]] = None) -> Path:
    """Write dict rows; columns default to the keys of the first row, in order."""
    rows = list(rows)
    if columns is None:
        columns = list(rows[0].keys()) if rows else []
    frame = pd.DataFrame(rows, columns=list(columns))
    return write_frame_csv(frame, csv_path)


def write_frame_csv(frame: pd.DataFrame, csv_path: Path) -> Path:
    csv_path = Path(csv_path)
    try:
        csv_path.parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(csv_path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    except OSError as exc:
        raise OutputDirectoryError(f"cannot write {csv_path}: {exc}") from exc
    logger.debug("CSV written: %s (%d rows)", csv_path, len(frame))
    return csv_path


def write_checks_csv(checks: Iterable[dict], csv_path: Path) -> Path:
    """One row per check; the detail mapping is stored as compact sorted JSON."""
    csv_path = Path(csv_path)
    csv_path.parent.mkdir(parents=True, exist_ok=True)
    with open(csv_path, "w", encoding="utf-8", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=CHECK_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for row in checks:
            writer.writerow({k: _cell(row.get(k, "")) for k in CHECK_COLUMNS})
    return csv_path


def _cell(value) -> str:
    if isinstance(value, dict):
        return json.dumps(to_jsonable(value), sort_keys=True, separators=(",", ":"))
    if isinstance(value, float):
        return FLOAT_FORMAT % value
    return "" if value is None else str(value)
