"""
infrastructure/io/json_writer.py

Deterministic JSON artifacts: sorted keys, 2-space indent, numpy values
converted, non-finite floats written as strings. Writes go through a .tmp
file and a rename so an interrupted run never leaves a truncated file.
"""
from __future__ import annotations

import json
import logging
import math
from pathlib import Path
from typing import Any

import numpy as np

from domain.errors import OutputDirectoryError

logger = logging.getLogger(__name__)


def to_jsonable(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [to_jsonable(v) for v in value.tolist()]
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (np.floating, float)):
        x = float(value)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if hasattr(value, "to_dict"):
        return to_jsonable(value.to_dict())
    return value


def dumps(data: Any) -> str:
    return json.dumps(to_jsonable(data), ensure_ascii=False, indent=2, sort_keys=True) + "\n"


def write_json(data: Any, output_path: Path) -> Path:
    output_path = Path(output_path)
    tmp = output_path.with_suffix(output_path.suffix + ".tmp")
    try:
        output_path.parent.mkdir(parents=True, exist_ok=True)
        tmp.write_text(dumps(data), encoding="utf-8")
        tmp.replace(output_path)
    except OSError as exc:
        raise OutputDirectoryError(f"cannot write {output_path}: {exc}") from exc
    logger.debug("JSON written: %s", output_path)
    return output_path


def read_json(path: Path) -> Any:
    return json.loads(Path(path).read_text(encoding="utf-8"))
