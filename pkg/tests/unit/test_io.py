"""
tests/unit/test_io.py

Spec documents, experiment configs and the CSV/JSON artifact writers.
"""
from __future__ import annotations

import csv
import json
import sys
from pathlib import Path

import numpy as np
import pytest

ROOT = Path(__file__).resolve().parent.parent.parent
sys.path.insert(0, str(ROOT))

from config.fixtures import m2
from domain.errors import ConfigurationError, InvalidSpecError
from domain.models.estimates import PASS, CheckResult
from domain.models.experiment import DEFAULT_REPLICAS, ExperimentConfig
from infrastructure.io.csv_exporter import CHECK_COLUMNS, write_checks_csv, write_rows_csv
from infrastructure.io.json_writer import dumps, read_json, to_jsonable, write_json
from infrastructure.io.spec_loader import (
    load_config,
    load_spec,
    resolve_spec_path,
    spec_from_document,
    validate_config,
)


def _write(path: Path, data) -> Path:
    path.write_text(json.dumps(data), encoding="utf-8")
    return path


class TestSpecLoader:
    def test_document_round_trip(self):
        doc = m2().to_dict()
        assert spec_from_document(doc).to_dict() == doc

    def test_schema_violation(self):
        doc = m2().to_dict()
        doc["levy"][0]["gauss_var"] = -1.0
        with pytest.raises(InvalidSpecError, match="schema violation"):
            spec_from_document(doc)

    def test_unbalanced_q_rejected_after_schema(self):
        doc = m2().to_dict()
        doc["q_matrix"] = [[-1.0, 0.5], [2.0, -2.0]]
        with pytest.raises(InvalidSpecError):
            spec_from_document(doc)

    def test_fixture_source(self):
        assert resolve_spec_path("fixture:m2") is None
        assert load_spec("fixture:m2").n_types == 2
        with pytest.raises(ConfigurationError, match="unknown fixture"):
            load_spec("fixture:nope")

    def test_file_sources(self, tmp_path):
        path = _write(tmp_path / "spec.json", m2().to_dict())
        assert load_spec("spec.json", tmp_path).to_dict() == m2().to_dict()
        with pytest.raises(ConfigurationError):
            load_spec("missing.json", tmp_path)
        (tmp_path / "bad.json").write_text("{not json", encoding="utf-8")
        with pytest.raises(InvalidSpecError):
            load_spec(str(tmp_path / "bad.json"))
        assert path.exists()


class TestConfig:
    def test_defaults(self):
        config = load_config(None)
        assert config.spec_path == "fixture:m2"
        assert config.replicas == DEFAULT_REPLICAS
        assert config.source_path is None

    def test_overrides(self, tmp_path):
        path = _write(tmp_path / "cfg.json", {"seeds": {"master": 5}, "replicas": {"trees": 300}, "profile": "smoke"})
        config = load_config(path, seed=9, workers=3, output_dir=str(tmp_path / "out"))
        assert config.master_seed == 9
        assert config.workers == 3
        assert config.output_dir == str(tmp_path / "out")
        assert config.replica("trees") == 300
        assert config.replica("spine_reps") == DEFAULT_REPLICAS["spine_reps"]
        assert config.source_path == str(path)

    def test_dict_round_trip(self):
        config = ExperimentConfig(alpha=0.5, replicas={"trees": 250}, tolerances={"se_multiplier": 4.0})
        again = ExperimentConfig.from_dict(config.to_dict())
        assert again.to_dict() == config.to_dict()

    @pytest.mark.parametrize(
        "changes",
        [
            {"suites": ("spectral", "bogus")},
            {"profile": "huge"},
            {"workers": 0},
            {"alpha": 0.0},
            {"x0": 0.0},
        ],
    )
    def test_invalid_configs(self, changes):
        config = ExperimentConfig()
        for key, value in changes.items():
            setattr(config, key, value)
        with pytest.raises(ConfigurationError):
            validate_config(config)

    def test_missing_and_malformed_files(self, tmp_path):
        with pytest.raises(ConfigurationError):
            load_config(tmp_path / "absent.json")
        (tmp_path / "broken.json").write_text("[", encoding="utf-8")
        with pytest.raises(ConfigurationError):
            load_config(tmp_path / "broken.json")


class TestJsonWriter:
    def test_non_finite_and_numpy_values(self):
        data = {"a": np.float64("nan"), "b": float("inf"), "c": -np.inf, "d": np.arange(2), "e": np.int64(3)}
        assert to_jsonable(data) == {"a": "nan", "b": "inf", "c": "-inf", "d": [0, 1], "e": 3}

    def test_objects_with_to_dict(self):
        check = CheckResult("spectral", "chi", PASS, {"residual": 1e-13})
        assert to_jsonable(check)["verdict"] == PASS

    def test_sorted_keys_and_atomic_write(self, tmp_path):
        target = write_json({"z": 1, "a": [1.5]}, tmp_path / "sub" / "out.json")
        text = target.read_text(encoding="utf-8")
        assert text == dumps({"a": [1.5], "z": 1})
        assert text.index('"a"') < text.index('"z"')
        assert not (tmp_path / "sub" / "out.json.tmp").exists()
        assert read_json(target) == {"a": [1.5], "z": 1}


class TestCsvExporter:
    def test_full_precision_floats(self, tmp_path):
        path = write_rows_csv([{"x": 0.1, "n": 1}, {"x": 1.0 / 3.0, "n": 2}], tmp_path / "rows.csv")
        lines = path.read_text(encoding="utf-8").splitlines()
        assert lines[0] == "x,n"
        assert lines[1] == "0.10000000000000001,1"
        assert float(lines[2].split(",")[0]) == 1.0 / 3.0

    def test_explicit_columns(self, tmp_path):
        path = write_rows_csv([{"a": 1, "b": 2}], tmp_path / "cols.csv", columns=["b", "a"])
        assert path.read_text(encoding="utf-8").splitlines() == ["b,a", "2,1"]

    def test_checks_detail_is_compact_json(self, tmp_path):
        rows = [CheckResult("tails", "hill", PASS, {"z": 2.0, "a": float("nan")}, "ok").to_dict()]
        path = write_checks_csv(rows, tmp_path / "checks.csv")
        with open(path, encoding="utf-8", newline="") as f:
            read = list(csv.DictReader(f))
        assert list(read[0]) == CHECK_COLUMNS
        assert read[0]["detail"] == '{"a":"nan","z":2.0}'
        assert read[0]["verdict"] == PASS
