"""
tests/unit/test_errors_health.py

Exception hierarchy and the preflight checks run before any suite.
"""
from __future__ import annotations

import sys
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parent.parent.parent
sys.path.insert(0, str(ROOT))

from domain.errors import (
    ConfigurationError,
    ContractionError,
    CriticalError,
    DivergentFunctionalError,
    GrowthFragError,
    InsufficientSamplesError,
    InvalidSpecError,
    MomentNotFiniteError,
    NoRootError,
    NonConvergenceError,
    NonPositiveMeanError,
    NumericalError,
    OutputDirectoryError,
    PathHorizonError,
    PermanentError,
    PreconditionError,
    TooManyRootsError,
    TruncationBoundError,
)
from domain.models.experiment import ExperimentConfig
from infrastructure.health_check import PreflightResult, run_preflight


class TestHierarchy:
    @pytest.mark.parametrize(
        "exc, parent",
        [
            (InvalidSpecError, PermanentError),
            (PathHorizonError, PermanentError),
            (InsufficientSamplesError, PermanentError),
            (NonConvergenceError, NumericalError),
            (NoRootError, NumericalError),
            (TooManyRootsError, NumericalError),
            (TruncationBoundError, NumericalError),
            (DivergentFunctionalError, PreconditionError),
            (MomentNotFiniteError, PreconditionError),
            (NonPositiveMeanError, PreconditionError),
            (ContractionError, PreconditionError),
            (ConfigurationError, CriticalError),
            (OutputDirectoryError, CriticalError),
        ],
    )
    def test_parents(self, exc, parent):
        assert issubclass(exc, parent)
        assert issubclass(exc, GrowthFragError)

    def test_groups_are_disjoint(self):
        assert not issubclass(PreconditionError, NumericalError)
        assert not issubclass(CriticalError, PermanentError)


class TestPreflightResult:
    def test_warning_keeps_pass(self):
        result = PreflightResult()
        result.add_warning("slow disk")
        assert result.passed
        result.add_error("bad spec")
        assert not result.passed
        assert result.errors == ["bad spec"]


class TestRunPreflight:
    def test_default_config_passes(self, tmp_path):
        config = ExperimentConfig(output_dir=str(tmp_path / "out"))
        result = run_preflight(config, logs_dir=tmp_path / "logs")
        assert result.passed, result.errors
        assert (tmp_path / "out").is_dir()

    def test_unknown_fixture_is_an_error(self, tmp_path):
        config = ExperimentConfig(spec_path="fixture:unknown", output_dir=str(tmp_path))
        result = run_preflight(config, logs_dir=tmp_path / "logs")
        assert not result.passed
        assert any("fixture:unknown" in e for e in result.errors)

    def test_desk_minimums(self, tmp_path):
        config = ExperimentConfig(output_dir=str(tmp_path), replicas={"trees": 50})
        result = run_preflight(config, logs_dir=tmp_path / "logs")
        assert not result.passed
        assert any("replicas.trees=50" in e for e in result.errors)

    def test_smoke_profile_relaxes_minimums(self, tmp_path):
        config = ExperimentConfig(output_dir=str(tmp_path), replicas={"trees": 50}, profile="smoke")
        result = run_preflight(config, logs_dir=tmp_path / "logs")
        assert result.passed, result.errors
        assert any("smoke" in w for w in result.warnings)

    def test_smoke_profile_still_has_a_floor(self, tmp_path):
        config = ExperimentConfig(output_dir=str(tmp_path), replicas={"trees": 3}, profile="smoke")
        assert not run_preflight(config, logs_dir=tmp_path / "logs").passed
