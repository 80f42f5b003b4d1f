"""
infrastructure/io/spec_loader.py

Loading of MapSpec documents and experiment configs.

A spec source is either a JSON file validated against
docs/map_spec.schema.json or "fixture:<name>" for a shipped fixture.
"""
from __future__ import annotations

import json
import logging
from functools import lru_cache
from pathlib import Path
from typing import Optional

import jsonschema

from config.fixtures import FIXTURE_PREFIX, MAP_FIXTURES
from config.settings import MAP_SPEC_SCHEMA
from domain.errors import ConfigurationError, InvalidSpecError
from domain.models.experiment import SUITES, ExperimentConfig
from domain.models.map_spec import MapSpec
from domain.services.map_spectral import validate_spec

logger = logging.getLogger(__name__)


@lru_cache(maxsize=1)
def _schema() -> dict:
    return json.loads(Path(MAP_SPEC_SCHEMA).read_text(encoding="utf-8"))


def spec_from_document(data: dict) -> MapSpec:
    try:
        jsonschema.validate(instance=data, schema=_schema())
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise InvalidSpecError(f"schema violation at {path}: {exc.message}") from exc
    spec = MapSpec.from_dict(data)
    validate_spec(spec)
    return spec


def resolve_spec_path(source: str, base_dir: Optional[Path] = None) -> Optional[Path]:
    """Filesystem path of a spec source, or None for a fixture."""
    if source.startswith(FIXTURE_PREFIX):
        return None
    path = Path(source)
    if not path.is_absolute() and base_dir is not None:
        path = base_dir / path
    return path


def load_spec(source: str, base_dir: Optional[Path] = None) -> MapSpec:
    """MapSpec from "fixture:<name>" or a JSON file; raises InvalidSpecError or ConfigurationError."""
    if source.startswith(FIXTURE_PREFIX):
        name = source[len(FIXTURE_PREFIX):]
        factory = MAP_FIXTURES.get(name)
        if factory is None:
            raise ConfigurationError(f"unknown fixture '{name}' (known: {', '.join(sorted(MAP_FIXTURES))})")
        spec = factory()
        validate_spec(spec)
        return spec
    path = resolve_spec_path(source, base_dir)
    if not path.exists():
        raise ConfigurationError(f"spec file not found: {path}")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InvalidSpecError(f"{path}: invalid JSON ({exc})") from exc
    spec = spec_from_document(data)
    logger.info("Loaded %s from %s", spec, path)
    return spec


def load_config(
    path: Optional[Path],
    seed: Optional[int] = None,
    workers: Optional[int] = None,
    output_dir: Optional[str] = None,
) -> ExperimentConfig:
    """ExperimentConfig from JSON (or defaults when path is None) with CLI overrides applied."""
    if path is None:
        config = ExperimentConfig()
    else:
        path = Path(path)
        if not path.exists():
            raise ConfigurationError(f"config file not found: {path}")
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
            config = ExperimentConfig.from_dict(data)
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise ConfigurationError(f"{path}: {exc}") from exc
        config.source_path = str(path)
    if seed is not None:
        config.master_seed = int(seed)
    if workers is not None:
        config.workers = int(workers)
    if output_dir is not None:
        config.output_dir = str(output_dir)
    validate_config(config)
    return config


def validate_config(config: ExperimentConfig) -> None:
    unknown = [s for s in config.suites if s not in SUITES]
    if unknown:
        raise ConfigurationError(f"unknown suites: {', '.join(unknown)}")
    if config.profile not in ("desk", "smoke"):
        raise ConfigurationError(f"profile must be 'desk' or 'smoke', got '{config.profile}'")
    if config.workers < 1:
        raise ConfigurationError("workers must be >= 1")
    if config.alpha == 0.0:
        raise ConfigurationError("alpha must be non-zero")
    if not config.x0 > 0:
        raise ConfigurationError("x0 must be > 0")
