"""Run files: plant, signals and per-run options in one JSON document.

Sections ``numerics``, ``design``, ``simulation`` and ``verify`` are
optional and partial. Only the fields a run file actually sets override
the layered settings (``core.config``); CLI flags win over both.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from regforge.core.config import (
    DesignConfig,
    NumericsConfig,
    RegforgeConfig,
    SimulationConfig,
    VerifyConfig,
    load_config,
)
from regforge.errors import InvalidConfig, InvalidFrequencies
from regforge.model.plant import PlantConfig, plant_hash
from regforge.model.profiles import Profile
from regforge.signals.exo import ExoSignalSpec

_SECTIONS = ("numerics", "design", "simulation", "verify")


class OutputPaths(BaseModel):
    """Default artifact paths, relative to the run file's directory."""

    model_config = ConfigDict(extra="forbid")

    controller: Path | None = None
    trajectory: Path | None = None
    report: Path | None = None


class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    plant: PlantConfig
    signals: ExoSignalSpec
    numerics: NumericsConfig = Field(default_factory=NumericsConfig)
    design: DesignConfig = Field(default_factory=DesignConfig)
    simulation: SimulationConfig = Field(default_factory=SimulationConfig)
    verify: VerifyConfig = Field(default_factory=VerifyConfig)
    # Plant state at t = 0; the controller always starts at rest
    initial_state: Profile | None = None
    outputs: OutputPaths = Field(default_factory=OutputPaths)


@dataclass(frozen=True)
class ResolvedRun:
    """A run file merged with the settings layers and CLI overrides."""

    plant: PlantConfig
    signals: ExoSignalSpec
    numerics: NumericsConfig
    design: DesignConfig
    simulation: SimulationConfig
    verify: VerifyConfig
    initial_state: Any
    outputs: OutputPaths
    base_dir: Path

    @property
    def plant_hash(self) -> str:
        return plant_hash(self.plant)

    def output_path(self, name: str, explicit: Path | None = None) -> Path | None:
        """``explicit`` if given, else the run file's default for ``name``."""
        if explicit is not None:
            return Path(explicit)
        default = getattr(self.outputs, name)
        if default is None:
            return None
        return default if default.is_absolute() else self.base_dir / default


def _merge(base: BaseModel, override: BaseModel, cli: dict[str, Any]) -> BaseModel:
    data = base.model_dump()
    data.update(override.model_dump(exclude_unset=True))
    data.update({k: v for k, v in cli.items() if v is not None})
    try:
        return type(base).model_validate(data)
    except ValidationError as exc:
        raise InvalidConfig(f"invalid {type(base).__name__}: {exc}") from exc


def parse_run_config(data: Any) -> RunConfig:
    """Validate a run-file document.

    Raises:
        InvalidFrequencies: If the signal frequencies are not strictly increasing.
        InvalidConfig: On any other schema violation.
    """
    try:
        return RunConfig.model_validate(data)
    except InvalidFrequencies:
        raise
    except ValidationError as exc:
        raise InvalidConfig(f"invalid run file: {exc}") from exc


def resolve_run(
    run: RunConfig,
    settings: RegforgeConfig | None = None,
    *,
    base_dir: Path = Path("."),
    overrides: dict[str, Any] | None = None,
) -> ResolvedRun:
    """Merge ``run`` over ``settings``; ``overrides`` use ``section.field`` keys."""
    settings = settings or load_config()
    cli: dict[str, dict[str, Any]] = {name: {} for name in _SECTIONS}
    for key, value in (overrides or {}).items():
        section, _, field_name = key.partition(".")
        if section not in cli or not field_name:
            raise InvalidConfig(f"unknown override {key!r}")
        cli[section][field_name] = value
    merged = {
        name: _merge(getattr(settings, name), getattr(run, name), cli[name]) for name in _SECTIONS
    }
    run.signals.check_dimensions(1, run.plant.n_dist)
    return ResolvedRun(
        plant=run.plant,
        signals=run.signals,
        initial_state=run.initial_state,
        outputs=run.outputs,
        base_dir=Path(base_dir),
        **merged,
    )


def load_run_config(
    path: Path, settings: RegforgeConfig | None = None, **overrides: Any
) -> ResolvedRun:
    """Read a JSON run file and resolve it against the settings layers.

    Raises:
        InvalidConfig: If the file is missing, not JSON or schema-invalid.
        InvalidFrequencies: On a bad frequency list.
    """
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise InvalidConfig(f"cannot read run file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InvalidConfig(f"{path} is not valid JSON: {exc}") from exc
    return resolve_run(
        parse_run_config(data), settings, base_dir=path.parent, overrides=overrides
    )


def run_config_schema() -> dict[str, Any]:
    """JSON Schema of the run file."""
    return RunConfig.model_json_schema()
