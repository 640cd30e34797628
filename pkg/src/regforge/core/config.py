"""Tool settings: numerical tolerances and defaults shared by every run.

Layers, later ones winning field by field:

- ``regforge/config/default.toml`` inside the package
- ``~/.config/regforge/config.toml``
- ``./regforge.toml``
- ``REGFORGE_<SECTION>__<FIELD>`` environment variables and ``.env``
- dot-path overrides passed to ``load_config``

``REGFORGE_VERIFY__SEED=3`` changes that one field; the rest of ``[verify]``
still comes from the TOML layers. A run file (``core.runconfig``) is merged on
top of the result section by section.
"""

from __future__ import annotations

import tomllib
from importlib.resources import files
from pathlib import Path
from typing import Any, Literal

from pydantic import BaseModel, ConfigDict, Field
from pydantic_settings import (
    BaseSettings,
    PydanticBaseSettingsSource,
    SettingsConfigDict,
)

_USER_CONFIG = Path.home() / ".config" / "regforge" / "config.toml"
_PROJECT_CONFIG = Path("regforge.toml")


class NumericsConfig(BaseModel):
    """Tolerances and caps of the dense matrix kernels."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    tol_solve: float = 1e-10
    pivot_tol: float = 1e-13
    eig_residual_tol: float = 1e-8
    lyapunov_tol: float = 1e-9
    care_tol: float = 1e-8
    newton_tol: float = 1e-13
    newton_max_iter: int = 100
    # Eigenvalues with real part >= -stab_margin are moved by pre-stabilization
    stab_margin: float = 0.1
    # Largest Lyapunov dimension solved through the Kronecker system
    kron_max_dim: int = 24
    expm_norm_cap: float = 1e4
    symmetry_tol: float = 1e-10
    imag_residue_tol: float = 1e-12


class DesignConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    q_weight: float = Field(1.0, ge=0.0)
    r_weight: float = Field(1.0, gt=0.0)
    observer_q_weight: float = Field(1.0, ge=0.0)
    observer_r_weight: float = Field(1.0, gt=0.0)
    im_q_weight: float = Field(1.0, gt=0.0)
    im_r_weight: float = Field(1.0, gt=0.0)
    # Stability margin requested for G1 + B1 K1
    im_margin: float = Field(0.5, ge=0.0)
    tz_rel_tol: float = Field(1e-8, gt=0.0)
    # Rank of the truncated H_K; None uses the exact grid value
    hk_truncation: int | None = Field(None, ge=0)
    workers: int = Field(4, ge=1)


class SimulationConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    t_final: float = Field(30.0, gt=0.0)
    # None means dt_fraction * t_final
    dt: float | None = Field(None, gt=0.0)
    dt_fraction: float = Field(1e-3, gt=0.0, le=1.0)
    window_fraction: float = Field(0.2, gt=0.0, le=1.0)
    method: Literal["cn", "exact"] = "cn"
    snapshot_every: int | None = Field(None, ge=1)

    @property
    def step(self) -> float:
        """Effective time step."""
        return self.dt if self.dt is not None else self.dt_fraction * self.t_final


class VerifyConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    stab_floor: float = 1e-6
    blocking_tol: float = 1e-8
    sylvester_tol: float = 1e-8
    route_tol: float = 1e-9
    route_probes: int = Field(10, ge=0)
    assembly_tol: float = 1e-12
    tracking_tol: float = 1e-3
    perturbations: list[float] = Field(default_factory=lambda: [-0.1, 0.0, 0.1])
    seed: int = 0


def _read_toml(path: Path) -> dict[str, Any]:
    """Parsed ``path``, or ``{}`` when there is no such file."""
    try:
        with path.open("rb") as fh:
            return tomllib.load(fh)
    except FileNotFoundError:
        return {}


def _packaged_defaults() -> dict[str, Any]:
    text = (files("regforge.config") / "default.toml").read_text(encoding="utf-8")
    return tomllib.loads(text)


class _TomlLayer(PydanticBaseSettingsSource):
    """One TOML file as a pydantic-settings source (sections as top-level keys)."""

    def __init__(self, settings_cls: type[BaseSettings], sections: dict[str, Any]) -> None:
        super().__init__(settings_cls)
        self.sections = sections

    def get_field_value(self, field: Any, field_name: str) -> tuple[Any, str, bool]:
        return self.sections.get(field_name), field_name, False

    def __call__(self) -> dict[str, Any]:
        return {k: v for k, v in self.sections.items() if k in self.settings_cls.model_fields}


class RegforgeConfig(BaseSettings):
    model_config = SettingsConfigDict(
        env_prefix="REGFORGE_",
        env_nested_delimiter="__",
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )

    numerics: NumericsConfig = NumericsConfig()
    design: DesignConfig = DesignConfig()
    simulation: SimulationConfig = SimulationConfig()
    verify: VerifyConfig = VerifyConfig()

    @classmethod
    def settings_customise_sources(
        cls,
        settings_cls: type[BaseSettings],
        init_settings: PydanticBaseSettingsSource,
        env_settings: PydanticBaseSettingsSource,
        dotenv_settings: PydanticBaseSettingsSource,
        file_secret_settings: PydanticBaseSettingsSource,
    ) -> tuple[PydanticBaseSettingsSource, ...]:
        # Earlier sources win per field.
        toml_layers = [_read_toml(_PROJECT_CONFIG), _read_toml(_USER_CONFIG), _packaged_defaults()]
        return (
            init_settings,
            env_settings,
            dotenv_settings,
            *(_TomlLayer(settings_cls, layer) for layer in toml_layers),
        )


def _nest(flat: dict[str, object]) -> dict[str, Any]:
    """``{"verify.seed": 3, "simulation.dt": None}`` -> ``{"verify": {"seed": 3}}``."""
    tree: dict[str, Any] = {}
    for dotted, value in flat.items():
        if value is None:
            continue
        *sections, leaf = dotted.split(".")
        node = tree
        for section in sections:
            node = node.setdefault(section, {})
        node[leaf] = value
    return tree


def load_config(**overrides: object) -> RegforgeConfig:
    """Settings from every layer, with ``overrides`` on top.

    Override keys are dot paths such as ``numerics.care_tol``. ``None`` values
    are skipped, so CLI flags the user did not pass leave env and TOML alone.
    """
    return RegforgeConfig(**_nest(overrides))
