"""
PAIR-Agent: Configuration Management

Hyperparameter configuration with environment variable hierarchy:
CLI args > Environment variables (PAIR_*) > .env file > Defaults

Covers:
- Structure learning (ess, structural prior weight, search limits)
- Log normalization (bins per metric, evidence window)
- Inference (tolerance, sweep budget, detection thresholds)
- Planning (tie tolerance, enumeration threshold, escalation ladder)
- Experiment definition (scenario, rounds, seed, output directory)
"""

from __future__ import annotations

from enum import Enum
from pathlib import Path
from typing import Any

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from .errors import ConfigError, format_validation_error
from .utils.env import load_env_file


# Spellings of an unbounded evidence window (`--window unbounded`, PAIR_WINDOW=none).
UNBOUNDED_WINDOW = frozenset({"unbounded", "none", "inf", "all"})


class LogLevel(str, Enum):
    """Logging levels."""

    DEBUG = "debug"
    INFO = "info"
    WARNING = "warning"
    ERROR = "error"


class AgentSettings(BaseSettings):
    """
    Hyperparameters of the resilience agent.

    Environment variables take precedence over .env file values.
    """

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        env_prefix="PAIR_",
        extra="ignore",
        case_sensitive=False,
    )

    # Structure learning
    ess: float = Field(default=1.0, gt=0.0, description="BDeu equivalent sample size")
    structure_lambda: float = Field(
        default=1.0, ge=0.0, description="Weight of the structural prior (per differing edge)"
    )
    max_parents: int = Field(default=3, ge=1, le=6, description="Maximum parents per variable")
    restarts: int = Field(default=5, ge=1, le=50, description="Hill-climbing restarts")
    search_epsilon: float = Field(
        default=1e-9, ge=0.0, description="Minimum score gain for accepting a move"
    )
    perturbation_moves: int = Field(
        default=3, ge=0, le=50, description="Random moves applied before each extra restart"
    )

    # Log normalization
    bins: int = Field(default=3, ge=1, le=10, description="Quantile bins per continuous metric")
    window: int | None = Field(
        default=50,
        ge=1,
        description="Evidence window in rounds (None or 'unbounded' keeps everything)",
    )

    # Inference
    tol: float = Field(default=1e-6, gt=0.0, description="Mean-field convergence tolerance")
    max_sweeps: int = Field(default=100, ge=1, description="Mean-field sweep budget")
    detection_threshold: float = Field(
        default=0.5, gt=0.0, lt=1.0, description="Q(f=active) above which a fault is reported"
    )
    attribution_margin: float = Field(
        default=0.05, gt=0.0, lt=1.0, description="|hw - sw| below which origin is undetermined"
    )

    # Planning
    epsilon_g: float = Field(
        default=1e-9, ge=0.0, description="Expected-free-energy tie tolerance"
    )
    enumeration_threshold: float = Field(
        default=0.2, gt=0.0, lt=1.0, description="Q(f=active) above which targets are suspects"
    )
    max_restart_attempts: int = Field(
        default=2, ge=1, description="Restarts on one node before escalation is offered"
    )
    nominal_mass: float = Field(
        default=0.9, gt=0.0, lt=1.0, description="Preferred-distribution mass on the nominal bin"
    )
    action_costs_enabled: bool = Field(
        default=False, description="Add per-type action costs to G (breaks the do-nothing bound)"
    )

    # Loop
    bootstrap_rounds: int = Field(
        default=30, ge=1, description="Observation-only warm-up rounds before the agent acts"
    )

    # Logging
    log_level: LogLevel = Field(default=LogLevel.INFO, description="Console logging level")

    @field_validator("window", mode="before")
    @classmethod
    def validate_window(cls, v: Any) -> Any:
        if isinstance(v, str) and v.strip().lower() in UNBOUNDED_WINDOW:
            return None
        return v

    def to_dict(self) -> dict[str, Any]:
        """Convert to a JSON-friendly dictionary for display and artifacts."""
        return self.model_dump(mode="json")


class ExperimentConfig(BaseModel):
    """One seeded experiment: a scenario, a round budget and the agent's settings."""

    model_config = ConfigDict(extra="forbid")

    scenario: str = Field(description="Scenario file path or committed scenario name")
    rounds: int = Field(ge=1, description="Agent rounds after the bootstrap phase")
    seed: int = Field(default=0, ge=0, description="Master seed")
    out: Path = Field(default=Path("artifacts"), description="Artifact directory")
    baseline: bool = Field(
        default=False, description="Force do-nothing every round (comparator run)"
    )
    agent: AgentSettings = Field(default_factory=AgentSettings)

    @field_validator("scenario")
    @classmethod
    def validate_scenario(cls, v: str) -> str:
        if not v.strip():
            raise ValueError("scenario cannot be empty")
        return v.strip()


def build_settings(overrides: dict[str, Any] | None = None) -> AgentSettings:
    """
    Build AgentSettings from .env, environment and explicit overrides.

    Raises:
        ConfigError: naming the offending field when a value is out of range
    """
    load_env_file()
    clean = {k: v for k, v in (overrides or {}).items() if v is not None}
    try:
        return AgentSettings(**clean)
    except ValidationError as e:
        raise format_validation_error(e, "agent hyperparameters") from e


def build_experiment(**fields: Any) -> ExperimentConfig:
    """Validate an experiment definition, raising ConfigError on bad values."""
    try:
        return ExperimentConfig(**fields)
    except ValidationError as e:
        raise format_validation_error(e, "experiment config") from e


def load_experiment(path: Path) -> ExperimentConfig:
    """Load an experiment config previously written by the runner."""
    if not path.is_file():
        raise ConfigError(f"Experiment config not found: {path}", field="config")
    try:
        return ExperimentConfig.model_validate_json(path.read_text(encoding="utf-8"))
    except ValidationError as e:
        raise format_validation_error(e, f"experiment config {path}") from e


# Global settings instance
_settings: AgentSettings | None = None


def get_settings() -> AgentSettings:
    """Get the global settings instance."""
    global _settings
    if _settings is None:
        _settings = build_settings()
    return _settings


def set_settings(settings: AgentSettings) -> None:
    """Set the global settings instance."""
    global _settings
    _settings = settings


def reload_settings() -> AgentSettings:
    """Reload settings from environment variables."""
    global _settings
    _settings = build_settings()
    return _settings


__all__ = [
    "UNBOUNDED_WINDOW",
    "LogLevel",
    "AgentSettings",
    "ExperimentConfig",
    "build_settings",
    "build_experiment",
    "load_experiment",
    "get_settings",
    "set_settings",
    "reload_settings",
]
