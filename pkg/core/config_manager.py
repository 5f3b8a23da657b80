import json
import os
import logging
from typing import Dict, List, Any, Optional, Type

from pydantic import BaseModel, Field, field_validator

from core.experiments import ThresholdScan
from core.models import BackendType, OdeSpec, QuadratureSpec
from core.wkb import WkbConvention

logger = logging.getLogger(__name__)

ENV_WORKERS = "GWKB_WORKERS"
ENV_OUTPUT_DIR = "GWKB_OUTPUT_DIR"
ENV_LOG_LEVEL = "GWKB_LOG_LEVEL"

# Descriptive keys a preset may carry next to its command sections
PRESET_METADATA = ("name", "description", "version")


class ConfigError(Exception):
    """The config file is unreadable or names an unknown command."""


class RunConfig(BaseModel):
    """Settings shared by every command."""
    output_dir: str = Field(default="exports", description="Directory for CSV and JSON outputs")
    workers: int = Field(default=1, ge=1, description="Concurrent sweep cells")
    record_wall_time: bool = Field(default=False, description="Embed wall time (breaks byte-identical reruns)")
    quadrature: QuadratureSpec = Field(default_factory=QuadratureSpec)
    ode: OdeSpec = Field(default_factory=OdeSpec)
    convention: WkbConvention = Field(default=WkbConvention.UNIT, description="WKB integration constants")

    def backend_config(self) -> Dict[str, Any]:
        return {
            "quadrature": self.quadrature.model_dump(),
            "ode": self.ode.model_dump(),
            "convention": self.convention.value,
        }


class ProblemConfig(RunConfig):
    n: int = Field(default=1, ge=1, le=40, description="Qubit count")
    alpha: int = Field(default=0, ge=0, le=3, description="Schedule gap power")


class DynamicsConfig(ProblemConfig):
    t_f: float = Field(default=50.0, gt=0)
    backends: List[BackendType] = Field(
        default_factory=lambda: [BackendType.EXACT, BackendType.WKB0, BackendType.WKB1, BackendType.ADIABATIC],
        min_length=1,
    )
    grid_points: int = Field(default=501, ge=2)


class CompareConfig(DynamicsConfig):
    @field_validator("backends")
    @classmethod
    def needs_exact(cls, v: List[BackendType]) -> List[BackendType]:
        if BackendType.EXACT not in v:
            raise ValueError("compare needs the exact backend as reference")
        return v


class SweepConfig(ProblemConfig):
    backends: List[BackendType] = Field(default_factory=lambda: [BackendType.EXACT], min_length=1)
    t_f_list: List[float] = Field(..., min_length=1)

    @field_validator("t_f_list")
    @classmethod
    def positive_times(cls, v: List[float]) -> List[float]:
        if any(not t > 0 for t in v):
            raise ValueError("every t_f must be positive")
        return v


class DistanceConfig(SweepConfig):
    backends: List[BackendType] = Field(
        default_factory=lambda: [BackendType.ADIABATIC, BackendType.WKB0, BackendType.WKB1], min_length=1,
    )
    grid_points: int = Field(default=501, ge=3)
    study: str = Field(default="distance", pattern="^(distance|asymptote|renormalization)$")


class ScanConfig(RunConfig):
    backend: BackendType = BackendType.EXACT
    p_th: float = Field(default=0.95, gt=0.0, lt=1.0)
    t_min: float = Field(default=0.1, gt=0)
    ratio: float = Field(default=1.05, gt=1.0)
    horizon_factor: float = Field(default=3.0, gt=1.0)
    t_verify_min: Optional[float] = Field(default=None, gt=0)
    t_max: float = Field(default=1e6, gt=0)
    rel_width: float = Field(default=1e-3, gt=0)

    def to_scan(self) -> ThresholdScan:
        return ThresholdScan(t_min=self.t_min, ratio=self.ratio, horizon_factor=self.horizon_factor,
                             t_verify_min=self.t_verify_min, t_max=self.t_max, rel_width=self.rel_width)


class ThresholdConfig(ScanConfig):
    n: int = Field(default=1, ge=1, le=40)
    alpha: int = Field(default=0, ge=0, le=3)


class ScalingConfig(ScanConfig):
    alpha: int = Field(default=0, ge=0, le=3)
    ns: List[int] = Field(default_factory=lambda: list(range(2, 11)), min_length=3)

    @field_validator("ns")
    @classmethod
    def distinct_sizes(cls, v: List[int]) -> List[int]:
        if len(set(v)) < 3 or min(v) < 1:
            raise ValueError("scaling needs at least three distinct positive n")
        return sorted(set(v))


COMMAND_MODELS: Dict[str, Type[RunConfig]] = {
    "dynamics": DynamicsConfig,
    "sweep": SweepConfig,
    "threshold": ThresholdConfig,
    "scaling": ScalingConfig,
    "compare": CompareConfig,
    "distance": DistanceConfig,
}


class RunConfigManager:
    """
    Resolves a command's settings from, in increasing precedence: model defaults,
    environment variables, the JSON config file section for the command, and
    explicit overrides (CLI flags).
    """

    def __init__(self, config_path: Optional[str] = None):
        self.config_path = os.path.abspath(config_path) if config_path else None
        self.sections: Dict[str, Dict[str, Any]] = {}
        self._load_config()

    def _load_config(self):
        """Load per-command sections from the JSON file, if one was given."""
        if self.config_path is None:
            logger.debug("No config file given; using built-in defaults")
            return
        try:
            with open(self.config_path, 'r') as f:
                data = json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            logger.error(f"Failed to load run config: {e}")
            raise ConfigError(f"Cannot read config file {self.config_path}: {e}") from e
        if not isinstance(data, dict):
            raise ConfigError(f"Config file {self.config_path} must hold a JSON object")
        sections = {k: v for k, v in data.items() if k not in PRESET_METADATA}
        unknown = sorted(set(sections) - set(COMMAND_MODELS))
        if unknown:
            raise ConfigError(f"Unknown command sections in {self.config_path}: {unknown}")
        if any(not isinstance(v, dict) for v in sections.values()):
            raise ConfigError(f"Command sections in {self.config_path} must be JSON objects")
        self.sections = sections
        logger.info(f"Loaded {len(self.sections)} command sections from {self.config_path}")

    @staticmethod
    def _environment() -> Dict[str, Any]:
        env: Dict[str, Any] = {}
        if os.getenv(ENV_WORKERS):
            env["workers"] = os.getenv(ENV_WORKERS)
        if os.getenv(ENV_OUTPUT_DIR):
            env["output_dir"] = os.getenv(ENV_OUTPUT_DIR)
        return env

    def resolve(self, command: str, overrides: Optional[Dict[str, Any]] = None) -> RunConfig:
        """
        Build the validated config for a command.

        Raises:
            ConfigError: unknown command
            pydantic.ValidationError: invalid values
        """
        if command not in COMMAND_MODELS:
            raise ConfigError(f"Unknown command: {command}. Available: {list(COMMAND_MODELS)}")
        merged: Dict[str, Any] = {}
        merged.update(self._environment())
        merged.update(self.sections.get(command, {}))
        merged.update({k: v for k, v in (overrides or {}).items() if v is not None})
        return COMMAND_MODELS[command](**merged)
