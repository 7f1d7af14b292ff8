"""Experiment configuration: a versioned YAML schema validated with pydantic."""
from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Literal, Optional

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from ..errors import ExpressionError, InvalidArgument
from ..expr import parse_expression

SCHEMA_VERSION = "spmelab.config/1"
ExperimentKind = Literal["simulate", "hole-fill", "propagation", "entropy", "bounds-only", "validate"]


class ConfigError(InvalidArgument):
    """Configuration failed schema validation or could not be read."""


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class GridSpec(_Strict):
    lo: list[float] = Field(default_factory=lambda: [-1.0])
    hi: list[float] = Field(default_factory=lambda: [1.0])
    h: float = Field(1.0 / 64, gt=0)

    @model_validator(mode="after")
    def _shape(self) -> "GridSpec":
        if len(self.lo) != len(self.hi) or len(self.lo) not in (1, 2):
            raise ValueError("lo and hi must both have 1 or 2 entries")
        if any(a >= b for a, b in zip(self.lo, self.hi)):
            raise ValueError("every lo must be below the matching hi")
        return self

    @property
    def d(self) -> int:
        return len(self.lo)


class SignalSpec(_Strict):
    kind: Literal["brownian", "fbm", "linear-drift", "zero"] = "zero"
    hurst: float = Field(0.5, gt=0, lt=1)
    rate: float = 1.0
    dt: float = Field(1.0 / 4096, gt=0)
    horizon: float = Field(1.0, gt=0)
    seeds: list[int] = Field(default_factory=lambda: [0])

    @field_validator("seeds")
    @classmethod
    def _nonempty(cls, v: list[int]) -> list[int]:
        if not v:
            raise ValueError("at least one seed is required")
        if any(s < 0 for s in v):
            raise ValueError("seeds must be non-negative")
        return v


class SolverSpec(_Strict):
    dt: Optional[float] = Field(None, gt=0, description="defaults to h^2")
    newton_tol: float = Field(1e-10, gt=0)
    newton_max: int = Field(50, ge=1)
    delta_reg: Optional[float] = Field(None, ge=0)
    support_threshold: Optional[float] = Field(None, ge=0)
    save_every: int = Field(1, ge=1)


class InitialSpec(_Strict):
    kind: Literal["zero", "barenblatt", "bump"] = "barenblatt"
    center: list[float] = Field(default_factory=lambda: [0.0])
    mass: float = Field(0.1, gt=0, description="Barenblatt C_B or bump height")
    t0: float = Field(0.01, gt=0, description="Barenblatt time offset")
    radius: float = Field(0.25, gt=0, description="bump radius")


class HoleFillSpec(_Strict):
    R: float = Field(1.0, gt=0)
    H: float = Field(1.0, gt=0)
    center: list[float] = Field(default_factory=lambda: [0.0])
    window_factor: float = Field(2.0, gt=0, description="noise window end in units of T_det")
    t_end: Optional[float] = Field(None, gt=0)
    refine: int = Field(4, ge=1)
    bounds: list[Literal["deterministic", "homogeneous", "small-ball", "small-time"]] = Field(
        default_factory=lambda: ["deterministic", "small-ball", "small-time"]
    )


class PropagationSpec(_Strict):
    initial: InitialSpec = Field(default_factory=InitialSpec)
    t_end: float = Field(0.1, gt=0)
    s_values: list[float] = Field(default_factory=lambda: [0.0])
    h_values: list[float] = Field(default_factory=lambda: [0.1, 0.2])
    refine: int = Field(2, ge=1)


class EntropySpec(_Strict):
    eps: list[float] = Field(default_factory=lambda: [1 / 8, 1 / 16, 1 / 32, 1 / 64])
    delta: float = Field(0.5, gt=0)
    kappa: float = Field(0.5, gt=0)
    cells_per_eps: int = Field(16, ge=4)
    steps: int = Field(400, ge=10)
    superposition_checks: int = Field(1, ge=0)


class ValidateSpec(_Strict):
    suites: list[Literal["oracle", "comparison", "transforms", "fbm", "hole-fill", "barrier"]] = Field(
        default_factory=lambda: ["oracle", "comparison", "transforms", "fbm", "hole-fill", "barrier"]
    )
    comparison_pairs: int = Field(10, ge=1)
    c_det_scale: float = Field(1.0, gt=0, description="test hook: perturb C_det in bound formulas")
    force_threshold_zero: bool = False


class ExperimentConfig(_Strict):
    schema_version: Literal["spmelab.config/1"] = SCHEMA_VERSION
    kind: ExperimentKind
    m: float = Field(2.0, gt=1)
    lam: float = Field(0.0, ge=0)
    coefficients: list[str] = Field(default_factory=lambda: ["0"])
    grid: GridSpec = Field(default_factory=GridSpec)
    signal: SignalSpec = Field(default_factory=SignalSpec)
    solver: SolverSpec = Field(default_factory=SolverSpec)
    hole_fill: HoleFillSpec = Field(default_factory=HoleFillSpec)
    propagation: PropagationSpec = Field(default_factory=PropagationSpec)
    entropy: EntropySpec = Field(default_factory=EntropySpec)
    validate_: ValidateSpec = Field(default_factory=ValidateSpec, alias="validate")
    workers: int = Field(1, ge=1)
    plots: bool = False
    output: str = "runs/out"

    model_config = ConfigDict(extra="forbid", frozen=True, populate_by_name=True)

    @field_validator("coefficients")
    @classmethod
    def _coeffs(cls, v: list[str]) -> list[str]:
        if not v:
            raise ValueError("at least one coefficient expression is required")
        return v

    @model_validator(mode="after")
    def _parse_coefficients(self) -> "ExperimentConfig":
        for src in self.coefficients:
            try:
                parse_expression(src, self.grid.d)
            except ExpressionError as exc:
                raise ValueError(str(exc)) from None
        return self

    def with_overrides(self, seed: int | None = None, out: str | None = None) -> "ExperimentConfig":
        data = self.model_dump(by_alias=True)
        if seed is not None:
            data["signal"]["seeds"] = [int(seed)]
        if out is not None:
            data["output"] = str(out)
        return ExperimentConfig.model_validate(data)

    def canonical(self) -> dict:
        """Dump without the output location, which does not affect results."""
        data = self.model_dump(by_alias=True)
        data.pop("output")
        return data

    def config_hash(self) -> str:
        blob = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def parse_config(data: dict) -> ExperimentConfig:
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(f"invalid configuration:\n{exc}") from None


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    try:
        data = yaml.safe_load(path.read_text())
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"config {path} must be a mapping")
    return parse_config(data)
