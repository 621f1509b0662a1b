"""Strictly typed Pydantic models for beamsync experiment configuration."""
from functools import lru_cache
from typing import Any, Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from beamsync.errors import ConfigError
from beamsync.optimizer import run_optimized_model
from beamsync.perturbation import (
    ConstantSchedule,
    Family,
    PerturbationDist,
    StepSchedule,
    parse_radians,
)

DriftLaw = Literal["sign", "uniform"]


@lru_cache(maxsize=32)
def _optimized_table(n_sensors: int, family: str, horizon: int):
    _, params = run_optimized_model(n_sensors, family, horizon)
    return params.slot_table()


class ScheduleStep(BaseModel):
    """One row of a step schedule: ``dist`` applies from ``from_slot`` on."""
    model_config = ConfigDict(extra="forbid")

    from_slot: int = Field(ge=1, description="First timeslot this distribution applies to")
    dist: PerturbationDist = Field(description="Perturbation distribution")


class ExperimentConfig(BaseModel):
    """One experiment block of a config file or of the preset catalogue."""
    model_config = ConfigDict(extra="forbid")

    type: str = Field(description="Experiment type (registry key)")
    figure: Optional[str] = Field(default=None, description="Figure label written into output headers")
    description: Optional[str] = Field(default=None, description="Free text")
    path: str = Field(default="{experiment-name}", description="Output directory template (supports {experiment-name})")

    n_sensors: int = Field(default=10, ge=1)
    gains: Optional[List[float]] = Field(default=None, description="Per-sensor channel gains, unit if omitted")

    dist: Optional[PerturbationDist] = None
    schedule: Optional[List[ScheduleStep]] = None
    optimized: Optional[Family] = Field(default=None, description="Family for the greedy model-optimised schedule")

    horizon: int = Field(default=1000, ge=1)
    seeds: List[int] = Field(default_factory=lambda: [1])
    feedback_window: Optional[int] = Field(default=None, description="Comparison window W, null for the running record")
    doppler_magnitude: float = Field(default=0.0, description="Channel drift magnitude, radians per timeslot")
    drift_law: DriftLaw = "sign"
    workers: int = Field(default=1, ge=1)

    checks: Dict[str, float] = Field(default_factory=dict, description="Check name -> threshold")
    params: Dict[str, Any] = Field(default_factory=dict, description="Type-specific parameters")

    @field_validator('seeds', mode='before')
    @classmethod
    def parse_seeds(cls, v):
        if isinstance(v, int) and not isinstance(v, bool):
            if v < 1:
                raise ValueError("seed count must be >= 1")
            return list(range(1, v + 1))
        if isinstance(v, list) and not v:
            raise ValueError("seeds must be non-empty")
        return v

    @field_validator('feedback_window', mode='before')
    @classmethod
    def parse_window(cls, v):
        if v is None or (isinstance(v, str) and v.strip().lower() == "unbounded"):
            return None
        if isinstance(v, bool) or not isinstance(v, int) or v < 1:
            raise ValueError(f"feedback_window must be an integer >= 1 or 'unbounded', got {v!r}")
        return v

    @field_validator('doppler_magnitude', mode='before')
    @classmethod
    def parse_doppler(cls, v):
        value = parse_radians(v)
        if value < 0:
            raise ValueError("doppler_magnitude must be >= 0")
        return value

    @field_validator('schedule')
    @classmethod
    def validate_schedule(cls, v):
        if v is None:
            return v
        if not v:
            raise ValueError("schedule must have at least one step")
        steps = sorted(v, key=lambda s: s.from_slot)
        if steps[0].from_slot != 1:
            raise ValueError("the first schedule step must start at slot 1")
        if len({s.from_slot for s in steps}) != len(steps):
            raise ValueError("schedule steps must start at distinct slots")
        return steps

    @model_validator(mode='after')
    def validate_consistency(self):
        chosen = [k for k in ("dist", "schedule", "optimized") if getattr(self, k) is not None]
        if len(chosen) > 1:
            raise ValueError(f"dist, schedule and optimized are mutually exclusive (got {', '.join(chosen)})")
        if self.gains is not None:
            if len(self.gains) != self.n_sensors:
                raise ValueError(f"gains has {len(self.gains)} entries for n_sensors={self.n_sensors}")
            if any(g < 0 for g in self.gains):
                raise ValueError("gains must be nonnegative")
        return self

    @property
    def has_distribution(self) -> bool:
        return any(getattr(self, k) is not None for k in ("dist", "schedule", "optimized"))

    def build_schedule(self):
        """Per-slot distribution source for the simulator and the model."""
        if self.dist is not None:
            return ConstantSchedule(self.dist)
        if self.schedule is not None:
            return StepSchedule([(s.from_slot, s.dist) for s in self.schedule])
        if self.optimized is not None:
            return _optimized_table(self.n_sensors, self.optimized, self.horizon)
        raise ConfigError(f"experiment type '{self.type}' needs one of dist, schedule or optimized")

    def with_dist(self, dist: PerturbationDist) -> "ExperimentConfig":
        return self.model_copy(update={"dist": dist, "schedule": None, "optimized": None})

    def with_overrides(self, seed: Optional[int] = None, horizon: Optional[int] = None) -> "ExperimentConfig":
        """Apply CLI overrides: --seed S gives S, S+1, ... keeping the seed count."""
        update: Dict[str, Any] = {}
        if seed is not None:
            update["seeds"] = list(range(seed, seed + len(self.seeds)))
        if horizon is not None:
            if horizon < 1:
                raise ConfigError("horizon must be >= 1")
            update["horizon"] = horizon
        return self.model_copy(update=update) if update else self

