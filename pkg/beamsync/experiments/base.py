"""Base experiment class, results and acceptance checks."""
import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Literal, Optional, Type

from pandas import DataFrame
from pydantic import BaseModel, ConfigDict, ValidationError

from beamsync.errors import ConfigError
from beamsync.models import ExperimentConfig
from beamsync.writers import get_writer

logger = logging.getLogger(__name__)

Direction = Literal["at_least", "at_most", "below"]

MANIFEST_NAME = "manifest.yaml"


class ExperimentParams(BaseModel):
    """Base for the type-specific ``params`` block."""
    model_config = ConfigDict(extra="forbid")


@dataclass(frozen=True)
class CheckResult:
    name: str
    value: float
    threshold: float
    direction: Direction

    @property
    def passed(self) -> bool:
        if math.isnan(self.value):
            return False
        if self.direction == "at_least":
            return self.value >= self.threshold
        if self.direction == "at_most":
            return self.value <= self.threshold
        return self.value < self.threshold

    @property
    def relation(self) -> str:
        return {"at_least": ">=", "at_most": "<=", "below": "<"}[self.direction]


@dataclass
class ExperimentResult:
    name: str
    figure: Optional[str]
    output_dir: Path
    files: List[Path] = field(default_factory=list)
    metrics: Dict[str, float] = field(default_factory=dict)
    checks: List[CheckResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)


class Experiment(ABC):
    """Base class for all experiments."""

    params_model: Type[ExperimentParams] = ExperimentParams
    # metric name -> direction the value must satisfy against its threshold
    check_directions: Dict[str, Direction] = {}
    requires_distribution: bool = True

    def __init__(self, name: str, config: ExperimentConfig, relative_to: Optional[Path] = None):
        """
        Initialize experiment.

        Args:
            name: Experiment name (the key in the experiments mapping)
            config: Validated experiment configuration
            relative_to: Base directory for the output path template
        """
        self.name = name
        self.config = config
        self.relative_to = relative_to if relative_to else Path.cwd()
        try:
            self.params = self.params_model(**config.params)
        except ValidationError as e:
            raise ConfigError(f"experiment '{name}': invalid params: {e}") from e
        unknown = sorted(set(config.checks) - set(self.check_directions))
        if unknown:
            raise ConfigError(
                f"experiment '{name}': unknown checks {unknown} for type '{config.type}' "
                f"(available: {sorted(self.check_directions)})"
            )
        if self.requires_distribution and not config.has_distribution:
            raise ConfigError(f"experiment '{name}': type '{config.type}' needs one of dist, schedule or optimized")
        self.output_dir = self._resolve_path(config.path, **{"experiment-name": name})
        self.files: List[Path] = []

    @abstractmethod
    def run(self) -> Dict[str, float]:
        """Produce the outputs and return the metrics the checks are evaluated on."""
        pass

    def execute(self) -> ExperimentResult:
        logger.info("running experiment %s (%s)", self.name, self.config.type)
        metrics = self.run()
        checks = self.evaluate_checks(metrics)
        for c in checks:
            logger.info("%s: %s = %.6g %s %.6g -> %s", self.name, c.name, c.value, c.relation, c.threshold,
                        "PASS" if c.passed else "FAIL")

        manifest = get_writer("manifest")
        manifest.init_writer(self.name, self.config.figure, self.config.model_dump(mode="json"))
        for path in self.files:
            manifest.add_file(path, self.output_dir)
        for c in checks:
            manifest.add_check(c.name, c.value, c.threshold, c.passed)
        manifest.metrics = metrics
        manifest_path = manifest.write(self.output_dir / MANIFEST_NAME)

        return ExperimentResult(
            name=self.name,
            figure=self.config.figure,
            output_dir=self.output_dir,
            files=self.files + [manifest_path],
            metrics=metrics,
            checks=checks,
        )

    def evaluate_checks(self, metrics: Dict[str, float]) -> List[CheckResult]:
        return [
            CheckResult(name, float(metrics.get(name, math.nan)), float(threshold), self.check_directions[name])
            for name, threshold in self.config.checks.items()
        ]

    def write_frame(self, filename: str, frame: DataFrame, **metadata) -> Path:
        header = {}
        if self.config.figure:
            header["figure"] = self.config.figure
        header["experiment"] = self.name
        header.update({k: str(v) for k, v in metadata.items()})
        path = get_writer("csv").write(self.output_dir / filename, frame, header)
        self.files.append(path)
        return path

    def _resolve_path(self, path_template: str, **kwargs) -> Path:
        """Resolve path template with variables."""
        resolved = path_template.format(**kwargs)
        return (self.relative_to / resolved).absolute()
