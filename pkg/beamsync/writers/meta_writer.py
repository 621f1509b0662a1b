from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional

import yaml
from pandas import DataFrame

from beamsync.writers.base import Writer
from beamsync.writers import register_writer


@register_writer('manifest')
class ManifestWriter(Writer):
    """Collects what an experiment produced and dumps it as manifest.yaml."""

    def __init__(self):
        self.experiment = ""
        self.figure = None
        self.config: Dict[str, Any] = {}
        self.files: List[str] = []
        self.checks: List[Dict[str, Any]] = []
        self.metrics: Dict[str, float] = {}

    def init_writer(self, experiment: str, figure: Optional[str], config: Mapping[str, Any]):
        self.experiment = experiment
        self.figure = figure
        self.config = dict(config)

    def add_file(self, path: Path, root: Path):
        self.files.append(Path(path).relative_to(root).as_posix())

    def add_check(self, name: str, value: float, threshold: float, passed: bool):
        self.checks.append({"name": name, "value": float(value), "threshold": float(threshold), "passed": bool(passed)})

    def write(self, path: Path, frame: DataFrame = None, metadata: Optional[Mapping[str, str]] = None) -> Path:
        Writer.ensure_path(path)
        doc = {
            "experiment": self.experiment,
            "figure": self.figure,
            "config": self.config,
            "files": self.files,
            "metrics": {k: float(v) for k, v in self.metrics.items()},
            "checks": self.checks,
        }
        with open(path, "w") as tf:
            yaml.safe_dump(doc, tf, default_flow_style=False, sort_keys=False)
        return Path(path)
