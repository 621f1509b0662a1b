import logging
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Optional

import yaml
from pydantic import ValidationError
from rich.console import Console
from rich.table import Table

from beamsync.errors import ConfigError
from beamsync.experiments import ExperimentResult, get_experiment_class
from beamsync.models import ExperimentConfig

logger = logging.getLogger(__name__)

# Global console instance for rich output
console = Console()

PRESETS_FILE = Path(__file__).parent / "presets.yaml"


def parse_experiments(mapping: Mapping, source: str) -> Dict[str, ExperimentConfig]:
    """Validate an ``experiments:`` mapping into ExperimentConfig objects."""
    if not isinstance(mapping, Mapping) or not isinstance(mapping.get("experiments"), Mapping):
        raise ConfigError(f"{source}: expected a top-level 'experiments' mapping")
    configs = {}
    for name, block in mapping["experiments"].items():
        if not isinstance(block, Mapping):
            raise ConfigError(f"{source}: experiment '{name}' must be a mapping")
        try:
            config = ExperimentConfig(**block)
        except ValidationError as e:
            raise ConfigError(f"{source}: experiment '{name}': {e}") from e
        get_experiment_class(config.type)
        configs[str(name)] = config
    return configs


def read_yaml(p: Path) -> Mapping:
    try:
        with open(p, 'r') as yamlstream:
            return yaml.safe_load(yamlstream) or {}
    except FileNotFoundError as e:
        raise ConfigError(f"config file '{p}' not found") from e
    except yaml.YAMLError as e:
        raise ConfigError(f"cannot parse '{p}': {e}") from e


class Experiments:
    """Manager for running configured experiments."""

    def __init__(self, configs: Dict[str, ExperimentConfig], relative_to: Optional[Path] = None):
        self.configs = configs
        self.relative_to = Path(relative_to) if relative_to else Path.cwd()

    def names(self) -> List[str]:
        return list(self.configs.keys())

    def config(self, name: str) -> ExperimentConfig:
        if name not in self.configs:
            raise ConfigError(f"unknown experiment '{name}' (available: {', '.join(self.names())})")
        return self.configs[name]

    def run(self, name: str, seed: Optional[int] = None, horizon: Optional[int] = None) -> ExperimentResult:
        """Run a single experiment by name."""
        config = self.config(name).with_overrides(seed=seed, horizon=horizon)
        experiment_class = get_experiment_class(config.type)
        experiment = experiment_class(name, config, self.relative_to)
        return experiment.execute()

    def run_all(self, seed: Optional[int] = None, horizon: Optional[int] = None) -> List[ExperimentResult]:
        """Run all configured experiments."""
        return [self.run(name, seed, horizon) for name in self.names()]


def load(p, out_dir: Optional[Path] = None) -> Experiments:
    p = Path(p).absolute()
    configs = parse_experiments(read_yaml(p), str(p))
    return Experiments(configs, relative_to=out_dir or p.parent)


def load_presets(out_dir: Optional[Path] = None) -> Experiments:
    configs = parse_experiments(read_yaml(PRESETS_FILE), "presets")
    return Experiments(configs, relative_to=out_dir)


def run_experiments(path, names: Optional[Iterable[str]] = None, seed: Optional[int] = None,
                    horizon: Optional[int] = None, out_dir: Optional[Path] = None) -> List[ExperimentResult]:
    experiments = load(path, out_dir)
    names = list(names) if names else experiments.names()
    return [experiments.run(name, seed, horizon) for name in names]


def run_preset(name: str, seed: Optional[int] = None, horizon: Optional[int] = None,
               out_dir: Optional[Path] = None) -> ExperimentResult:
    return load_presets(out_dir).run(name, seed, horizon)


def show_results(results: List[ExperimentResult], show_checks: bool = True):
    files = Table(title="Files written")
    files.add_column("Experiment", style="cyan")
    files.add_column("Figure", style="magenta")
    files.add_column("File", style="green")
    for result in results:
        for path in result.files:
            files.add_row(result.name, result.figure or "", str(path))
    console.print(files)

    checks = [(r.name, c) for r in results for c in r.checks]
    if show_checks and checks:
        table = Table(title="Checks")
        table.add_column("Experiment", style="cyan")
        table.add_column("Check")
        table.add_column("Value", justify="right")
        table.add_column("Threshold", justify="right")
        table.add_column("Result")
        for name, c in checks:
            verdict = "[bold green]PASS[/bold green]" if c.passed else "[bold red]FAIL[/bold red]"
            table.add_row(name, c.name, f"{c.value:.6g}", f"{c.relation} {c.threshold:.6g}", verdict)
        console.print(table)


def list_presets():
    experiments = load_presets()
    table = Table(title="Presets")
    table.add_column("Name", style="cyan")
    table.add_column("Figure", style="magenta")
    table.add_column("Type", style="green")
    table.add_column("Description")
    for name in experiments.names():
        config = experiments.config(name)
        table.add_row(name, config.figure or "", config.type, config.description or "")
    console.print(table)
