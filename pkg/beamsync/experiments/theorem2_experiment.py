"""Ordering of model traces between ensemble sizes, for every pair of sizes."""
from itertools import combinations
from typing import Dict, List, Optional

import pandas as pd
from pydantic import Field, field_validator

from beamsync.errors import ConfigError
from beamsync.experiments import register_experiment
from beamsync.experiments.base import Experiment, ExperimentParams
from beamsync.perturbation import Family, PerturbationDist
from beamsync.scalability import check_theorem2, check_theorem2_optimized


class OrderingParams(ExperimentParams):
    n_values: List[int] = Field(description="Ensemble sizes; every pair is checked")
    dists: Optional[List[PerturbationDist]] = Field(default=None, description="Fixed distributions; defaults to dist")
    optimized_family: Optional[Family] = Field(default=None, description="Also check per-size optimised schedules")

    @field_validator('n_values')
    @classmethod
    def at_least_two(cls, v):
        if len(v) < 2 or any(n < 1 for n in v):
            raise ValueError("n_values needs at least two positive sizes")
        return sorted(set(v))


@register_experiment('theorem2')
class OrderingExperiment(Experiment):
    params_model = OrderingParams
    requires_distribution = False
    check_directions = {"violations": "at_most"}

    def run(self) -> Dict[str, float]:
        cfg, params = self.config, self.params
        dists = list(params.dists or ([cfg.dist] if cfg.dist is not None else []))
        if not dists and params.optimized_family is None:
            raise ConfigError(f"experiment '{self.name}': nothing to check, give dist, params.dists or params.optimized_family")
        rows = []
        for n1, n2 in combinations(params.n_values, 2):
            for dist in dists:
                result = check_theorem2(n1, n2, dist, cfg.horizon)
                rows.append([n1, n2, dist.label(), result.holds, result.first_violation])
            if params.optimized_family:
                result = check_theorem2_optimized(n1, n2, params.optimized_family, cfg.horizon)
                rows.append([n1, n2, f"optimized({params.optimized_family})", result.holds, result.first_violation])

        frame = pd.DataFrame(rows, columns=["n1", "n2", "schedule", "holds", "first_violation"])
        frame["first_violation"] = frame["first_violation"].astype("Int64")
        self.write_frame("theorem2.csv", frame, horizon=cfg.horizon)
        return {
            "violations": float((~frame["holds"]).sum()) if len(frame) else 0.0,
            "pairs": float(len(frame)),
        }
