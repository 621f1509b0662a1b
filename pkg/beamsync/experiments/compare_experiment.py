"""Model trace against the Monte-Carlo mean of Y_best, per distribution."""
from typing import Dict, List, Optional

import numpy as np
import pandas as pd
from pydantic import Field

from beamsync.analytic import ModelInit, require_unit_gains, run_model
from beamsync.experiments import register_experiment
from beamsync.experiments.base import Experiment, ExperimentParams
from beamsync.perturbation import PerturbationDist
from beamsync.protocol import mean_trace, run_seeds


class CompareParams(ExperimentParams):
    dists: Optional[List[PerturbationDist]] = Field(default=None, description="Distributions to compare; defaults to dist")
    model_init: ModelInit = "sqrt_n"
    compare_after: int = Field(default=10, ge=1, description="First slot of the model/simulation comparison")


@register_experiment('compare')
class CompareExperiment(Experiment):
    """Writes compare_<family>_<i>.csv with the model and Monte-Carlo columns side by side.

    ``max_rel_gap`` covers every curve; ``max_rel_gap_<family>`` covers the
    curves of one family, so each family can carry its own band.
    """

    params_model = CompareParams
    requires_distribution = False
    check_directions = {
        "max_rel_gap": "below",
        "max_rel_gap_uniform": "below",
        "max_rel_gap_two_point": "below",
        "max_rel_gap_three_point": "below",
        "max_rel_gap_schedule": "below",
    }

    def _dists(self) -> List[PerturbationDist]:
        if self.params.dists:
            return list(self.params.dists)
        return [self.config.dist] if self.config.dist is not None else []

    def run(self) -> Dict[str, float]:
        cfg, params = self.config, self.params
        require_unit_gains(cfg.gains)
        dists = self._dists()
        if not dists:
            model = run_model(cfg.n_sensors, cfg.build_schedule(), cfg.horizon, model_init=params.model_init)
            mc = mean_trace(run_seeds(cfg, workers=cfg.workers))
            curves = [("schedule", "schedule", model, mc)]
        else:
            curves = []
            for d in dists:
                variant = cfg.with_dist(d)
                model = run_model(cfg.n_sensors, d, cfg.horizon, model_init=params.model_init)
                mc = mean_trace(run_seeds(variant, workers=cfg.workers))
                curves.append((d.family, d.label(), model, mc))

        gaps: Dict[str, List[float]] = {}
        for i, (family, label, model, mc) in enumerate(curves):
            rel = np.abs(mc - model) / model
            frame = pd.DataFrame({
                "timeslot": np.arange(1, model.size + 1),
                "model_y": model,
                "mc_y_best_mean": mc,
                "rel_gap": rel,
            })
            self.write_frame(f"compare_{family}_{i}.csv", frame, dist=label, seeds=len(cfg.seeds),
                             model_init=params.model_init)
            tail = rel[params.compare_after - 1:]
            gaps.setdefault(family, []).append(float(np.max(tail)) if tail.size else float("nan"))

        metrics = {f"max_rel_gap_{family}": float(np.max(values)) for family, values in gaps.items()}
        metrics["max_rel_gap"] = float(np.max([v for values in gaps.values() for v in values]))
        return metrics
