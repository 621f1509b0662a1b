"""Monte-Carlo runs of the feedback protocol, one trace per seed."""
from typing import Dict, Optional

import numpy as np
import pandas as pd
from pydantic import Field

from beamsync.experiments import register_experiment
from beamsync.experiments.base import Experiment, ExperimentParams
from beamsync.protocol import mean_trace, run_seeds, trace_to_frame

GAP_ATOL = 1e-9


class ProtocolParams(ExperimentParams):
    trace_files: Optional[int] = Field(default=None, ge=0, description="Write trace CSVs for the first k seeds, all when null")
    converge_level: float = Field(default=0.95, gt=0.0, le=1.0, description="Level of G_opt counted as converged")
    gap_after: int = Field(default=200, ge=1, description="First slot of the two-seed gap comparison")
    stop_fraction: Optional[float] = Field(default=None, gt=0.0, lt=1.0)


def max_relative_gap(a: np.ndarray, b: np.ndarray, after: int) -> float:
    """max |a - b| / max(a, b) over slots >= after (1-based)."""
    a, b = a[after - 1:], b[after - 1:]
    if a.size == 0:
        return float("nan")
    return float(np.max(np.abs(a - b) / np.maximum(np.maximum(a, b), GAP_ATOL)))


@register_experiment('protocol')
class ProtocolExperiment(Experiment):
    """Simulate every seed and report convergence statistics."""

    params_model = ProtocolParams
    check_directions = {
        "final_share": "at_least",
        "seed_gap": "below",
        "monotone": "at_least",
        "bounded": "at_least",
    }

    def run(self) -> Dict[str, float]:
        cfg, params = self.config, self.params
        runs = run_seeds(cfg, workers=cfg.workers, stop_fraction=params.stop_fraction)

        for run in runs[:params.trace_files]:
            self.write_frame(f"trace_seed{run.seed}.csv", trace_to_frame(run.trace), seed=run.seed)
        if len(runs) > 1 and len({len(r.trace) for r in runs}) == 1:
            mean = mean_trace(runs)
            frame = pd.DataFrame({"timeslot": np.arange(1, mean.size + 1), "y_best_mean": mean})
            self.write_frame("mean_trace.csv", frame, seeds=len(runs))

        finals = np.array([r.state.y_best / r.g_opt for r in runs])
        monotone = all(np.all(np.diff(r.y_best()) >= 0) for r in runs)
        bounded = all(np.all(r.y_best() <= r.g_opt + 1e-9) for r in runs)
        metrics = {
            "final_share": float(np.mean(finals >= params.converge_level)),
            "final_ratio_min": float(np.min(finals)),
            "monotone": float(monotone),
            "bounded": float(bounded),
            "seed_gap": float("nan"),
        }
        if len(runs) >= 2:
            metrics["seed_gap"] = max_relative_gap(runs[0].y_best(), runs[1].y_best(), params.gap_after)
        return metrics
