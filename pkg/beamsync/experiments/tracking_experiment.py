"""Adaptive tracking of drifting channels against a frozen control."""
from typing import Dict, List

import numpy as np
import pandas as pd
from pydantic import Field

from beamsync.experiments import register_experiment
from beamsync.experiments.base import Experiment, ExperimentParams
from beamsync.models import DriftLaw, ExperimentConfig
from beamsync.protocol import run_tracking


class TrackingParams(ExperimentParams):
    freeze_fraction: float = Field(default=0.75, gt=0.0, lt=1.0)
    warmup_horizon: int = Field(default=5000, ge=1)
    trailing: int = Field(default=1000, ge=1, description="Slots averaged at the end of each branch")
    extra_drift_laws: List[DriftLaw] = Field(
        default_factory=list, description="Also run these drift laws; reported as metrics, never checked",
    )


@register_experiment('tracking')
class TrackingExperiment(Experiment):
    """Writes one CSV per seed with both branches' strength over time.

    Extra drift laws go to tracking_<law>_seed<k>.csv and report
    <metric>_<law> metrics next to the main ones.
    """

    params_model = TrackingParams
    check_directions = {"tracking_ratio": "at_least", "warmup_share": "at_least"}

    def run(self) -> Dict[str, float]:
        metrics = self._run_law(self.config, "tracking")
        for law in self.params.extra_drift_laws:
            variant = self.config.model_copy(update={"drift_law": law})
            extra = self._run_law(variant, f"tracking_{law}")
            metrics.update({f"{name}_{law}": value for name, value in extra.items()})
        return metrics

    def _run_law(self, cfg: ExperimentConfig, prefix: str) -> Dict[str, float]:
        params = self.params
        ratios, adaptive_levels, control_levels, warmed = [], [], [], []
        for seed in cfg.seeds:
            result = run_tracking(cfg, seed, params.freeze_fraction, params.warmup_horizon)
            frame = pd.DataFrame({
                "timeslot": [r.timeslot for r in result.adaptive],
                "adaptive_y": [r.y for r in result.adaptive],
                "control_y": [r.y for r in result.control],
            })
            frame["adaptive_ratio"] = frame.adaptive_y / result.g_opt
            frame["control_ratio"] = frame.control_y / result.g_opt
            self.write_frame(
                f"{prefix}_seed{seed}.csv", frame, seed=seed, drift_law=cfg.drift_law,
                freeze_slot="none" if result.freeze_slot is None else result.freeze_slot,
            )
            adaptive = result.trailing_mean("adaptive", params.trailing)
            control = result.trailing_mean("control", params.trailing)
            adaptive_levels.append(adaptive)
            control_levels.append(control)
            ratios.append(adaptive / control if control > 0 else np.inf)
            warmed.append(result.freeze_slot is not None)
        return {
            "tracking_ratio": float(np.mean(ratios)),
            "adaptive_level": float(np.mean(adaptive_levels)),
            "control_level": float(np.mean(control_levels)),
            "warmup_share": float(np.mean(warmed)),
        }
