"""Rotated-phase histograms of paused runs, with the Laplacian fit."""
from typing import Dict, Optional

import numpy as np
import pandas as pd
from pydantic import Field, field_validator, model_validator

from beamsync.experiments import register_experiment
from beamsync.experiments.base import Experiment, ExperimentParams
from beamsync.histogram import emit_phase_histogram
from beamsync.protocol import simulate


class HistogramParams(ExperimentParams):
    stop_fraction: Optional[float] = Field(default=0.8, gt=0.0, lt=1.0, description="Pause once Y_best reaches this share of G_opt")
    slot: Optional[int] = Field(default=None, ge=1, description="Fixed slot instead of stop_fraction")
    bins: int = Field(default=41, ge=1)
    histograms: int = Field(default=1, ge=0, description="Number of seeds whose histogram CSV is written")

    @field_validator('bins')
    @classmethod
    def odd(cls, v):
        if v % 2 == 0:
            raise ValueError("bins must be odd so zero sits in the middle bin")
        return v

    @model_validator(mode='after')
    def one_stop_rule(self):
        if self.slot is not None:
            self.stop_fraction = None
        return self


@register_experiment('histogram')
class HistogramExperiment(Experiment):
    params_model = HistogramParams
    check_directions = {"mean_ks": "below", "max_ks": "below"}

    def run(self) -> Dict[str, float]:
        cfg, params = self.config, self.params
        rows = []
        for i, seed in enumerate(cfg.seeds):
            snapshots = [params.slot] if params.slot is not None else []
            run = simulate(cfg, seed, stop_fraction=params.stop_fraction, snapshot_slots=snapshots)
            path = None
            if i < params.histograms:
                path = self.output_dir / f"histogram_seed{seed}.csv"
            hist = emit_phase_histogram(run, params.slot, path=path, bins=params.bins, figure=cfg.figure)
            if path is not None:
                self.files.append(path)
            rows.append([seed, hist.slot, hist.y_best, hist.y_best / cfg.n_sensors, hist.phi0, hist.ks])

        frame = pd.DataFrame(rows, columns=["seed", "slot", "y_best", "y_over_n", "phi0", "ks"])
        self.write_frame("laplacian_fit.csv", frame)
        return {"mean_ks": float(np.mean(frame.ks)), "max_ks": float(np.max(frame.ks))}
