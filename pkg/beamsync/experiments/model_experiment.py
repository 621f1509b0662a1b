"""Deterministic model trace for the configured distribution or schedule."""
import math
from typing import Dict

import numpy as np
import pandas as pd
from pydantic import Field

from beamsync.analytic import ModelInit, require_unit_gains, run_model
from beamsync.experiments import register_experiment
from beamsync.experiments.base import Experiment, ExperimentParams
from beamsync.protocol import TRACE_COLUMNS
from beamsync.scalability import time_to_fraction


class ModelParams(ExperimentParams):
    model_init: ModelInit = "sqrt_n"
    fraction: float = Field(default=0.75, gt=0.0, lt=1.0, description="Level reported as t_fraction")


@register_experiment('model')
class ModelExperiment(Experiment):
    """Writes model_trace.csv in the protocol trace schema, with an extra y_over_n column.

    The model has no measurements, so y_best repeats y and accepted is blank.
    """

    params_model = ModelParams
    check_directions = {"t_fraction": "at_most", "final_fraction": "at_least"}

    def run(self) -> Dict[str, float]:
        cfg = self.config
        require_unit_gains(cfg.gains)
        schedule = cfg.build_schedule()
        ys = run_model(cfg.n_sensors, schedule, cfg.horizon, model_init=self.params.model_init)
        slots = np.arange(1, ys.size + 1)
        frame = pd.DataFrame({
            "timeslot": slots,
            "y": ys,
            "y_best": ys,
            "accepted": [None] * ys.size,
            "delta0_used": [schedule.dist_at(int(n)).delta0 for n in slots],
        }, columns=TRACE_COLUMNS)
        frame["y_over_n"] = ys / cfg.n_sensors
        self.write_frame("model_trace.csv", frame, model_init=self.params.model_init)
        t = time_to_fraction(ys, cfg.n_sensors, self.params.fraction)
        return {
            "t_fraction": math.nan if t is None else float(t),
            "final_fraction": float(ys[-1] / cfg.n_sensors),
        }
