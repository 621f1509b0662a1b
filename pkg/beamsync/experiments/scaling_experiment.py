"""Convergence time T_f(N) over a sweep of ensemble sizes."""
import math
from typing import Dict, List

from pydantic import Field, field_validator

from beamsync.analytic import ModelInit
from beamsync.experiments import register_experiment
from beamsync.experiments.base import Experiment, ExperimentParams
from beamsync.perturbation import Family
from beamsync.scalability import Mode, monte_carlo_time_to_fraction, scaling_sweep


class ScalingParams(ExperimentParams):
    n_list: List[int] = Field(description="Strictly ascending ensemble sizes")
    fraction: float = Field(default=0.75, gt=0.0, lt=1.0)
    mode: Mode = "fixed"
    family: Family = "uniform"
    model_init: ModelInit = "sqrt_n"
    top: int = Field(default=3, ge=2, description="Number of largest sizes in the T/N spread")
    near_linear_band: float = Field(default=0.2, gt=0.0)
    monte_carlo_seeds: int = Field(default=0, ge=0, description="Add a simulated median T_f over this many seeds")

    @field_validator('n_list')
    @classmethod
    def ascending(cls, v):
        if not v or any(a >= b for a, b in zip(v, v[1:])) or v[0] < 1:
            raise ValueError("n_list must be non-empty, positive and strictly ascending")
        return v


@register_experiment('scaling')
class ScalingExperiment(Experiment):
    params_model = ScalingParams
    requires_distribution = False
    check_directions = {
        "monotone": "at_least",
        "near_linear": "at_least",
        "top_spread": "below",
        "all_reached": "at_least",
    }

    def run(self) -> Dict[str, float]:
        cfg, params = self.config, self.params
        dist = cfg.build_schedule() if params.mode == "fixed" else None
        report = scaling_sweep(
            params.n_list,
            params.fraction,
            params.mode,
            cfg.horizon,
            dist=dist,
            family=params.family,
            workers=cfg.workers,
            model_init=params.model_init,
        )
        frame = report.to_frame()
        if params.monte_carlo_seeds:
            seeds = list(range(cfg.seeds[0], cfg.seeds[0] + params.monte_carlo_seeds))
            frame["mc_t_fraction"] = [
                monte_carlo_time_to_fraction(
                    cfg.model_copy(update={"n_sensors": n, "gains": None}), params.fraction, seeds=seeds,
                    workers=cfg.workers,
                )
                for n in params.n_list
            ]
        self.write_frame("scaling.csv", frame, mode=params.mode, fraction=params.fraction)

        spread = report.top_spread(params.top)
        return {
            "all_reached": float(report.all_reached),
            "monotone": float(report.monotone),
            "near_linear": float(report.near_linear(params.near_linear_band)),
            "top_spread": math.nan if spread is None else spread,
            "max_t_over_n": math.nan if report.max_t_over_n is None else report.max_t_over_n,
        }
