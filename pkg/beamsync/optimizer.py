"""Greedy per-timeslot choice of perturbation parameters from the convergence model.

At every slot the parameters maximising the model's next level y[n+1] given
y[n] are found by a coarse log-spaced grid followed by golden-section
refinement around the best grid point.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Tuple

import numpy as np
import pandas as pd

from beamsync.analytic import ModelInit, _check_y, expected_gain_raw, initial_level, model_step
from beamsync.errors import ArgumentError, DomainError
from beamsync.perturbation import (
    FAMILIES,
    Moments,
    PerturbationDist,
    SlotTable,
    cosine_defects,
    feasibility_check,
    make_dist,
)

logger = logging.getLogger(__name__)

DELTA_MIN = 1e-4
DELTA_MAX = math.pi / 2
DELTA_GRID = np.geomspace(DELTA_MIN, DELTA_MAX, 64)
P_MIN = 1e-5
P_MAX = 0.5
P_GRID = np.geomspace(P_MIN, P_MAX, 16)
REFINE_TOL = 1e-6
COORDINATE_ROUNDS = 3

SCHEDULE_COLUMNS = ["timeslot", "family", "delta0", "p", "c_delta", "c_2delta", "y_predicted"]

INV_PHI = (math.sqrt(5) - 1) / 2
INV_PHI_SQ = (3 - math.sqrt(5)) / 2


def golden_section_max(obj: Callable[[float], float], a: float, b: float, tol: float = REFINE_TOL) -> float:
    """Maximiser of a unimodal obj on [a, b], located to within tol."""
    dist = b - a
    if dist <= tol:
        return (a + b) / 2

    n = int(math.ceil(math.log(tol / dist) / math.log(INV_PHI)))

    c = a + INV_PHI_SQ * dist
    d = a + INV_PHI * dist
    yc = obj(c)
    yd = obj(d)

    for _ in range(n - 1):
        if yc > yd:
            b = d
            d = c
            yd = yc
            dist = INV_PHI * dist
            c = a + INV_PHI_SQ * dist
            yc = obj(c)
        else:
            a = c
            c = d
            yc = yd
            dist = INV_PHI * dist
            d = a + INV_PHI * dist
            yd = obj(d)

    if yc > yd:
        return (a + d) / 2
    return (c + b) / 2


@dataclass(frozen=True)
class StepParams:
    family: str
    delta0: float
    p: Optional[float]
    moments: Moments

    def dist(self) -> PerturbationDist:
        return make_dist(self.family, self.delta0, self.p)


def _gain(y: float, n_sensors: int, family: str, delta0, p=None):
    d1, d2 = cosine_defects(family, delta0, p)
    return expected_gain_raw(y, n_sensors, d1, d2)


def _bracket(grid: np.ndarray, i: int) -> Tuple[float, float]:
    return float(grid[max(i - 1, 0)]), float(grid[min(i + 1, grid.size - 1)])


def _params(family: str, delta0: float, p: Optional[float]) -> StepParams:
    d1, d2 = cosine_defects(family, delta0, p)
    return StepParams(family=family, delta0=float(delta0), p=None if p is None else float(p),
                      moments=Moments(float(d1), float(d2)))


def _optimize_single(y: float, n_sensors: int, family: str) -> Tuple[float, None]:
    gains = _gain(y, n_sensors, family, DELTA_GRID)
    i = int(np.argmax(gains))
    best_delta, best_gain = float(DELTA_GRID[i]), float(gains[i])
    lo, hi = _bracket(DELTA_GRID, i)
    refined = golden_section_max(lambda d: float(_gain(y, n_sensors, family, d)), lo, hi)
    if float(_gain(y, n_sensors, family, refined)) > best_gain:
        best_delta = refined
    return best_delta, None


def matching_three_point(one_minus_c: float, one_minus_c2: float) -> Optional[Tuple[float, float]]:
    """Three-point (delta0, p) with the given cosine defects, None when out of its reach.

    A three-point law has 1 - C_2delta = 4 cos^2(delta0/2) (1 - C_delta), so the
    defect ratio fixes delta0 and the size of 1 - C_delta fixes p.
    """
    if one_minus_c <= 0:
        return None
    half_sin_sq = (4.0 * one_minus_c - one_minus_c2) / (4.0 * one_minus_c)
    if not 0.0 < half_sin_sq < 1.0:
        return None
    delta0 = 2.0 * math.asin(math.sqrt(half_sin_sq))
    p = one_minus_c / (4.0 * half_sin_sq)
    if not (DELTA_MIN <= delta0 <= DELTA_MAX and 0.0 < p <= P_MAX):
        return None
    return delta0, p


def _optimize_three_point(y: float, n_sensors: int) -> Tuple[float, float]:
    def gain(d, q):
        return float(_gain(y, n_sensors, "three_point", d, q))

    grid = _gain(y, n_sensors, "three_point", DELTA_GRID[:, None], P_GRID[None, :])
    i, j = np.unravel_index(int(np.argmax(grid)), grid.shape)
    candidates = [(float(DELTA_GRID[i]), float(P_GRID[j]))]
    # the uniform optimum is reachable by moment matching
    uniform_delta, _ = _optimize_single(y, n_sensors, "uniform")
    matched = matching_three_point(*map(float, cosine_defects("uniform", uniform_delta)))
    if matched is not None:
        candidates.append(matched)
    delta0, p = max(candidates, key=lambda c: gain(*c))
    best = gain(delta0, p)

    d_step = float(DELTA_GRID[1] / DELTA_GRID[0])
    p_step = float(P_GRID[1] / P_GRID[0])
    for _ in range(COORDINATE_ROUNDS):
        lo, hi = max(delta0 / d_step, DELTA_MIN), min(delta0 * d_step, DELTA_MAX)
        cand = golden_section_max(lambda d: gain(d, p), lo, hi)
        value = gain(cand, p)
        if value > best:
            delta0, best = cand, value
        lo, hi = max(p / p_step, P_MIN), min(p * p_step, P_MAX)
        cand = golden_section_max(lambda q: gain(delta0, q), lo, hi)
        value = gain(delta0, cand)
        if value > best:
            p, best = cand, value
    return delta0, p


def optimize_step_params(y: float, n_sensors: int, family: str) -> Tuple[StepParams, float]:
    """Parameters of ``family`` maximising model_step at y, and the resulting level.

    The result never does worse than any point of the search grid.
    """
    if family not in FAMILIES:
        raise ArgumentError(f"unknown family {family!r}")
    _check_y(y, n_sensors)

    if y >= n_sensors * (1.0 - 1e-12):
        p = P_MAX if family == "three_point" else None
        return _params(family, float(DELTA_GRID[0]), p), float(n_sensors)

    if family == "three_point":
        delta0, p = _optimize_three_point(y, n_sensors)
    else:
        delta0, p = _optimize_single(y, n_sensors, family)
    params = _params(family, delta0, p)
    return params, model_step(y, n_sensors, params.moments)


@dataclass(frozen=True)
class ScheduleEntry:
    timeslot: int
    family: str
    delta0: float
    p: Optional[float]
    c_delta: float
    c_2delta: float
    # model level after the slot played with these parameters
    y_predicted: float


class ParamSchedule:
    """Optimised parameters per timeslot."""

    def __init__(self, family: str, entries: List[ScheduleEntry]):
        self.family = family
        self.entries = entries

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def c_pairs(self) -> np.ndarray:
        return np.array([[e.c_delta, e.c_2delta] for e in self.entries])

    def delta0s(self) -> np.ndarray:
        return np.array([e.delta0 for e in self.entries])

    def y_predicted(self) -> np.ndarray:
        return np.array([e.y_predicted for e in self.entries])

    def is_feasible(self) -> bool:
        return all(feasibility_check(Moments.from_values(e.c_delta, e.c_2delta)) for e in self.entries)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [[e.timeslot, e.family, e.delta0, e.p, e.c_delta, e.c_2delta, e.y_predicted] for e in self.entries],
            columns=SCHEDULE_COLUMNS,
        )

    def slot_table(self) -> SlotTable:
        return SlotTable(make_dist(e.family, e.delta0, e.p) for e in self.entries)


def schedule_to_slot_table(schedule: ParamSchedule) -> SlotTable:
    return schedule.slot_table()


def run_optimized_model(
    n_sensors: int,
    family: str,
    horizon: int,
    stop_fraction: Optional[float] = None,
    model_init: ModelInit = "sqrt_n",
) -> Tuple[np.ndarray, ParamSchedule]:
    """Greedy optimised model trace y[1..horizon] with the parameters used at each slot.

    With stop_fraction the run ends at the first slot whose level reaches
    stop_fraction * N.
    """
    if horizon < 1:
        raise DomainError("horizon must be >= 1")
    ys = [initial_level(n_sensors, model_init)]
    entries: List[ScheduleEntry] = []
    for k in range(1, horizon + 1):
        y = ys[-1]
        if stop_fraction is not None and y >= stop_fraction * n_sensors:
            break
        params, y_next = optimize_step_params(y, n_sensors, family)
        m = params.moments
        entries.append(ScheduleEntry(k, family, params.delta0, params.p, m.c_delta, m.c_2delta, y_next))
        if k < horizon:
            ys.append(y_next)
    logger.debug("optimised %s model for N=%d ran %d slots", family, n_sensors, len(ys))
    return np.asarray(ys), ParamSchedule(family, entries)
