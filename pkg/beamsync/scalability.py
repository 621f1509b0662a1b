"""Convergence time against the number of sensors.

T_f(N) is read off the deterministic model trace. The helpers here verify the
ordering between ensembles of different size and the linear growth bound.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import TYPE_CHECKING, List, Literal, Optional, Sequence

import numpy as np
import pandas as pd

from beamsync.analytic import ModelInit, normal_pdf, run_model
from beamsync.errors import ArgumentError, DomainError
from beamsync.optimizer import run_optimized_model
from beamsync.protocol import run_seeds

if TYPE_CHECKING:
    from beamsync.models import ExperimentConfig

logger = logging.getLogger(__name__)

X0 = 3.6
THEOREM_SLACK = 1e-12
# levels within this relative margin below f * N count as reached
FRACTION_RTOL = 1e-12

Mode = Literal["fixed", "optimized"]
REPORT_COLUMNS = ["n_sensors", "t_fraction", "t_over_n", "mode", "f"]


def _check_fraction(f: float):
    if not 0.0 < f < 1.0:
        raise DomainError(f"fraction must lie in (0, 1), got {f}")


def time_to_fraction(y_sequence, n_sensors: int, f: float) -> Optional[int]:
    """First timeslot (1-based) whose level reaches f * N, or None if never reached."""
    _check_fraction(f)
    ys = np.asarray(y_sequence, dtype=float)
    hits = np.flatnonzero(ys >= f * n_sensors * (1.0 - FRACTION_RTOL))
    if hits.size == 0:
        return None
    return int(hits[0]) + 1


@dataclass(frozen=True)
class OrderingResult:
    holds: bool
    # 1-based slot of the first failing comparison
    first_violation: Optional[int]

    def __bool__(self):
        return self.holds


def _compare_traces(y1: np.ndarray, n1: int, y2: np.ndarray, n2: int, slack: float) -> OrderingResult:
    length = min(y1.size, y2.size)
    y1, y2 = y1[:length], y2[:length]
    larger_ok = y2 >= y1 - slack * n2
    fraction_ok = y1 / n1 >= y2 / n2 - slack
    bad = np.flatnonzero(~(larger_ok & fraction_ok))
    if bad.size:
        return OrderingResult(False, int(bad[0]) + 1)
    return OrderingResult(True, None)


def check_theorem2(n1: int, n2: int, dist_schedule, horizon: int, slack: float = THEOREM_SLACK) -> OrderingResult:
    """The larger ensemble is ahead in absolute level and behind in normalised level at every slot."""
    if not 1 <= n1 <= n2:
        raise ArgumentError(f"need 1 <= n1 <= n2, got {n1}, {n2}")
    y1 = run_model(n1, dist_schedule, horizon)
    y2 = run_model(n2, dist_schedule, horizon)
    return _compare_traces(y1, n1, y2, n2, slack)


def check_theorem2_optimized(n1: int, n2: int, family: str, horizon: int, slack: float = THEOREM_SLACK) -> OrderingResult:
    """Same ordering when each ensemble follows its own optimised schedule."""
    if not 1 <= n1 <= n2:
        raise ArgumentError(f"need 1 <= n1 <= n2, got {n1}, {n2}")
    y1, _ = run_optimized_model(n1, family, horizon)
    y2, _ = run_optimized_model(n2, family, horizon)
    return _compare_traces(y1, n1, y2, n2, slack)


def k_lower_bound(f: float) -> float:
    """Lower bound on the optimised per-slot model gain at level f * N, independent of N."""
    _check_fraction(f)
    return (2.0 / f) * ((1.0 - f) / (4.0 - 3.0 * f)) * normal_pdf(X0) * (1.0 / X0 - 3.0 / X0 ** 3)


def _check_positive(x):
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise DomainError("tail bounds need x > 0")
    return x


def q_upper_bound(x):
    """phi(x) (1/x - 1/x^3 + 3/x^5) >= Q(x)."""
    x = _check_positive(x)
    value = normal_pdf(x) * (1.0 / x - 1.0 / x ** 3 + 3.0 / x ** 5)
    return float(value) if np.ndim(value) == 0 else value


def q_lower_bound(x):
    """phi(x) (1/x - 1/x^3) <= Q(x)."""
    x = _check_positive(x)
    value = normal_pdf(x) * (1.0 / x - 1.0 / x ** 3)
    return float(value) if np.ndim(value) == 0 else value


def sigma1_sq_lower_bound(n_sensors: int, f: float, one_minus_c: float) -> float:
    """2N (1 - C_delta) (1 - f) / (4 - 3f), valid at y = f N for feasible moments with C_delta >= 0."""
    _check_fraction(f)
    return 2.0 * n_sensors * one_minus_c * (1.0 - f) / (4.0 - 3.0 * f)


def gain_lower_bound(x, sigma1: float):
    """sigma1 phi(x) (1/x^2 - 3/x^4) <= sigma1 g(x)."""
    x = _check_positive(x)
    value = sigma1 * normal_pdf(x) * (1.0 / x ** 2 - 3.0 / x ** 4)
    return float(value) if np.ndim(value) == 0 else value


@dataclass(frozen=True)
class ScalingEntry:
    n_sensors: int
    t_fraction: Optional[int]

    @property
    def t_over_n(self) -> Optional[float]:
        return None if self.t_fraction is None else self.t_fraction / self.n_sensors


@dataclass
class ScalingReport:
    entries: List[ScalingEntry]
    f: float
    mode: Mode

    @property
    def all_reached(self) -> bool:
        return all(e.t_fraction is not None for e in self.entries)

    @property
    def monotone(self) -> bool:
        """T_f nondecreasing in N (requires every point to have converged)."""
        if not self.all_reached:
            return False
        ts = [e.t_fraction for e in self.entries]
        return all(a <= b for a, b in zip(ts, ts[1:]))

    @property
    def max_t_over_n(self) -> Optional[float]:
        if not self.all_reached:
            return None
        return max(e.t_over_n for e in self.entries)

    def near_linear(self, band: float = 0.2) -> bool:
        """max T/N over the sweep is within ``band`` of T/N at the largest N."""
        if not self.all_reached:
            return False
        return self.max_t_over_n <= (1.0 + band) * self.entries[-1].t_over_n

    def top_spread(self, count: int = 3) -> Optional[float]:
        """Relative spread (max - min) / min of T/N across the largest ``count`` sizes."""
        if not self.all_reached:
            return None
        ratios = [e.t_over_n for e in self.entries[-count:]]
        return (max(ratios) - min(ratios)) / min(ratios)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [[e.n_sensors, e.t_fraction, e.t_over_n, self.mode, self.f] for e in self.entries],
            columns=REPORT_COLUMNS,
        )


def _sweep_point(args) -> ScalingEntry:
    n, f, mode, horizon, dist, family, model_init = args
    if mode == "optimized":
        ys, _ = run_optimized_model(n, family, horizon, stop_fraction=f, model_init=model_init)
    else:
        ys = run_model(n, dist, horizon, model_init=model_init)
    t = time_to_fraction(ys, n, f)
    if t is None:
        logger.warning("N=%d did not reach %.2f of N within %d slots", n, f, horizon)
    else:
        logger.info("N=%d reached %.2f of N at slot %d (T/N=%.3f)", n, f, t, t / n)
    return ScalingEntry(n, t)


def scaling_sweep(
    n_list: Sequence[int],
    f: float,
    mode: Mode,
    horizon: int,
    dist=None,
    family: str = "uniform",
    workers: int = 1,
    model_init: ModelInit = "sqrt_n",
) -> ScalingReport:
    """T_f(N) over an ascending list of ensemble sizes."""
    _check_fraction(f)
    n_list = list(n_list)
    if not n_list or any(a >= b for a, b in zip(n_list, n_list[1:])):
        raise ArgumentError("n_list must be non-empty and strictly ascending")
    if mode == "fixed" and dist is None:
        raise ArgumentError("fixed mode needs a distribution or schedule")
    if mode not in ("fixed", "optimized"):
        raise ArgumentError(f"unknown sweep mode {mode!r}")

    jobs = [(n, f, mode, horizon, dist, family, model_init) for n in n_list]
    if workers <= 1 or len(jobs) <= 1:
        entries = [_sweep_point(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            entries = list(executor.map(_sweep_point, jobs))
    return ScalingReport(entries=entries, f=f, mode=mode)


def monte_carlo_time_to_fraction(
    config: "ExperimentConfig",
    f: float,
    seeds: Optional[Sequence[int]] = None,
    workers: int = 1,
) -> Optional[float]:
    """Median over seeds of the first slot whose Y_best reaches f * G_opt; None if any seed misses."""
    _check_fraction(f)
    runs = run_seeds(config, seeds=seeds, workers=workers, stop_fraction=f)
    slots = []
    for run in runs:
        if run.state.y_best < f * run.g_opt:
            return None
        slots.append(run.state.timeslot)
    return float(np.median(slots))
