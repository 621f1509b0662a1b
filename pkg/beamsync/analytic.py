"""Deterministic convergence model of the feedback algorithm.

The expected best-signal strength obeys y[n+1] = F(y[n]) where
F(y) = y + sigma1 * g(y (1 - C_delta) / sigma1) and sigma1 follows from a
Laplacian parametrisation of the rotated phases.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Literal

import numpy as np
from scipy.special import erfc

from beamsync.errors import DomainError
from beamsync.perturbation import Moments, as_schedule

logger = logging.getLogger(__name__)

SQRT_2PI = math.sqrt(2.0 * math.pi)
SIGMA_EPS = 1e-12  # times N

ModelInit = Literal["sqrt_n", "rayleigh"]


def _out(value):
    return float(value) if np.ndim(value) == 0 else value


def normal_pdf(x):
    x = np.asarray(x, dtype=float)
    return _out(np.exp(-0.5 * x * x) / SQRT_2PI)


def q_function(x):
    """Standard normal tail probability P(Z > x)."""
    x = np.asarray(x, dtype=float)
    return _out(0.5 * erfc(x / math.sqrt(2.0)))


def g_func(x):
    """g(x) = phi(x) - x Q(x), the expected positive part of a unit Gaussian above x."""
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise DomainError("g is defined for x >= 0")
    g = np.exp(-0.5 * x * x) / SQRT_2PI - x * 0.5 * erfc(x / math.sqrt(2.0))
    return _out(np.maximum(g, 0.0))


def _check_y(y: float, n_sensors: int):
    if n_sensors < 1:
        raise DomainError("n_sensors must be >= 1")
    if not (0.0 < y <= n_sensors * (1.0 + 1e-12)):
        raise DomainError(f"y must lie in (0, N={n_sensors}], got {y}")


def require_unit_gains(gains) -> None:
    """The model is built for equal unit-gain channels and refuses anything else."""
    if gains is None:
        return
    gains = np.asarray(gains, dtype=float)
    if not np.allclose(gains, 1.0, rtol=0.0, atol=1e-12):
        raise DomainError("the analytical model assumes unit gains for every sensor")


def phi0_from_y(y: float, n_sensors: int) -> float:
    """Laplacian scale matching y = N / (1 + phi0^2)."""
    _check_y(y, n_sensors)
    return math.sqrt(max(n_sensors / y - 1.0, 0.0))


def laplacian_pdf(phi, phi0: float):
    if phi0 <= 0:
        raise DomainError("phi0 must be positive")
    phi = np.asarray(phi, dtype=float)
    return _out(np.exp(-np.abs(phi) / phi0) / (2.0 * phi0))


def laplacian_cdf(phi, phi0: float):
    """CDF of the Laplacian; phi0 = 0 is the point mass at zero."""
    if phi0 < 0:
        raise DomainError("phi0 must be nonnegative")
    phi = np.asarray(phi, dtype=float)
    if phi0 == 0:
        return _out(np.where(phi >= 0, 1.0, 0.0))
    tail = 0.5 * np.exp(-np.abs(phi) / phi0)
    return _out(np.where(phi < 0, tail, 1.0 - tail))


def coherence_ratio(y, n_sensors):
    """(y/N) / (4 - 3y/N): the Laplacian value of sum(cos 2phi) / N expressed through y."""
    u = np.asarray(y, dtype=float) / n_sensors
    return u / (4.0 - 3.0 * u)


def sigma1_sq_raw(y, n_sensors, one_minus_c, one_minus_c2):
    """Variance of the in-phase perturbation component, vectorised over the moments."""
    d1 = np.asarray(one_minus_c, dtype=float)
    d2 = np.asarray(one_minus_c2, dtype=float)
    spread = d1 * (2.0 - d1)
    excess = d2 - spread
    value = 0.5 * n_sensors * (spread - coherence_ratio(y, n_sensors) * excess)
    return np.maximum(value, 0.0)


def variances(y: float, n_sensors: int, m: Moments) -> tuple[float, float]:
    """(sigma1^2, sigma2^2) of the in-phase and quadrature perturbation components."""
    _check_y(y, n_sensors)
    s1 = float(sigma1_sq_raw(y, n_sensors, m.one_minus_c, m.one_minus_c2))
    s2 = 0.5 * n_sensors * (1.0 - float(coherence_ratio(y, n_sensors)) * m.c_2delta)
    return s1, max(s2, 0.0)


def expected_gain_raw(y, n_sensors, one_minus_c, one_minus_c2):
    """sigma1 * g(y (1 - C) / sigma1), zero when sigma1 is negligible; vectorised."""
    d1 = np.asarray(one_minus_c, dtype=float)
    s1 = np.sqrt(sigma1_sq_raw(y, n_sensors, d1, one_minus_c2))
    live = s1 > SIGMA_EPS * n_sensors
    safe = np.where(live, s1, 1.0)
    x = y * d1 / safe
    g = np.maximum(np.exp(-0.5 * x * x) / SQRT_2PI - x * 0.5 * erfc(x / math.sqrt(2.0)), 0.0)
    return np.where(live, safe * g, 0.0)


def _clamp(value: float, y: float, n_sensors: int) -> float:
    if value > n_sensors:
        logger.debug("model step clamped at N=%d (y=%.9g, unclamped=%.9g)", n_sensors, y, value)
        return float(n_sensors)
    return value


def model_step(y: float, n_sensors: int, m: Moments) -> float:
    """One step of the averaged recursion, F(y) = y + f(y)."""
    _check_y(y, n_sensors)
    gain = float(expected_gain_raw(y, n_sensors, m.one_minus_c, m.one_minus_c2))
    return _clamp(y + gain, y, n_sensors)


def model_step_closed_form(y: float, n_sensors: int, m: Moments) -> float:
    """Same step written as y (1 - p (1 - C)) + sigma1 phi(x) with p = Q(x)."""
    _check_y(y, n_sensors)
    s1_sq, _ = variances(y, n_sensors, m)
    s1 = math.sqrt(s1_sq)
    if s1 <= SIGMA_EPS * n_sensors:
        return _clamp(y, y, n_sensors)
    x = y * m.one_minus_c / s1
    p = q_function(x)
    return _clamp(y * (1.0 - p * m.one_minus_c) + s1 * normal_pdf(x), y, n_sensors)


def step_with_fixed_sigma(y: float, sigma1: float, m: Moments) -> float:
    """y + sigma1 g(y (1 - C)/sigma1) for an externally held sigma1 (no clamp)."""
    if sigma1 <= 0:
        return y
    return y + sigma1 * g_func(y * m.one_minus_c / sigma1)


def initial_level(n_sensors: int, model_init: ModelInit = "sqrt_n") -> float:
    if model_init == "sqrt_n":
        return math.sqrt(n_sensors)
    if model_init == "rayleigh":
        return rayleigh_initial_level(n_sensors)
    raise DomainError(f"unknown model_init {model_init!r}")


def rayleigh_initial_level(n_sensors: int) -> float:
    """Mean strength of N unit phasors with independent uniform phases (large N)."""
    return math.sqrt(math.pi * n_sensors) / 2.0


def run_model(n_sensors: int, dist_schedule, horizon: int, model_init: ModelInit = "sqrt_n") -> np.ndarray:
    """y[1..horizon]; y[n+1] uses the moments scheduled for slot n."""
    if horizon < 1:
        raise DomainError("horizon must be >= 1")
    schedule = as_schedule(dist_schedule)
    ys = np.empty(horizon)
    y = initial_level(n_sensors, model_init)
    ys[0] = y
    for k in range(1, horizon):
        y = model_step(y, n_sensors, schedule.moments_at(k))
        ys[k] = y
    return ys


@dataclass(frozen=True)
class ModelState:
    y: float
    n_sensors: int
    phi0: float
    sigma1: float
    sigma2: float

    @classmethod
    def at(cls, y: float, n_sensors: int, m: Moments) -> "ModelState":
        s1_sq, s2_sq = variances(y, n_sensors, m)
        return cls(
            y=y,
            n_sensors=n_sensors,
            phi0=phi0_from_y(y, n_sensors),
            sigma1=math.sqrt(s1_sq),
            sigma2=math.sqrt(s2_sq),
        )

    def step(self, m: Moments) -> "ModelState":
        return ModelState.at(model_step(self.y, self.n_sensors, m), self.n_sensors, m)
