"""Perturbation distributions, their cosine moments and seeded sampling streams."""
from __future__ import annotations

import math
import re
from bisect import bisect_right
from dataclasses import dataclass
from typing import Iterable, List, Literal, Optional, Sequence, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from beamsync.errors import ArgumentError

Family = Literal["two_point", "uniform", "three_point"]
FAMILIES = ("two_point", "uniform", "three_point")

# SeedSequence spawn-key prefixes; one independent stream family per purpose
STREAM_PHASES = 0
STREAM_DRIFT = 1
STREAM_PERTURBATION = 2

FEASIBILITY_SLACK = 1e-12

_RADIANS = re.compile(
    r"^\s*(?:(?P<mult>\d+(?:\.\d*)?)\s*\*?\s*)?pi(?:\s*/\s*(?P<div>\d+(?:\.\d*)?))?\s*$"
)


def parse_radians(value: Union[str, float, int]) -> float:
    """Accept floats or the strings 'pi', 'pi/30', '3*pi/4', '2pi'."""
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    if isinstance(value, str):
        text = value.strip().lower()
        m = _RADIANS.match(text)
        if m:
            mult = float(m.group("mult")) if m.group("mult") else 1.0
            div = float(m.group("div")) if m.group("div") else 1.0
            return mult * math.pi / div
        try:
            return float(text)
        except ValueError:
            pass
    raise ValueError(f"cannot interpret {value!r} as an angle in radians")


class PerturbationDist(BaseModel):
    """Law of the per-sensor phase perturbation applied each timeslot."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    family: Family = Field(description="two_point, uniform or three_point")
    delta0: float = Field(description="Perturbation half-width in radians, 0 < delta0 < pi")
    p: Optional[float] = Field(default=None, description="P(+delta0) = P(-delta0) for three_point")

    @field_validator("delta0", mode="before")
    @classmethod
    def parse_delta0(cls, v):
        return parse_radians(v)

    @model_validator(mode="after")
    def validate_ranges(self):
        if not 0.0 < self.delta0 < math.pi:
            raise ValueError(f"delta0 must lie in (0, pi), got {self.delta0}")
        if self.family == "three_point":
            if self.p is None:
                raise ValueError("three_point requires p")
            if not 0.0 < self.p <= 0.5:
                raise ValueError(f"p must lie in (0, 0.5], got {self.p}")
        elif self.p is not None:
            raise ValueError(f"p is only meaningful for three_point, not {self.family}")
        return self

    @property
    def weight_p(self) -> Optional[float]:
        return self.p

    def transform(self, uniforms: np.ndarray) -> np.ndarray:
        """Map uniform[0, 1) variates onto perturbations."""
        u = np.asarray(uniforms, dtype=float)
        d = self.delta0
        if self.family == "uniform":
            return d * (2.0 * u - 1.0)
        if self.family == "two_point":
            return np.where(u < 0.5, d, -d)
        p = self.p
        return np.where(u < p, d, np.where(u < 2.0 * p, -d, 0.0))

    def second_moment(self) -> float:
        """E[delta^2] in closed form."""
        if self.family == "two_point":
            return self.delta0 ** 2
        if self.family == "uniform":
            return self.delta0 ** 2 / 3.0
        return 2.0 * self.p * self.delta0 ** 2

    def label(self) -> str:
        if self.family == "three_point":
            return f"{self.family}(delta0={self.delta0:.6g}, p={self.p:.6g})"
        return f"{self.family}(delta0={self.delta0:.6g})"


def make_dist(family: str, delta0, weight_p: Optional[float] = None) -> PerturbationDist:
    try:
        return PerturbationDist(family=family, delta0=delta0, p=weight_p)
    except ValidationError as e:
        raise ArgumentError(str(e)) from e


def one_minus_sinc(x):
    """1 - sin(x)/x without cancellation for small x."""
    x = np.asarray(x, dtype=float)
    x2 = x * x
    series = x2 / 6.0 * (1.0 - x2 / 20.0 * (1.0 - x2 / 42.0 * (1.0 - x2 / 72.0)))
    safe = np.where(x < 0.1, 1.0, x)
    direct = (safe - np.sin(safe)) / safe
    return np.where(x < 0.1, series, direct)


def cosine_defects(family: str, delta0, p=None):
    """(1 - C_delta, 1 - C_2delta) for array-valued parameters."""
    delta0 = np.asarray(delta0, dtype=float)
    if family == "two_point":
        return 2.0 * np.sin(delta0 / 2.0) ** 2, 2.0 * np.sin(delta0) ** 2
    if family == "uniform":
        return one_minus_sinc(delta0), one_minus_sinc(2.0 * delta0)
    if family == "three_point":
        p = np.asarray(p, dtype=float)
        return 4.0 * p * np.sin(delta0 / 2.0) ** 2, 4.0 * p * np.sin(delta0) ** 2
    raise ArgumentError(f"unknown family {family!r}")


@dataclass(frozen=True)
class Moments:
    """Cosine moments of a perturbation law.

    Stored as the defects 1 - C_delta and 1 - C_2delta, which keep full
    relative precision for the small angles the protocol works with.
    """
    one_minus_c: float
    one_minus_c2: float

    @classmethod
    def from_values(cls, c_delta: float, c_2delta: float) -> "Moments":
        return cls(one_minus_c=1.0 - c_delta, one_minus_c2=1.0 - c_2delta)

    @property
    def c_delta(self) -> float:
        return 1.0 - self.one_minus_c

    @property
    def c_2delta(self) -> float:
        return 1.0 - self.one_minus_c2

    @property
    def spread(self) -> float:
        """1 - C_delta^2."""
        d1 = self.one_minus_c
        return d1 * (2.0 - d1)

    @property
    def excess(self) -> float:
        """C_delta^2 - C_2delta."""
        d1 = self.one_minus_c
        return self.one_minus_c2 - d1 * (2.0 - d1)

    def as_tuple(self) -> tuple[float, float]:
        return self.c_delta, self.c_2delta


def moments(dist: PerturbationDist) -> Moments:
    d1, d2 = cosine_defects(dist.family, dist.delta0, dist.p)
    return Moments(one_minus_c=float(d1), one_minus_c2=float(d2))


def feasibility_check(m: Moments, slack: float = FEASIBILITY_SLACK) -> bool:
    """2C^2 - 1 <= C_2delta <= 2C - 1, evaluated on the defects."""
    d1, d2 = m.one_minus_c, m.one_minus_c2
    if not (-1.0 - slack <= m.c_delta <= 1.0 + slack and -1.0 - slack <= m.c_2delta <= 1.0 + slack):
        return False
    upper_ok = d2 >= 2.0 * d1 - slack
    lower_ok = d2 <= 4.0 * d1 - 2.0 * d1 * d1 + slack
    return bool(upper_ok and lower_ok)


def sample(dist: PerturbationDist, rng: np.random.Generator, n: int) -> np.ndarray:
    if n < 1:
        raise ArgumentError("n must be >= 1")
    return dist.transform(rng.random(n))


def substream(seed: int, purpose: int, index: Optional[int] = None) -> np.random.Generator:
    """Counter-based generator keyed by (seed, purpose[, index])."""
    key = (purpose,) if index is None else (purpose, index)
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=key)))


class SensorStreams:
    """Independent per-sensor uniform streams for the perturbation draws.

    Sensor i always reads the substream keyed by (seed, i), so its draws do not
    depend on how many other sensors take part. Draws are buffered in blocks.
    """

    def __init__(self, seed: int, n_sensors: int, block: int = 256):
        if n_sensors < 1:
            raise ArgumentError("n_sensors must be >= 1")
        self.seed = seed
        self.block = block
        self._gens = [substream(seed, STREAM_PERTURBATION, i) for i in range(n_sensors)]
        self._buffer = np.empty((n_sensors, 0))
        self._pos = 0

    @property
    def n_sensors(self) -> int:
        return len(self._gens)

    def uniforms(self) -> np.ndarray:
        if self._pos >= self._buffer.shape[1]:
            self._buffer = np.stack([g.random(self.block) for g in self._gens])
            self._pos = 0
        column = self._buffer[:, self._pos]
        self._pos += 1
        return column

    def draw(self, dist: PerturbationDist) -> np.ndarray:
        return dist.transform(self.uniforms())


class ConstantSchedule:
    def __init__(self, dist: PerturbationDist):
        self.dist = dist
        self._moments = moments(dist)

    def dist_at(self, slot: int) -> PerturbationDist:
        return self.dist

    def moments_at(self, slot: int) -> Moments:
        return self._moments


class StepSchedule:
    """Step table: each entry applies from its start slot until the next one."""

    def __init__(self, steps: Sequence[tuple[int, PerturbationDist]]):
        if not steps:
            raise ArgumentError("a schedule needs at least one step")
        ordered = sorted(steps, key=lambda s: s[0])
        if ordered[0][0] != 1:
            raise ArgumentError("the first schedule step must start at slot 1")
        starts = [s for s, _ in ordered]
        if len(set(starts)) != len(starts):
            raise ArgumentError("schedule start slots must be distinct")
        self._starts = starts
        self._dists = [d for _, d in ordered]
        self._moments = [moments(d) for d in self._dists]

    def _index(self, slot: int) -> int:
        return max(bisect_right(self._starts, slot) - 1, 0)

    def dist_at(self, slot: int) -> PerturbationDist:
        return self._dists[self._index(slot)]

    def moments_at(self, slot: int) -> Moments:
        return self._moments[self._index(slot)]


class SlotTable:
    """One distribution per timeslot, holding the last entry past the end."""

    def __init__(self, dists: Iterable[PerturbationDist]):
        self._dists: List[PerturbationDist] = list(dists)
        if not self._dists:
            raise ArgumentError("a slot table needs at least one entry")
        self._moments = [moments(d) for d in self._dists]

    def _index(self, slot: int) -> int:
        return min(max(slot, 1), len(self._dists)) - 1

    def dist_at(self, slot: int) -> PerturbationDist:
        return self._dists[self._index(slot)]

    def moments_at(self, slot: int) -> Moments:
        return self._moments[self._index(slot)]


def as_schedule(source):
    """Coerce a distribution, a Moments value or a schedule into a schedule."""
    if isinstance(source, PerturbationDist):
        return ConstantSchedule(source)
    if isinstance(source, Moments):
        return _FixedMoments(source)
    if hasattr(source, "moments_at"):
        return source
    raise ArgumentError(f"cannot build a schedule from {type(source).__name__}")


class _FixedMoments:
    def __init__(self, m: Moments):
        self._m = m

    def moments_at(self, slot: int) -> Moments:
        return self._m
