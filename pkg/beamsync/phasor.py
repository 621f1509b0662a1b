"""Complex-phasor arithmetic for the received signal.

A sensor ensemble transmits unit-frequency carriers whose phasors add at the
receiver; everything the protocol observes is the magnitude of that sum.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from beamsync.errors import ArgumentError, DegenerateInputError

TWO_PI = 2.0 * np.pi

# relative to sum(gains)
ZERO_PHASE_TOLERANCE = 1e-9


def wrap_phase(phases) -> np.ndarray:
    """Canonical representation in [0, 2pi)."""
    wrapped = np.mod(np.asarray(phases, dtype=float), TWO_PI)
    # np.mod returns 2pi for tiny negative inputs
    return np.where(wrapped >= TWO_PI, 0.0, wrapped)


def wrap_signed(phases) -> np.ndarray:
    """Map phases onto (-pi, pi]."""
    return np.pi - np.mod(np.pi - np.asarray(phases, dtype=float), TWO_PI)


def _check_pair(gains, phases) -> tuple[np.ndarray, np.ndarray]:
    gains = np.asarray(gains, dtype=float)
    phases = np.asarray(phases, dtype=float)
    if gains.ndim != 1 or phases.ndim != 1:
        raise ArgumentError("gains and phases must be one-dimensional arrays")
    if gains.size == 0 or phases.size == 0:
        raise ArgumentError("gains and phases must be non-empty")
    if gains.size != phases.size:
        raise ArgumentError(f"length mismatch: {gains.size} gains vs {phases.size} phases")
    if not (np.all(np.isfinite(gains)) and np.all(np.isfinite(phases))):
        raise ArgumentError("gains and phases must be finite")
    return gains, phases


def phasor_sum(gains, phases) -> complex:
    gains, phases = _check_pair(gains, phases)
    return complex(np.sum(gains * np.exp(1j * phases)))


def mag(gains, phases) -> float:
    """Received signal strength |sum_i a_i exp(j Phi_i)|."""
    return abs(phasor_sum(gains, phases))


def g_opt(gains) -> float:
    """Largest achievable strength, attained at perfect phase coherence."""
    gains = np.asarray(gains, dtype=float)
    if gains.ndim != 1 or gains.size == 0:
        raise ArgumentError("gains must be a non-empty one-dimensional array")
    if np.any(gains < 0):
        raise ArgumentError("gains must be nonnegative")
    return float(np.sum(gains))


@dataclass(frozen=True)
class ReceivedPhaseVector:
    phases: np.ndarray
    gains: np.ndarray

    def __post_init__(self):
        _check_pair(self.gains, self.phases)

    @property
    def magnitude(self) -> float:
        return mag(self.gains, self.phases)

    @property
    def quadrature(self) -> float:
        """Imaginary part of the total phasor; zero for a rotated vector."""
        return float(np.sum(self.gains * np.sin(self.phases)))


def rotate_to_zero_phase(gains, phases) -> ReceivedPhaseVector:
    """Shift the receiver phase reference so the total phasor is real and positive.

    Returned phases lie in (-pi, pi].
    """
    gains, phases = _check_pair(gains, phases)
    total = np.sum(gains * np.exp(1j * phases))
    scale = float(np.sum(gains))
    if scale == 0.0 or abs(total) <= ZERO_PHASE_TOLERANCE * scale:
        raise DegenerateInputError("total phasor is zero; the zero-phase rotation is undefined")
    rotated = wrap_signed(phases - np.angle(total))
    return ReceivedPhaseVector(phases=rotated, gains=gains)


@dataclass(frozen=True)
class SensorEnsemble:
    """Per-sensor state of the distributed transmitter.

    Phases are stored unconstrained; the ``canonical_*`` accessors report them
    in [0, 2pi). Drift rates are in radians per timeslot.
    """
    gains: np.ndarray
    channel_phases: np.ndarray
    oscillator_offsets: np.ndarray
    beam_phases: np.ndarray
    drift_rates: np.ndarray = field(default=None)

    def __post_init__(self):
        arrays = {}
        for name in ("gains", "channel_phases", "oscillator_offsets", "beam_phases"):
            arrays[name] = np.asarray(getattr(self, name), dtype=float)
        if self.drift_rates is None:
            arrays["drift_rates"] = np.zeros_like(arrays["gains"])
        else:
            arrays["drift_rates"] = np.asarray(self.drift_rates, dtype=float)

        sizes = {a.size for a in arrays.values()}
        if len(sizes) != 1 or 0 in sizes:
            raise ArgumentError("all ensemble arrays must share one length N >= 1")
        if any(a.ndim != 1 for a in arrays.values()):
            raise ArgumentError("ensemble arrays must be one-dimensional")
        if np.any(arrays["gains"] < 0):
            raise ArgumentError("gains must be nonnegative")
        if not all(np.all(np.isfinite(a)) for a in arrays.values()):
            raise ArgumentError("ensemble values must be finite")
        for name, value in arrays.items():
            object.__setattr__(self, name, value)

    @classmethod
    def create(cls, n_sensors: int, gains=None, offsets=None, drift_rates=None) -> "SensorEnsemble":
        """Unit gains and zero phases unless given."""
        if n_sensors < 1:
            raise ArgumentError("n_sensors must be >= 1")
        zeros = np.zeros(n_sensors)
        return cls(
            gains=np.ones(n_sensors) if gains is None else gains,
            channel_phases=zeros,
            oscillator_offsets=zeros if offsets is None else offsets,
            beam_phases=zeros,
            drift_rates=drift_rates,
        )

    @property
    def count(self) -> int:
        return int(self.gains.size)

    @property
    def received_phases(self) -> np.ndarray:
        """gamma_i + theta_i + psi_i."""
        return self.oscillator_offsets + self.beam_phases + self.channel_phases

    @property
    def canonical_channel_phases(self) -> np.ndarray:
        return wrap_phase(self.channel_phases)

    @property
    def canonical_oscillator_offsets(self) -> np.ndarray:
        return wrap_phase(self.oscillator_offsets)

    @property
    def canonical_beam_phases(self) -> np.ndarray:
        return wrap_phase(self.beam_phases)

    def strength(self, perturbation: Optional[np.ndarray] = None) -> float:
        phases = self.received_phases
        if perturbation is not None:
            phases = phases + perturbation
        return mag(self.gains, phases)

    def g_opt(self) -> float:
        return g_opt(self.gains)

    def rotated(self) -> ReceivedPhaseVector:
        return rotate_to_zero_phase(self.gains, self.received_phases)

    def with_beam_phases(self, beam_phases: np.ndarray) -> "SensorEnsemble":
        return replace(self, beam_phases=beam_phases)

    def with_channel_phases(self, channel_phases: np.ndarray) -> "SensorEnsemble":
        return replace(self, channel_phases=channel_phases)
