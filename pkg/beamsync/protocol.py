"""Monte-Carlo simulation of the one-bit feedback phase-synchronisation protocol.

Each timeslot every sensor perturbs its beam phase at random, the receiver
measures the strength of the combined signal and broadcasts one bit saying
whether it beat the best strength on record. Sensors keep the perturbation on
a positive bit and discard it otherwise.
"""
from __future__ import annotations

import copy
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import TYPE_CHECKING, Dict, Iterable, List, Optional, Sequence

import numpy as np
import pandas as pd

from beamsync.errors import ArgumentError
from beamsync.perturbation import (
    STREAM_DRIFT,
    STREAM_PHASES,
    PerturbationDist,
    SensorStreams,
    substream,
)
from beamsync.phasor import TWO_PI, SensorEnsemble

if TYPE_CHECKING:
    from beamsync.models import ExperimentConfig

logger = logging.getLogger(__name__)

# measurements within this relative margin of the record count as ties (rejected)
ACCEPT_RTOL = 1e-12

TRACE_COLUMNS = ["timeslot", "y", "y_best", "accepted", "delta0_used"]


@dataclass(frozen=True)
class TraceRecord:
    """Observables of one timeslot; y_best is the record the measurement was compared with."""
    timeslot: int
    y: float
    y_best: float
    accepted: bool
    delta0_used: float


@dataclass(frozen=True)
class ProtocolState:
    ensemble: SensorEnsemble
    timeslot: int
    y_best: float
    feedback_window: Optional[int] = None
    # last W measurements, windowed mode only
    history: tuple = ()
    adaptive: bool = True

    def __post_init__(self):
        if self.timeslot < 1:
            raise ArgumentError("timeslot must be >= 1")
        if self.feedback_window is not None and self.feedback_window < 1:
            raise ArgumentError("feedback_window must be >= 1 or None (unbounded)")

    @property
    def g_opt(self) -> float:
        return self.ensemble.g_opt()

    @property
    def strength(self) -> float:
        """Unperturbed strength of the phases currently held by the sensors."""
        return self.ensemble.strength()

    def with_window(self, feedback_window: Optional[int]) -> "ProtocolState":
        history = () if feedback_window is None else (self.y_best,)
        return replace(self, feedback_window=feedback_window, history=history)


def draw_drift_rates(n_sensors: int, doppler_magnitude: float, drift_law: str, seed: int) -> np.ndarray:
    """Per-sensor channel drift, drawn once per run."""
    if doppler_magnitude < 0:
        raise ArgumentError("doppler_magnitude must be >= 0")
    if doppler_magnitude == 0:
        return np.zeros(n_sensors)
    rng = substream(seed, STREAM_DRIFT)
    if drift_law == "sign":
        return doppler_magnitude * rng.choice([-1.0, 1.0], size=n_sensors)
    if drift_law == "uniform":
        return rng.uniform(-doppler_magnitude, doppler_magnitude, size=n_sensors)
    raise ArgumentError(f"unknown drift law {drift_law!r}")


def init_state(
    n_sensors: int,
    gains=None,
    phase_seed: int = 0,
    feedback_window: Optional[int] = None,
    doppler_magnitude: float = 0.0,
    drift_law: str = "sign",
) -> ProtocolState:
    """Zero beam phases and an unknown uniform received-phase offset per sensor.

    Oscillator offset and channel phase enter the received phase only through
    their sum, so the offset is drawn once into ``oscillator_offsets`` and the
    channel phase starts at zero and carries the Doppler drift.
    """
    if n_sensors < 1:
        raise ArgumentError("n_sensors must be >= 1")
    offsets = substream(phase_seed, STREAM_PHASES).uniform(0.0, TWO_PI, size=n_sensors)
    ensemble = SensorEnsemble.create(
        n_sensors,
        gains=gains,
        offsets=offsets,
        drift_rates=draw_drift_rates(n_sensors, doppler_magnitude, drift_law, phase_seed),
    )
    y0 = ensemble.strength()
    state = ProtocolState(ensemble=ensemble, timeslot=1, y_best=y0)
    return state.with_window(feedback_window)


def protocol_step(state: ProtocolState, dist: PerturbationDist, streams: SensorStreams):
    """Play one timeslot; returns the next state and the slot's trace record."""
    delta = streams.draw(dist)
    ensemble = state.ensemble
    y = ensemble.strength(delta)
    reference = state.y_best
    improved = y > reference * (1.0 + ACCEPT_RTOL)
    accepted = improved and state.adaptive

    if accepted:
        ensemble = ensemble.with_beam_phases(ensemble.beam_phases + delta)

    if state.feedback_window is None:
        history = ()
        y_best = y if improved else reference
    else:
        history = (state.history + (y,))[-state.feedback_window:]
        y_best = max(history)

    record = TraceRecord(
        timeslot=state.timeslot,
        y=y,
        y_best=reference,
        accepted=accepted,
        delta0_used=dist.delta0,
    )
    return replace(state, ensemble=ensemble, timeslot=state.timeslot + 1, y_best=y_best, history=history), record


def evolve_channels(state: ProtocolState, doppler_magnitude: float) -> ProtocolState:
    """Advance every channel phase by its drift rate; a zero magnitude disables drift."""
    if doppler_magnitude < 0:
        raise ArgumentError("doppler_magnitude must be >= 0")
    if doppler_magnitude == 0:
        return state
    ensemble = state.ensemble
    moved = ensemble.with_channel_phases(ensemble.channel_phases + ensemble.drift_rates)
    return replace(state, ensemble=moved)


@dataclass
class ProtocolRun:
    seed: int
    trace: List[TraceRecord]
    state: ProtocolState
    snapshots: Dict[int, ProtocolState] = field(default_factory=dict)

    @property
    def g_opt(self) -> float:
        return self.state.g_opt

    def y_best(self) -> np.ndarray:
        return np.array([r.y_best for r in self.trace])

    def y(self) -> np.ndarray:
        return np.array([r.y for r in self.trace])


def simulate(
    config: "ExperimentConfig",
    seed: Optional[int] = None,
    stop_fraction: Optional[float] = None,
    snapshot_slots: Iterable[int] = (),
) -> ProtocolRun:
    """Run timeslots 1..horizon, optionally pausing once Y_best reaches stop_fraction * G_opt.

    Snapshots hold the state at the start of the requested slots.
    """
    seed = config.seeds[0] if seed is None else seed
    schedule = config.build_schedule()
    state = init_state(
        config.n_sensors,
        gains=config.gains,
        phase_seed=seed,
        feedback_window=config.feedback_window,
        doppler_magnitude=config.doppler_magnitude,
        drift_law=config.drift_law,
    )
    streams = SensorStreams(seed, config.n_sensors)
    wanted = set(snapshot_slots)
    snapshots: Dict[int, ProtocolState] = {}
    trace: List[TraceRecord] = []
    target = None if stop_fraction is None else stop_fraction * state.g_opt

    for n in range(1, config.horizon + 1):
        if n in wanted:
            snapshots[n] = state
        if target is not None and state.y_best >= target:
            break
        state = evolve_channels(state, config.doppler_magnitude)
        state, record = protocol_step(state, schedule.dist_at(n), streams)
        trace.append(record)

    if state.timeslot in wanted:
        snapshots[state.timeslot] = state
    logger.debug("seed %s finished at slot %d (y_best=%.6g)", seed, state.timeslot, state.y_best)
    return ProtocolRun(seed=seed, trace=trace, state=state, snapshots=snapshots)


def run_protocol(config: "ExperimentConfig", seed: Optional[int] = None) -> List[TraceRecord]:
    return simulate(config, seed).trace


def _simulate_job(args):
    config, seed, kwargs = args
    return simulate(config, seed, **kwargs)


def run_seeds(config: "ExperimentConfig", seeds: Optional[Sequence[int]] = None, workers: int = 1, **kwargs) -> List[ProtocolRun]:
    """Independent runs for each seed, in seed order; workers > 1 fans out over processes."""
    seeds = list(config.seeds if seeds is None else seeds)
    jobs = [(config, s, kwargs) for s in seeds]
    if workers <= 1 or len(jobs) <= 1:
        return [_simulate_job(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(_simulate_job, jobs))


def mean_trace(runs: Sequence[ProtocolRun]) -> np.ndarray:
    """Monte-Carlo average of Y_best across runs of equal length."""
    lengths = {len(r.trace) for r in runs}
    if len(lengths) != 1:
        raise ArgumentError("runs must share one trace length to be averaged")
    return np.mean(np.stack([r.y_best() for r in runs]), axis=0)


def trace_to_frame(trace: Sequence[TraceRecord]) -> pd.DataFrame:
    return pd.DataFrame(
        {
            "timeslot": [r.timeslot for r in trace],
            "y": [r.y for r in trace],
            "y_best": [r.y_best for r in trace],
            "accepted": [r.accepted for r in trace],
            "delta0_used": [r.delta0_used for r in trace],
        },
        columns=TRACE_COLUMNS,
    )


@dataclass
class TrackingRun:
    seed: int
    g_opt: float
    freeze_slot: Optional[int]
    adaptive: List[TraceRecord]
    control: List[TraceRecord]

    def trailing_mean(self, branch: str, window: int) -> float:
        trace = self.adaptive if branch == "adaptive" else self.control
        ys = np.array([r.y for r in trace[-window:]])
        return float(np.mean(ys) / self.g_opt)


def run_tracking(
    config: "ExperimentConfig",
    seed: int,
    freeze_fraction: float = 0.75,
    warmup_horizon: int = 5000,
) -> TrackingRun:
    """Adaptive tracking against a no-adaptation control under channel drift.

    A static warm-up with the unbounded record runs until Y_best first reaches
    freeze_fraction * G_opt. From that state two branches run ``horizon`` slots
    with drift on: one keeps adapting with the configured feedback window, the
    other holds its phases. Both read identical perturbation streams.
    """
    dist_schedule = config.build_schedule()
    state = init_state(
        config.n_sensors,
        gains=config.gains,
        phase_seed=seed,
        feedback_window=None,
        doppler_magnitude=config.doppler_magnitude,
        drift_law=config.drift_law,
    )
    streams = SensorStreams(seed, config.n_sensors)
    target = freeze_fraction * state.g_opt
    freeze_slot = None
    for _ in range(warmup_horizon):
        if state.y_best >= target:
            freeze_slot = state.timeslot
            break
        state, _ = protocol_step(state, dist_schedule.dist_at(state.timeslot), streams)
    else:
        if state.y_best >= target:
            freeze_slot = state.timeslot
    if freeze_slot is None:
        logger.warning("seed %s never reached %.2f of G_opt during warm-up", seed, freeze_fraction)

    branches = {
        "adaptive": (state.with_window(config.feedback_window), streams),
        "control": (replace(state.with_window(config.feedback_window), adaptive=False), copy.deepcopy(streams)),
    }
    traces: Dict[str, List[TraceRecord]] = {}
    for name, (branch, branch_streams) in branches.items():
        records = []
        for _ in range(config.horizon):
            branch = evolve_channels(branch, config.doppler_magnitude)
            branch, record = protocol_step(branch, dist_schedule.dist_at(branch.timeslot), branch_streams)
            records.append(record)
        traces[name] = records
    return TrackingRun(
        seed=seed,
        g_opt=state.g_opt,
        freeze_slot=freeze_slot,
        adaptive=traces["adaptive"],
        control=traces["control"],
    )
