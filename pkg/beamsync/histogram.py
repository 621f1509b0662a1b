"""Histogram of rotated phases against the Laplacian model."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Optional

import numpy as np
import pandas as pd
from scipy import stats

from beamsync.analytic import laplacian_cdf, phi0_from_y, require_unit_gains
from beamsync.errors import ArgumentError
from beamsync.protocol import ProtocolRun, ProtocolState
from beamsync.writers import get_writer

logger = logging.getLogger(__name__)

HISTOGRAM_COLUMNS = ["bin_lo", "bin_hi", "bin_center", "mass", "laplace_mass"]


@dataclass
class PhaseHistogram:
    slot: int
    y_best: float
    n_sensors: int
    phi0: float
    edges: np.ndarray
    mass: np.ndarray
    laplace_mass: np.ndarray
    ks: float

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "bin_lo": self.edges[:-1],
                "bin_hi": self.edges[1:],
                "bin_center": 0.5 * (self.edges[:-1] + self.edges[1:]),
                "mass": self.mass,
                "laplace_mass": self.laplace_mass,
            },
            columns=HISTOGRAM_COLUMNS,
        )

    def metadata(self) -> Dict[str, str]:
        return {
            "slot": str(self.slot),
            "y_best": f"{self.y_best:.12g}",
            "phi0": f"{self.phi0:.12g}",
            "ks": f"{self.ks:.12g}",
        }


def _state_at(run: ProtocolRun, slot: int) -> ProtocolState:
    last = run.state.timeslot
    if not 1 <= slot <= last:
        raise ArgumentError(f"slot {slot} is outside the run (1..{last})")
    if slot == last:
        return run.state
    if slot in run.snapshots:
        return run.snapshots[slot]
    raise ArgumentError(f"slot {slot} was not captured; pass it in snapshot_slots")


def phase_histogram(state: ProtocolState, bins: int = 41) -> PhaseHistogram:
    """Bin the rotated phases over (-pi, pi] and overlay Laplacian bin mass.

    An odd bin count keeps zero at the centre of the middle bin.
    """
    if bins < 1 or bins % 2 == 0:
        raise ArgumentError("bins must be a positive odd number")
    ensemble = state.ensemble
    require_unit_gains(ensemble.gains)
    n = ensemble.count
    phis = ensemble.rotated().phases
    phi0 = phi0_from_y(state.y_best, n)

    edges = np.linspace(-math.pi, math.pi, bins + 1)
    counts, _ = np.histogram(phis, bins=edges)
    mass = counts / n
    cdf = laplacian_cdf(edges, phi0)
    laplace_mass = np.diff(cdf)

    if phi0 > 0:
        ks = float(stats.kstest(phis, lambda x: laplacian_cdf(x, phi0)).statistic)
    else:
        # distance to the point mass at zero
        ks = float(max(np.mean(phis < 0), np.mean(phis > 0)))
    logger.debug("slot %d: phi0=%.4f ks=%.4f", state.timeslot, phi0, ks)
    return PhaseHistogram(
        slot=state.timeslot,
        y_best=state.y_best,
        n_sensors=n,
        phi0=phi0,
        edges=edges,
        mass=mass,
        laplace_mass=laplace_mass,
        ks=ks,
    )


def emit_phase_histogram(
    run: ProtocolRun,
    slot: Optional[int] = None,
    path: Optional[Path] = None,
    bins: int = 41,
    figure: Optional[str] = None,
) -> PhaseHistogram:
    """Histogram at ``slot`` (default: where the run stopped), written as CSV when a path is given."""
    state = _state_at(run, run.state.timeslot if slot is None else slot)
    histogram = phase_histogram(state, bins)
    if path is not None:
        meta = {"figure": figure} if figure else {}
        meta.update(histogram.metadata())
        get_writer("csv").write(Path(path), histogram.to_frame(), meta)
    return histogram
