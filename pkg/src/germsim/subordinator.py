"""Fragmentation times over a grid of drifts and the dual first-passage view.

For a driftless stem started at 0, the fragmentation time against its
drift-theta transform equals the stem's last visit to the line
theta * t / 2, and under time inversion its reciprocal is the first
passage of the inverted path to the level theta / 2.  Both routes are
implemented; they agree within one grid cell wherever both resolve.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .coupling import BEYOND_HORIZON, _BeyondHorizon, invert_time, last_line_visit
from .paths import line_value
from .rng import RngStream


@dataclass(frozen=True)
class DriftGrid:
    """Strictly increasing, nonnegative drift values."""

    thetas: tuple[float, ...]

    def __post_init__(self):
        thetas = tuple(float(t) for t in self.thetas)
        if len(thetas) == 0:
            raise ValueError("drift grid must be nonempty")
        if any(t < 0 for t in thetas):
            raise ValueError("drifts must be >= 0")
        if any(b <= a for a, b in zip(thetas, thetas[1:])):
            raise ValueError("drifts must be strictly increasing")
        object.__setattr__(self, "thetas", thetas)


@dataclass(frozen=True)
class FragmentationProcess:
    """Fragmentation times per drift, non-increasing with censored = +inf."""

    grid: DriftGrid
    times: tuple[float | _BeyondHorizon, ...]
    censored: tuple[bool, ...]

    def times_array(self) -> np.ndarray:
        """Times as floats with BEYOND_HORIZON mapped to +inf."""
        return np.array(
            [math.inf if t is BEYOND_HORIZON else t for t in self.times], dtype=float
        )

    def is_nonincreasing(self) -> bool:
        a = self.times_array()
        return bool(np.all(a[1:] <= a[:-1]))


@dataclass(frozen=True)
class PassageProcess:
    """First times a path reaches the levels theta / 2, non-decreasing in theta."""

    grid: DriftGrid
    times: tuple[float | None, ...]


def _first_passage(ts: np.ndarray, vs: np.ndarray, level: float) -> float | None:
    d = vs - level
    best = None
    touches = np.nonzero(d == 0.0)[0]
    if touches.size:
        best = float(ts[touches[0]])
    flips = np.nonzero(((d[:-1] > 0) & (d[1:] < 0)) | ((d[:-1] < 0) & (d[1:] > 0)))[0]
    if flips.size:
        k = flips[0]
        root = float(ts[k] + (ts[k + 1] - ts[k]) * d[k] / (d[k] - d[k + 1]))
        if best is None or root < best:
            best = root
    return best


def fragmentation_process(stem, grid: DriftGrid) -> FragmentationProcess:
    """Last visit of the stem to each line theta * t / 2 with censoring.

    The stem must be a driftless path started at 0.  An entry is
    BEYOND_HORIZON when agreement is certain to outlive the window: at
    theta = 0, and whenever the stem ends strictly above the line (the
    endpoint likelihood ratio is then >= 1, so the keep branch of the
    transform always fires).  A stem ending exactly on the line reports
    the horizon itself, censored.  Otherwise the entry is the last visit,
    flagged censored when it falls inside the final cell, where the grid
    cannot tell whether the visit settles before the horizon.
    """
    if stem.values[0] != 0.0:
        raise ValueError("stem must start at 0")
    ts = stem.times
    horizon = float(ts[-1])
    penultimate = float(ts[-2])
    times: list[float | _BeyondHorizon] = []
    censored: list[bool] = []
    for theta in grid.thetas:
        d_end = float(stem.values[-1]) - line_value(theta, horizon)
        if theta == 0.0 or d_end > 0.0:
            times.append(BEYOND_HORIZON)
            censored.append(True)
            continue
        if d_end == 0.0:
            times.append(horizon)
            censored.append(True)
            continue
        visit = last_line_visit(stem, theta)
        if visit is None:
            visit = 0.0
        times.append(visit)
        censored.append(visit > penultimate)
    return FragmentationProcess(grid, tuple(times), tuple(censored))


def fragmentation_process_dual(
    stem, grid: DriftGrid, t_min: float | None = None
) -> FragmentationProcess:
    """Fragmentation times computed through the inverted path.

    Inverts the stem on [t_min, horizon], finds the first passage of the
    inverted path to each level theta / 2 and returns reciprocals.  A drift
    whose level is never reached is censored BEYOND_HORIZON.  Agrees with
    :func:`fragmentation_process` within one grid cell wherever both are
    uncensored.  ``t_min`` defaults to one grid cell, so the inverted grid
    covers [1/horizon, n_steps/horizon].
    """
    if t_min is None:
        t_min = stem.grid.dt
    inverted = invert_time(stem, t_min)
    times: list[float | _BeyondHorizon] = []
    censored: list[bool] = []
    for theta in grid.thetas:
        passage = _first_passage(inverted.times, inverted.values, 0.5 * theta)
        if passage is None or passage == 0.0:
            times.append(BEYOND_HORIZON)
            censored.append(True)
        else:
            times.append(1.0 / passage)
            censored.append(False)
    return FragmentationProcess(grid, tuple(times), tuple(censored))


def first_passage_process(w, grid: DriftGrid) -> PassageProcess:
    """First time the path reaches each level theta / 2, or None if never.

    Crossings are located by linear interpolation inside the crossing
    cell.  Times are non-decreasing in theta whenever the path starts at
    or below the smallest level.
    """
    ts = np.asarray(w.times)
    vs = np.asarray(w.values)
    times = tuple(_first_passage(ts, vs, 0.5 * theta) for theta in grid.thetas)
    return PassageProcess(grid, times)


def sample_passage_time(level: float, stream: RngStream, size: int | None = None):
    """Exact draw(s) of the first passage time of standard BM to ``level``.

    Uses the identity T_a = a^2 / Z^2 in distribution with Z standard
    normal, so the sampler is exact (no path discretization).
    """
    if not level > 0:
        raise ValueError(f"level must be > 0, got {level}")
    z = stream.standard_normal(size)
    return level * level / (z * z)
