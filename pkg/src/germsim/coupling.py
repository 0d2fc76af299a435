"""Core path transforms: reflection after the last line visit, the
finite-horizon germ transform, fragmentation and meeting times, and time
inversion.

Two equality semantics coexist here on purpose.  The transforms copy the
untouched prefix of their input verbatim, so fragmentation detection
compares values bit-exactly; no tolerance is involved.  Crossing *times*,
on the other hand, are analysis quantities and are refined by linear
interpolation inside the crossing cell.  The two views of the same event
can disagree by at most one grid cell.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .paths import DriftedLaw, IrregularPath, Path, line_value, sample_bm
from .rng import RngStream


class _BeyondHorizon:
    """Censoring marker: the event did not resolve within [0, horizon].

    Distinct from ``None``: BEYOND_HORIZON means agreement (or passage)
    persisted to the end of the window, ``None`` means no event was found.
    """

    __slots__ = ()

    def __repr__(self):
        return "BEYOND_HORIZON"


BEYOND_HORIZON = _BeyondHorizon()

MeetingTime = float | None | _BeyondHorizon


@dataclass(frozen=True)
class CoupledPair:
    """A stem path, its drifted transform, and their detected fragmentation time."""

    stem: Path
    branch: Path
    theta: float
    frag_time: float | _BeyondHorizon

    def __post_init__(self):
        if self.stem.grid != self.branch.grid:
            raise ValueError("stem and branch must share a grid")

    @property
    def agreed_to_horizon(self) -> bool:
        return self.frag_time is BEYOND_HORIZON


def last_line_visit(w, theta: float) -> float | None:
    """Latest time in [0, T] where the sampled path touches or crosses the
    line t -> theta * t / 2.

    Grid touches count exactly; a sign change between adjacent grid points
    is located by linear interpolation inside the cell.  Returns ``None``
    when the path never touches or crosses.
    """
    ts = w.times
    d = w.values - line_value(theta, ts)
    best = None
    zeros = np.nonzero(d == 0.0)[0]
    if zeros.size:
        best = float(ts[zeros[-1]])
    flips = np.nonzero(((d[:-1] > 0) & (d[1:] < 0)) | ((d[:-1] < 0) & (d[1:] > 0)))[0]
    if flips.size:
        k = flips[-1]
        root = ts[k] + (ts[k + 1] - ts[k]) * d[k] / (d[k] - d[k + 1])
        if best is None or root > best:
            best = float(root)
    return best


def reflect_after_last_visit(w: Path, theta: float) -> Path:
    """Mirror the path across the line theta * t / 2 after its last grid visit.

    For theta >= 0 this is a single backward sweep: every trailing grid
    point strictly below the line is replaced by theta * t - w(t), and the
    sweep stops at the last grid point at or above the line; everything
    before it is copied bit-exactly.  Negative theta is defined through the
    exact symmetry ``reflect(w, theta) == -reflect(-w, -theta)``.
    """
    if theta < 0:
        flipped = Path(w.grid, -w.values)
        return Path(w.grid, -reflect_after_last_visit(flipped, -theta).values)
    ts = w.times
    d = w.values - line_value(theta, ts)
    at_or_above = np.nonzero(d >= 0.0)[0]
    stop = int(at_or_above[-1]) if at_or_above.size else -1
    if stop == w.grid.n_steps:
        return w
    out = w.values.copy()
    out[stop + 1 :] = theta * ts[stop + 1 :] - w.values[stop + 1 :]
    return Path(w.grid, out)


def endpoint_likelihood_ratio(w: Path, theta: float) -> float:
    """Density exp(theta * w(T) - theta^2 * T / 2) of the drifted endpoint
    law with respect to the driftless one."""
    return math.exp(theta * float(w.values[-1]) - 0.5 * theta * theta * w.horizon)


def germ_transform(w: Path, u: float, theta: float) -> Path:
    """Couple a driftless path to a drift-theta one on the same window.

    If ``u`` is at most the endpoint likelihood ratio the input is returned
    unchanged (agreement survives the horizon); otherwise the path is
    reflected after its last line visit.  Either branch is a single sweep
    over the samples.
    """
    if theta < 0:
        raise ValueError(
            "germ_transform requires theta >= 0; for a negative drift use the "
            "negation symmetry: negate germ_transform(-w, u, -theta)"
        )
    if not 0.0 <= u <= 1.0:
        raise ValueError(f"u must lie in [0, 1], got {u}")
    if u <= endpoint_likelihood_ratio(w, theta):
        return w
    return reflect_after_last_visit(w, theta)


def fragmentation_time(p1: Path, p2: Path) -> float | _BeyondHorizon:
    """First grid time where the two paths differ bit-exactly.

    BEYOND_HORIZON when they agree at every grid point.  Bit-exact
    comparison is sound because the coupling transforms copy the agreement
    prefix verbatim.
    """
    if p1.grid != p2.grid:
        raise ValueError("paths must share a grid")
    differs = np.nonzero(p1.values != p2.values)[0]
    if differs.size == 0:
        return BEYOND_HORIZON
    return float(p1.times[differs[0]])


def sample_coupled_pair(
    grid, theta: float, stream: RngStream, *, skip_reflection: bool = False
) -> CoupledPair:
    """Draw one stem and couple it: branch = germ_transform(stem, u, theta).

    Consumes ``n_steps`` words for the stem increments and then one word
    for the uniform, in that order, so replay of a stream is exact.

    ``skip_reflection`` is a verification hook for negative controls: the
    reflection branch is suppressed and the stem is returned unchanged,
    which deliberately breaks the coupled law.
    """
    stem = sample_bm(grid, DriftedLaw(0.0, 0.0), stream)
    u = stream.uniform01()
    if skip_reflection:
        branch = stem
    else:
        branch = germ_transform(stem, u, theta)
    return CoupledPair(stem, branch, theta, fragmentation_time(stem, branch))


def invert_time(w, t_min: float) -> IrregularPath:
    """Map the window t >= t_min of a trajectory through s -> s * w(1/s).

    The result lives on the inverted grid {1/t : t >= t_min}, re-sorted
    ascending.  The t = 0 limit is not representable on a finite grid, so
    ``t_min`` must be strictly positive.
    """
    if not t_min > 0:
        raise ValueError(f"t_min must be > 0, got {t_min}")
    ts = np.asarray(w.times)
    mask = ts >= t_min
    if np.count_nonzero(mask) < 2:
        raise ValueError("window t >= t_min keeps fewer than 2 grid points")
    sel_t = ts[mask]
    sel_v = np.asarray(w.values)[mask]
    s = (1.0 / sel_t)[::-1]
    out = (sel_v / sel_t)[::-1]
    return IrregularPath(np.ascontiguousarray(s), np.ascontiguousarray(out))


def first_meeting(p1, p2, tol: float = 0.0) -> float | None:
    """Earliest time where the two trajectories meet.

    A grid point with ``|p1 - p2| <= tol`` counts as a meeting; with
    ``tol == 0`` a sign change of the difference between adjacent grid
    points is additionally resolved to the interpolated crossing inside
    the cell.  ``None`` when they never meet on the grid.
    """
    if tol < 0:
        raise ValueError(f"tol must be >= 0, got {tol}")
    ts1 = np.asarray(p1.times)
    ts2 = np.asarray(p2.times)
    if not np.array_equal(ts1, ts2):
        raise ValueError("paths must share a grid")
    d = np.asarray(p1.values) - np.asarray(p2.values)
    best = None
    touches = np.nonzero(np.abs(d) <= tol)[0]
    if touches.size:
        best = float(ts1[touches[0]])
    if tol == 0.0:
        flips = np.nonzero(((d[:-1] > 0) & (d[1:] < 0)) | ((d[:-1] < 0) & (d[1:] > 0)))[0]
        if flips.size:
            k = flips[0]
            root = float(ts1[k] + (ts1[k + 1] - ts1[k]) * d[k] / (d[k] - d[k + 1]))
            if best is None or root < best:
                best = root
    return best
