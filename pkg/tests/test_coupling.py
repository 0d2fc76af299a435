import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from germsim.coupling import (
    BEYOND_HORIZON,
    CoupledPair,
    endpoint_likelihood_ratio,
    first_meeting,
    fragmentation_time,
    germ_transform,
    invert_time,
    last_line_visit,
    reflect_after_last_visit,
    sample_coupled_pair,
)
from germsim.paths import DriftedLaw, Path, TimeGrid, line_value, sample_bm
from germsim.rng import substream
from germsim.stats import Ecdf, ks_statistic, ks_threshold, std_normal_cdf

finite_floats = st.floats(
    allow_nan=False, allow_infinity=False, width=64, min_value=-1e6, max_value=1e6
)


def path_of(values, horizon=None):
    values = np.asarray(values, dtype=float)
    T = horizon if horizon is not None else float(len(values) - 1)
    return Path(TimeGrid(T, len(values) - 1), values)


# ---------------------------------------------------------------- last visit

def test_last_visit_path_on_line():
    grid = TimeGrid(2.0, 8)
    w = Path(grid, line_value(1.0, grid.times()))
    assert last_line_visit(w, 1.0) == 2.0


def test_last_visit_interpolated_root():
    w = path_of([0.0, 1.0, -1.0])  # grid (0, 1, 2)
    assert last_line_visit(w, 0.0) == 1.5


def test_last_visit_touch_at_origin_only():
    w = path_of([0.0, 5.0], horizon=1.0)
    assert last_line_visit(w, 2.0) == 0.0


def test_last_visit_none_when_never_touching():
    w = path_of([1.0, 2.0], horizon=1.0)
    assert last_line_visit(w, 0.0) is None


# ---------------------------------------------------------------- reflection

def test_reflect_no_op_when_endpoint_at_or_above():
    grid = TimeGrid(1.0, 4)
    w = sample_bm(grid, DriftedLaw(0.0, 0.0), substream(1, 0))
    shifted = Path(grid, w.values + abs(w.values).max() + 1.0)
    out = reflect_after_last_visit(shifted, 0.0)
    assert out is shifted


def test_reflect_hand_traced_example():
    w = path_of([0.0, -0.5, -0.1], horizon=1.0)  # grid (0, 0.5, 1)
    out = reflect_after_last_visit(w, 2.0)
    assert np.array_equal(out.values, [0.0, 1.5, 2.1])


def test_reflect_zero_drift_negates_negative_tail():
    w = path_of([0.0, 0.5, -0.3, -0.2], horizon=1.5)
    out = reflect_after_last_visit(w, 0.0)
    assert np.array_equal(out.values, [0.0, 0.5, 0.3, 0.2])


@settings(max_examples=60, deadline=None)
@given(st.lists(finite_floats, min_size=2, max_size=30), st.floats(0.1, 8.0))
def test_reflect_negative_theta_symmetry(values, theta):
    w = path_of(values)
    flipped = path_of([-v for v in values])
    lhs = reflect_after_last_visit(w, -theta)
    rhs = reflect_after_last_visit(flipped, theta)
    assert np.array_equal(lhs.values, -rhs.values)


def test_reflection_identity_mirror_images():
    # On reflected indices branch + stem equals theta * t up to rounding.
    grid = TimeGrid(5.0, 2_000)
    theta = 1.5
    for i in range(20):
        stem = sample_bm(grid, DriftedLaw(0.0, 0.0), substream(21, i))
        branch = reflect_after_last_visit(stem, theta)
        mask = branch.values != stem.values
        if not mask.any():
            continue
        t = grid.times()[mask]
        resid = branch.values[mask] + stem.values[mask] - theta * t
        scale = np.maximum(np.abs(theta * t), np.abs(stem.values[mask]))
        assert np.all(np.abs(resid) <= 4 * np.spacing(scale + 1.0))


def test_sign_separation_on_reflected_indices():
    grid = TimeGrid(5.0, 2_000)
    theta = 2.0
    for i in range(20):
        stem = sample_bm(grid, DriftedLaw(0.0, 0.0), substream(22, i))
        branch = reflect_after_last_visit(stem, theta)
        mask = branch.values != stem.values
        d = stem.values - line_value(theta, grid.times())
        assert np.all(d[mask] < 0.0)


# ------------------------------------------------------------ germ transform

def test_germ_transform_zero_drift_is_identity():
    w = sample_bm(TimeGrid(1.0, 32), DriftedLaw(0.0, 0.0), substream(2, 0))
    for u in (0.0, 0.5, 1.0):
        assert germ_transform(w, u, 0.0) is w


def test_germ_transform_keep_branch_example():
    # T=1, theta=1, w(T)=1: ratio exp(0.5) ~ 1.6487 beats u=0.9.
    grid = TimeGrid(1.0, 2)
    w = Path(grid, np.array([0.0, 0.4, 1.0]))
    assert math.isclose(endpoint_likelihood_ratio(w, 1.0), math.exp(0.5))
    assert germ_transform(w, 0.9, 1.0) is w


def test_germ_transform_reflect_branch_example():
    # exp(2*(-0.1) - 2) ~ 0.1108 < 0.9, so the reflection fires.
    w = path_of([0.0, -0.5, -0.1], horizon=1.0)
    out = germ_transform(w, 0.9, 2.0)
    assert np.array_equal(out.values, [0.0, 1.5, 2.1])


def test_germ_transform_rejects_negative_drift():
    w = path_of([0.0, 1.0], horizon=1.0)
    with pytest.raises(ValueError, match="negation symmetry"):
        germ_transform(w, 0.5, -1.0)


def test_germ_transform_rejects_bad_u():
    w = path_of([0.0, 1.0], horizon=1.0)
    with pytest.raises(ValueError, match="u must"):
        germ_transform(w, 1.5, 1.0)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.0, 1.0), st.floats(0.0, 4.0))
def test_keep_branch_certain_when_endpoint_above_line(task, u, theta):
    # w(T) >= theta*T/2 makes the likelihood ratio >= 1, so the reflection
    # branch is unreachable for every u in [0, 1].
    grid = TimeGrid(1.0, 16)
    w = sample_bm(grid, DriftedLaw(0.0, 0.0), substream(23, task))
    lift = line_value(theta, grid.horizon) - w.values[-1] + 0.125
    if lift > 0:
        w = Path(grid, w.values + lift)
    assert w.values[-1] >= line_value(theta, grid.horizon)
    assert germ_transform(w, u, theta) is w


def test_keep_branch_at_exact_boundary():
    # w(T) exactly on the line: the likelihood ratio is exp(0) = 1, so even
    # u = 1 keeps the path.
    grid = TimeGrid(1.0, 2)
    w = Path(grid, np.array([0.0, -3.0, 1.0]))  # line level at T is 1.0 for theta=2
    assert endpoint_likelihood_ratio(w, 2.0) == 1.0
    assert germ_transform(w, 1.0, 2.0) is w


# --------------------------------------------------------- fragmentation time

def test_fragmentation_identical_paths():
    w = path_of([0.0, 1.0, 2.0])
    assert fragmentation_time(w, w) is BEYOND_HORIZON


def test_fragmentation_first_differing_index():
    grid = TimeGrid(1.0, 2)
    p1 = Path(grid, np.array([0.0, 1.5, 2.1]))
    p2 = Path(grid, np.array([0.0, -0.5, -0.1]))
    assert fragmentation_time(p1, p2) == 0.5


def test_fragmentation_final_point_only():
    grid = TimeGrid(3.0, 3)
    p1 = Path(grid, np.array([0.0, 1.0, 2.0, 3.0]))
    p2 = Path(grid, np.array([0.0, 1.0, 2.0, 4.0]))
    assert fragmentation_time(p1, p2) == 3.0


def test_fragmentation_grid_mismatch():
    p1 = path_of([0.0, 1.0], horizon=1.0)
    p2 = path_of([0.0, 1.0], horizon=2.0)
    with pytest.raises(ValueError, match="grid"):
        fragmentation_time(p1, p2)


def test_coupled_pair_grid_mismatch():
    p1 = path_of([0.0, 1.0], horizon=1.0)
    p2 = path_of([0.0, 1.0], horizon=2.0)
    with pytest.raises(ValueError, match="grid"):
        CoupledPair(p1, p2, 1.0, 0.5)


def test_sampled_pair_prefix_agreement():
    grid = TimeGrid(2.0, 500)
    for i in range(50):
        pair = sample_coupled_pair(grid, 2.0, substream(24, i))
        if pair.agreed_to_horizon:
            assert np.array_equal(pair.stem.values, pair.branch.values)
        else:
            j = int(np.nonzero(pair.stem.values != pair.branch.values)[0][0])
            assert j >= 1
            assert pair.frag_time == grid.times()[j]


# -------------------------------------------------------------- time inversion

def test_invert_constant_path_becomes_line():
    grid = TimeGrid(4.0, 8)
    c = 3.25
    p = Path(grid, np.full(9, c))
    inv = invert_time(p, grid.dt)
    assert np.allclose(inv.values, c * inv.times, rtol=1e-12)


def test_invert_line_becomes_constant():
    grid = TimeGrid(4.0, 8)
    theta = 1.75
    p = Path(grid, theta * grid.times())
    inv = invert_time(p, grid.dt)
    assert np.allclose(inv.values, theta, rtol=1e-12)


def test_invert_requires_positive_t_min():
    p = path_of([0.0, 1.0, 2.0])
    with pytest.raises(ValueError, match="t_min"):
        invert_time(p, 0.0)


def test_invert_rejects_empty_window():
    p = path_of([0.0, 1.0, 2.0])
    with pytest.raises(ValueError, match="window"):
        invert_time(p, 100.0)


def test_double_inversion_relative_error():
    grid = TimeGrid(2.0, 200)
    worst = 0.0
    for i in range(100):
        p = sample_bm(grid, DriftedLaw(0.3, -0.1), substream(25, i))
        once = invert_time(p, 0.1)
        twice = invert_time(once, once.times[0])
        orig = p.values[p.times >= 0.1]
        nz = orig != 0
        worst = max(worst, float(np.max(np.abs(twice.values[nz] - orig[nz]) / np.abs(orig[nz]))))
    assert worst <= 1e-9


# -------------------------------------------------------------- first meeting

def test_first_meeting_identical():
    w = path_of([0.0, 1.0, 2.0])
    assert first_meeting(w, w) == 0.0


def test_first_meeting_interpolated_root():
    p1 = path_of([1.0, 0.0], horizon=1.0)
    p2 = path_of([0.0, 1.0], horizon=1.0)
    assert first_meeting(p1, p2, tol=0.0) == 0.5


def test_first_meeting_none_when_separated():
    p1 = path_of([1.0, 2.0], horizon=1.0)
    p2 = path_of([0.0, 0.5], horizon=1.0)
    assert first_meeting(p1, p2, tol=0.0) is None


def test_first_meeting_grid_mismatch():
    p1 = path_of([0.0, 1.0], horizon=1.0)
    p2 = path_of([0.0, 1.0], horizon=2.0)
    with pytest.raises(ValueError, match="grid"):
        first_meeting(p1, p2)


def test_meeting_duality_single_pair():
    # w2 - w1 = c * (t - m) has its last zero at m; the inverted difference
    # is linear in s with root exactly at 1/m.
    grid = TimeGrid(10.0, 1_000)
    t = grid.times()
    m = 2.5
    base = np.sin(t)
    p1 = Path(grid, base)
    p2 = Path(grid, base + 0.8 * (t - m))
    i1 = invert_time(p1, 0.05)
    i2 = invert_time(p2, 0.05)
    met = first_meeting(i1, i2, tol=0.0)
    assert met is not None
    assert abs(met - 1.0 / m) < 1e-9


def test_inverted_marginal_matches_swapped_law():
    # Inversion swaps start and drift: drift 1, start 0.5 maps to a motion
    # with marginal N(theta + delta*s, s) at inverted time s.
    theta, delta = 1.0, 0.5
    grid = TimeGrid(2.0, 8)
    vals = []
    for i in range(4_000):
        p = sample_bm(grid, DriftedLaw(theta, delta), substream(26, i))
        inv = invert_time(p, 0.25)
        vals.append(inv.values[np.argmin(np.abs(inv.times - 0.5))])
    s = 0.5
    mean, sd = theta + delta * s, math.sqrt(s)
    stat = ks_statistic(Ecdf(np.array(vals)), lambda x: std_normal_cdf((x - mean) / sd))
    assert stat < ks_threshold(4_000, 0.001)
