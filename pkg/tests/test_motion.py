from __future__ import annotations

import itertools
import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from holmc.motion import (
    CostParams,
    DegeneratePair,
    DegenerateTriple,
    FlowStats,
    NoOverlap,
    Trajectory,
    batch_third_order_costs,
    batch_triplet_residuals,
    combine_third_order,
    estimate_euclidean_transform,
    gamma,
    pairwise_cost,
    pairwise_cost_from_distances,
    pairwise_motion_distance,
    spatial_distance,
    triplet_cost,
    triplet_distance,
    triplet_distances,
    triplet_residuals,
)
from oracles import similarity


def traj(i, pts, start=0):
    return Trajectory(i, start, np.asarray(pts, float))


def line(start, velocity, n=5):
    return [(start[0] + velocity[0] * t, start[1] + velocity[1] * t) for t in range(n)]


def test_motion_distance_examples():
    a = traj(0, line((0, 0), (1, 1)))
    assert pairwise_motion_distance(a, traj(1, line((0, 0), (1, 1)))) == 0
    assert pairwise_motion_distance(a, traj(1, line((5, 0), (2, 1)))) == pytest.approx(1)
    b = traj(1, [(0, 0), (1, 1), (5, 6), (6, 7), (7, 8)])
    assert pairwise_motion_distance(a, b) == pytest.approx(5)


def test_motion_distance_uses_flow_variation():
    a = traj(0, line((0, 0), (0, 0)))
    b = traj(1, line((0, 0), (2, 0)))
    assert pairwise_motion_distance(a, b, FlowStats([2.0, 2.0, 2.0, 2.0])) == pytest.approx(1)


def test_motion_distance_needs_two_common_frames():
    a = traj(0, line((0, 0), (1, 0), 3), start=0)
    b = traj(1, line((0, 0), (1, 0), 3), start=2)
    with pytest.raises(NoOverlap):
        pairwise_motion_distance(a, b)


@pytest.mark.parametrize("dm, expected", [(0.0, -1.0), (12.5, 0.0), (25.0, 1.0)])
def test_pairwise_cost_defaults(dm, expected):
    assert pairwise_cost_from_distances(dm, 7.0, 3.0, CostParams()) == pytest.approx(expected)


def test_pairwise_cost_uses_spatial_and_feature_terms():
    params = CostParams(theta_bar0=2.0, theta2=-0.1, theta3=-0.5)
    # -max(2 - 0.08*5 - 0.1*10 - 0.5*1, 1 - 0.08*5) = -max(0.1, 0.6)
    assert pairwise_cost_from_distances(5.0, 10.0, 1.0, params) == pytest.approx(-0.6)


def test_pairwise_cost_on_trajectories():
    a = traj(0, line((0, 0), (0, 0)))
    b = traj(1, line((3, 4), (25, 0)))
    assert pairwise_cost(a, b) == pytest.approx(1.0)
    mean, peak = spatial_distance(a, traj(2, line((3, 4), (0, 0))))
    assert (mean, peak) == (5.0, 5.0)


def test_transform_translation():
    tf = estimate_euclidean_transform((0, 0), (1, 0), (3, 4), (4, 4))
    assert tf.alpha == pytest.approx(0, abs=1e-12)
    assert tf.scale == pytest.approx(1)
    assert tf.shift == pytest.approx((3, 4))


def test_transform_rotation():
    tf = estimate_euclidean_transform((1, 0), (2, 0), (0, 1), (0, 2))
    assert tf.alpha == pytest.approx(math.pi / 2)
    assert tf.scale == pytest.approx(1)
    assert tf.shift == pytest.approx((0, 0), abs=1e-12)


def test_transform_scaling():
    tf = estimate_euclidean_transform((0, 0), (1, 0), (0, 0), (2, 0))
    assert tf.alpha == pytest.approx(0, abs=1e-12)
    assert tf.scale == pytest.approx(2)
    assert tf.shift == pytest.approx((0, 0), abs=1e-12)


def test_transform_degenerate_pair():
    with pytest.raises(DegeneratePair):
        estimate_euclidean_transform((1, 1), (1, 1), (0, 0), (2, 0))


def test_triplet_distance_examples():
    shift = estimate_euclidean_transform((0, 0), (1, 0), (3, 4), (4, 4))
    assert triplet_distance(shift, (5, 5), (8, 9)) == pytest.approx(0, abs=1e-12)
    assert triplet_distance(shift, (0, 1), (3, 6)) == pytest.approx(1)
    turn = estimate_euclidean_transform((1, 0), (2, 0), (0, 1), (0, 2))
    assert triplet_distance(turn, (0, 1), (-1, 0)) == pytest.approx(0, abs=1e-12)


def test_gamma_examples():
    eq = [(0, 0), (1, 0), (0.5, math.sqrt(3) / 2)]
    assert gamma(*eq) == pytest.approx(1)
    assert gamma(*eq, sigma=2.0) == pytest.approx(0.5)
    assert gamma((0, 0), (2, 0), (1, 0.0001)) == pytest.approx(2 ** 0.25, rel=1e-6)
    with pytest.raises(DegenerateTriple):
        gamma((0, 0), (0, 0), (1, 1))


@pytest.mark.parametrize(
    "d_min, d_max, expected",
    [(0.0, 0.0, -1.0), (10.0, 50.0, 0.0), (25.0, 50.0, 1.0), (1.0, 5.0, -0.6)],
)
def test_combine_examples(d_min, d_max, expected):
    assert combine_third_order(d_min, d_max) == pytest.approx(expected)


def test_rigid_triple_is_attractive():
    pts = np.array([(0.0, 0.0), (10.0, 0.0), (3.0, 7.0)])
    frames = [similarity(0.05 * t, 1.02 ** t, (2.0 * t, -t), pts) for t in range(6)]
    trajs = [traj(i, [f[i] for f in frames]) for i in range(3)]
    d_min, d_max = triplet_distances(*trajs)
    assert d_max < 1e-9
    assert triplet_cost(*trajs) == pytest.approx(-1)


def test_triple_needs_two_common_frames():
    a = traj(0, line((0, 0), (1, 0), 3), start=0)
    b = traj(1, line((5, 0), (1, 0), 3), start=0)
    c = traj(2, line((0, 5), (1, 0), 3), start=2)
    with pytest.raises(NoOverlap):
        triplet_cost(a, b, c)


def test_all_degenerate_transitions_raise():
    a = traj(0, line((0, 0), (1, 0)))
    b = traj(1, line((0, 0), (1, 0)))
    c = traj(2, line((3, 3), (1, 0)))
    with pytest.raises(DegenerateTriple):
        triplet_cost(a, b, c)


points = st.tuples(st.floats(-50, 50), st.floats(-50, 50))


@given(st.lists(points, min_size=3, max_size=3), st.lists(points, min_size=3, max_size=3))
@settings(max_examples=200, deadline=None)
def test_batch_residuals_match_scalar_route(before, after):
    p0, p1 = np.array(before), np.array(after)
    dists = [np.linalg.norm(p0[i] - p0[j]) for i, j in ((0, 1), (0, 2), (1, 2))]
    assume(min(dists) > 1e-3)
    batch = batch_triplet_residuals(p0[None], p1[None])[0]
    try:
        scalar = triplet_residuals(*p0, *p1)
    except DegeneratePair:
        assert np.isnan(batch).any()
        return
    assert batch == pytest.approx(scalar, rel=1e-9, abs=1e-9)


@given(st.lists(st.lists(points, min_size=3, max_size=3), min_size=2, max_size=4))
@settings(max_examples=150, deadline=None)
def test_triplet_cost_is_order_invariant(frames):
    arr = np.array(frames)
    for t in range(len(arr)):
        d = [np.linalg.norm(arr[t, i] - arr[t, j]) for i, j in ((0, 1), (0, 2), (1, 2))]
        assume(min(d) > 1e-2)
    trajs = [traj(i, arr[:, i]) for i in range(3)]
    base = triplet_cost(*trajs)
    d_min, d_max = triplet_distances(*trajs)
    assert d_min <= d_max
    params = CostParams()
    assert params.third_order(d_min) <= params.third_order(d_max)
    # the combined cost never leaves the interval spanned by the two one-sided costs
    assert min(params.third_order(d_min), 0.0) - 1e-12 <= base <= max(params.third_order(d_max), 0.0) + 1e-12
    for perm in itertools.permutations(range(3)):
        assert triplet_cost(*[trajs[i] for i in perm]) == pytest.approx(base, abs=1e-9)


@given(st.lists(points, min_size=4, max_size=4), st.lists(points, min_size=4, max_size=4))
@settings(max_examples=150, deadline=None)
def test_motion_distance_is_symmetric(a, b):
    ta, tb = traj(0, a), traj(1, b)
    d = pairwise_motion_distance(ta, tb)
    assert d >= 0
    assert d == pytest.approx(pairwise_motion_distance(tb, ta))
    assert (d == 0) == np.allclose(np.diff(np.array(a), axis=0), np.diff(np.array(b), axis=0), rtol=0, atol=0)


def test_batch_costs_skip_degenerate_rows():
    p0 = np.array([[(0, 0), (0, 0), (1, 1)], [(0, 0), (4, 0), (0, 3)]], float)
    costs = batch_third_order_costs(p0, p0 + 1.0)
    assert costs[0] == 0.0
    assert costs[1] == pytest.approx(-1)
