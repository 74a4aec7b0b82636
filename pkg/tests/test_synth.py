from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from holmc.builder import BuilderConfig, Mode, build_graph
from holmc.exact import solve_exact
from holmc.model import partition_from_labeling
from holmc.motion import pairwise_motion_distance, triplet_distances
from holmc.synth import (
    Disk,
    Motion,
    OverlappingSupports,
    Rect,
    SceneObject,
    SceneSpec,
    generate_grid_instance,
    generate_scene,
    random_instance,
    rand_index,
    score_partition,
    synthetic_flow,
)
from oracles import rand_by_pairs


def test_static_object_is_constant():
    trajs, labels = generate_scene(SceneSpec(4, [SceneObject(Rect(0, 0, 16, 16))]))
    assert len(trajs) == 9 and set(labels) == {0}
    for t in trajs:
        assert np.all(t.positions == t.positions[0])


def test_translation_is_shared():
    spec = SceneSpec(5, [SceneObject(Disk(0, 0, 10), Motion(velocity=(1.0, 0.0)))], step=4.0)
    for t in generate_scene(spec)[0]:
        assert np.allclose(np.diff(t.positions, axis=0), (1.0, 0.0))


def test_rotation_breaks_translation_but_not_similarity():
    spec = SceneSpec(
        6,
        [
            SceneObject(Rect(0, 0, 60, 60), holes=(Disk(30, 30, 22),)),
            SceneObject(Disk(30, 30, 20), Motion(rotation=math.radians(2.0))),
        ],
        step=10.0,
    )
    trajs, labels = generate_scene(spec)
    disk = [t for t, lab in zip(trajs, labels) if lab == 1]
    assert len(disk) >= 3
    assert pairwise_motion_distance(disk[0], disk[-1]) > 0.1
    d_min, d_max = triplet_distances(disk[0], disk[1], disk[-1])
    assert d_max < 1e-9


def test_overlapping_supports_are_rejected():
    spec = SceneSpec(3, [SceneObject(Rect(0, 0, 20, 20)), SceneObject(Disk(10, 10, 5))])
    with pytest.raises(OverlappingSupports):
        generate_scene(spec)


def test_scene_is_seeded():
    spec = SceneSpec(4, [SceneObject(Rect(0, 0, 24, 24), Motion(velocity=(1, 1)))], noise=0.5, seed=3)
    a, _ = generate_scene(spec)
    b, _ = generate_scene(spec)
    assert all(np.array_equal(x.positions, y.positions) for x, y in zip(a, b))


def test_scene_validation():
    with pytest.raises(ValueError):
        SceneSpec(1, [])
    with pytest.raises(ValueError):
        SceneSpec(3, [], noise=-1.0)


def test_constant_flow_triples_are_attractive():
    g = generate_grid_instance(synthetic_flow(3, "constant"))
    triples = [c for vs, c in zip(g.edge_nodes, g.costs) if len(vs) == 3]
    assert triples and all(c == pytest.approx(-1.0) for c in triples)
    assert all(c == 0.0 for vs, c in zip(g.edge_nodes, g.costs) if len(vs) == 2)


def test_grid_sizes():
    g = generate_grid_instance(synthetic_flow(3))
    assert g.node_count == 64
    assert 0 < g.higher_order_count() <= 6 * 64
    assert sum(1 for vs in g.edge_nodes if len(vs) == 2) == 2 * 7 * 8 + 2 * 7 * 7
    lifted = generate_grid_instance(synthetic_flow(3), lifted=True)
    assert sum(lifted.is_lifted) == 3 * 8 + 3 * 8 + 2 * 3 * 3


def test_two_region_grid_splits_cleanly():
    flow = np.zeros((2, 4, 2))
    flow[:, 2:, 0] = 20.0
    for lifted in (False, True):
        g = generate_grid_instance(flow, lifted=lifted, lift_distance=2)
        y, _ = solve_exact(g)
        assert partition_from_labeling(g, y) == (0, 0, 2, 2, 0, 0, 2, 2)


def test_one_rigid_object_is_one_segment():
    spec = SceneSpec(6, [SceneObject(Rect(0, 0, 20, 10), Motion(velocity=(2, 1), rotation=0.02))], step=10.0)
    trajs, _ = generate_scene(spec)
    assert len(trajs) == 6
    g = build_graph(trajs, config=BuilderConfig(Mode.AOMC))
    assert all(c < 0 for vs, c in zip(g.edge_nodes, g.costs) if len(vs) == 2)
    y, _ = solve_exact(g)
    assert set(partition_from_labeling(g, y)) == {0}


def test_identical_partitions_score_one():
    assert tuple(score_partition([0, 0, 1, 2], [5, 5, 7, 9])) == (1.0, 1.0, 1.0, 1.0)


def test_singletons_against_two_classes():
    truth = [0, 0, 0, 1, 1, 1]
    scores = score_partition(list(range(6)), truth)
    assert scores.rand_index == pytest.approx(9 / 15)
    assert scores.rand_index == pytest.approx(rand_by_pairs(list(range(6)), truth))


def test_one_class_against_two():
    scores = score_partition([0] * 6, [0, 0, 0, 1, 1, 1])
    assert scores.precision == pytest.approx(0.5)
    assert scores.recall == pytest.approx(1.0)
    assert scores.f_measure == pytest.approx(2 / 3)
    assert scores.rand_index == pytest.approx(rand_by_pairs([0] * 6, [0, 0, 0, 1, 1, 1]))


def test_size_mismatch():
    with pytest.raises(ValueError):
        score_partition([0, 1], [0, 1, 2])


@given(st.lists(st.tuples(st.integers(0, 3), st.integers(0, 3)), min_size=1, max_size=30))
@settings(max_examples=200, deadline=None)
def test_rand_properties(pairs):
    a = [p for p, _ in pairs]
    b = [q for _, q in pairs]
    r = rand_index(a, b)
    assert 0.0 <= r <= 1.0
    assert r == pytest.approx(rand_index(b, a))
    assert r == pytest.approx(rand_by_pairs(a, b))
    s = score_partition(a, b)
    assert 0 <= s.precision <= 1 and 0 <= s.recall <= 1 and 0 <= s.f_measure <= 1


def test_random_instance_is_seeded():
    a = random_instance(np.random.default_rng(4))
    b = random_instance(np.random.default_rng(4))
    assert a.edge_nodes == b.edge_nodes and a.costs == b.costs and a.kinds == b.kinds
