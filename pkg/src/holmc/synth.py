"""Synthetic ground truth: moving-object scenes, flow grids, random instances, scores."""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from .hypergraph import HypergraphBuilder, Kind, LiftedHypergraph
from .motion import CostParams, EuclideanTransform, Trajectory, batch_third_order_costs, pairwise_cost_from_distances


class OverlappingSupports(ValueError):
    pass


@dataclass(frozen=True)
class Disk:
    cx: float
    cy: float
    r: float

    def contains(self, pts: np.ndarray) -> np.ndarray:
        return np.hypot(pts[:, 0] - self.cx, pts[:, 1] - self.cy) <= self.r

    @property
    def center(self) -> tuple[float, float]:
        return self.cx, self.cy


@dataclass(frozen=True)
class Rect:
    x0: float
    y0: float
    x1: float
    y1: float

    def contains(self, pts: np.ndarray) -> np.ndarray:
        return (pts[:, 0] >= self.x0) & (pts[:, 0] <= self.x1) & (pts[:, 1] >= self.y0) & (pts[:, 1] <= self.y1)

    @property
    def center(self) -> tuple[float, float]:
        return 0.5 * (self.x0 + self.x1), 0.5 * (self.y0 + self.y1)


@dataclass
class Motion:
    """Rigid motion plus isotropic scaling about a pivot, as rates per frame."""

    velocity: tuple[float, float] = (0.0, 0.0)
    rotation: float = 0.0  # rad / frame
    scaling: float = 1.0  # factor / frame
    pivot: tuple[float, float] | None = None  # defaults to the support center

    def transform(self, frame: int, pivot: tuple[float, float]) -> EuclideanTransform:
        """Map from frame-0 positions to positions at ``frame``."""
        alpha = self.rotation * frame
        s = self.scaling ** frame
        c, sn = math.cos(alpha), math.sin(alpha)
        px, py = pivot
        vx = px + self.velocity[0] * frame - s * (c * px - sn * py)
        vy = py + self.velocity[1] * frame - s * (sn * px + c * py)
        return EuclideanTransform(alpha, s, (vx, vy))


@dataclass
class SceneObject:
    support: Disk | Rect
    motion: Motion = field(default_factory=Motion)
    holes: tuple[Disk | Rect, ...] = ()

    def covers(self, pts: np.ndarray) -> np.ndarray:
        inside = self.support.contains(pts)
        for hole in self.holes:
            inside &= ~hole.contains(pts)
        return inside

    def transforms(self, n_frames: int) -> list[EuclideanTransform]:
        pivot = self.motion.pivot or self.support.center
        return [self.motion.transform(t, pivot) for t in range(n_frames)]


@dataclass
class SceneSpec:
    n_frames: int
    objects: list[SceneObject]
    step: float = 8.0
    noise: float = 0.0
    seed: int = 0
    extent: tuple[float, float, float, float] | None = None  # sampling window x0, y0, x1, y1

    def __post_init__(self):
        if self.n_frames < 2:
            raise ValueError("a scene needs at least two frames")
        if self.noise < 0:
            raise ValueError("noise must be non-negative")
        if self.step <= 0:
            raise ValueError("step must be positive")


def _sample_grid(spec: SceneSpec) -> np.ndarray:
    if spec.extent is None:
        boxes = []
        for obj in spec.objects:
            s = obj.support
            if isinstance(s, Disk):
                boxes.append((s.cx - s.r, s.cy - s.r, s.cx + s.r, s.cy + s.r))
            else:
                boxes.append((s.x0, s.y0, s.x1, s.y1))
        b = np.array(boxes)
        x0, y0, x1, y1 = b[:, 0].min(), b[:, 1].min(), b[:, 2].max(), b[:, 3].max()
    else:
        x0, y0, x1, y1 = spec.extent
    xs = np.arange(x0, x1 + 1e-9, spec.step)
    ys = np.arange(y0, y1 + 1e-9, spec.step)
    gx, gy = np.meshgrid(xs, ys)
    return np.stack([gx.ravel(), gy.ravel()], axis=1)


def generate_scene(spec: SceneSpec) -> tuple[list[Trajectory], list[int]]:
    """Grid-sampled trajectories advected by each object's motion, plus object labels."""
    grid = _sample_grid(spec)
    owner = np.full(len(grid), -1)
    for idx, obj in enumerate(spec.objects):
        inside = obj.covers(grid)
        if (inside & (owner >= 0)).any():
            raise OverlappingSupports(f"object {idx} overlaps an earlier object")
        owner[inside] = idx
    rng = np.random.default_rng(spec.seed)
    trajectories: list[Trajectory] = []
    labels: list[int] = []
    for idx, obj in enumerate(spec.objects):
        pts = grid[owner == idx]
        if not len(pts):
            continue
        track = np.stack([tf.apply(pts) for tf in obj.transforms(spec.n_frames)], axis=1)
        if spec.noise > 0:
            track = track + rng.normal(0.0, spec.noise, size=track.shape)
        for p in track:
            trajectories.append(Trajectory(len(trajectories), 0, p))
            labels.append(idx)
    return trajectories, labels


def rotation_scene(seed: int = 0, noise: float = 0.3, n_frames: int = 20) -> SceneSpec:
    """Static background plus a disk that drifts while spinning and growing.

    The spin is fast enough that far-apart disk points differ in velocity by
    more than a translational model tolerates; about 200 trajectories.
    """
    return SceneSpec(
        n_frames=n_frames,
        objects=[
            SceneObject(Rect(0.0, 0.0, 150.0, 110.0), holes=(Disk(75.0, 55.0, 51.0),)),
            SceneObject(Disk(75.0, 55.0, 45.0), Motion(velocity=(15.0, 5.0), rotation=0.25, scaling=1.02)),
        ],
        step=9.0,
        noise=noise,
        seed=seed,
    )


def twin_scene(per_side: int = 4, gap: float = 64.0, step: float = 8.0, n_frames: int = 8, noise: float = 0.0, seed: int = 0) -> SceneSpec:
    """Two equal squares of points, ``gap`` px apart, translating identically."""
    size = (per_side - 1) * step
    motion = Motion(velocity=(3.0, 1.0))
    left = Rect(0.0, 0.0, size, size)
    right = Rect(size + gap, 0.0, 2 * size + gap, size)
    return SceneSpec(n_frames, [SceneObject(left, motion), SceneObject(right, motion)], step=step, noise=noise, seed=seed)


# Third-order stencil per node at (x, y), as (dx, dy) offsets of its three pixels.
STENCIL = (
    ((0, 0), (1, 0), (2, 0)),
    ((0, 0), (0, 1), (0, 2)),
    ((0, 0), (1, 1), (2, 2)),
    ((0, 0), (1, -1), (2, -2)),
    ((0, 0), (1, 0), (0, 1)),
    ((0, 0), (1, 0), (1, 1)),
)
NEIGHBORHOOD = ((1, 0), (0, 1), (1, 1), (1, -1))


def lifted_offsets(distance: int = 5) -> tuple[tuple[int, int], ...]:
    return ((distance, 0), (0, distance), (distance, distance), (distance, -distance))


def generate_grid_instance(
    flow: np.ndarray,
    lifted: bool = False,
    params: CostParams | None = None,
    lift_distance: int = 5,
) -> LiftedHypergraph:
    """Pixel graph of a flow field: stencil triples, zero-cost 8-neighbourhood, lifted edges.

    ``flow`` has shape (h, w, 2); node ``y * w + x`` is pixel (x, y). Each
    pixel is a two-frame trajectory from its position to position + flow.
    """
    params = params or CostParams()
    flow = np.asarray(flow, dtype=float)
    h, w, _ = flow.shape
    ys, xs = np.mgrid[0:h, 0:w]
    p0 = np.stack([xs, ys], axis=-1).astype(float)
    p1 = p0 + flow
    builder = HypergraphBuilder(h * w)

    triples = []
    for offsets in STENCIL:
        cols = []
        ok = np.ones((h, w), dtype=bool)
        for dx, dy in offsets:
            ok &= (xs + dx >= 0) & (xs + dx < w) & (ys + dy >= 0) & (ys + dy < h)
        for dx, dy in offsets:
            cols.append(((ys + dy) * w + (xs + dx))[ok])
        triples.append(np.stack(cols, axis=1))
    tri = np.concatenate(triples)
    tri = tri[np.lexsort(tri.T[::-1])]
    flat0 = p0.reshape(-1, 2)
    flat1 = p1.reshape(-1, 2)
    costs = batch_third_order_costs(flat0[tri], flat1[tri], params, params.sigma.at(0))
    for nodes, c in zip(tri.tolist(), costs.tolist()):
        builder.add_edge(nodes, c)

    def pairs(offsets):
        for dx, dy in offsets:
            ok = (xs + dx >= 0) & (xs + dx < w) & (ys + dy >= 0) & (ys + dy < h)
            a = (ys * w + xs)[ok]
            b = ((ys + dy) * w + (xs + dx))[ok]
            yield a, b

    for a, b in pairs(NEIGHBORHOOD):
        for u, v in zip(a.tolist(), b.tolist()):
            builder.add_edge((u, v), 0.0)
    if lifted:
        flat_flow = flow.reshape(-1, 2)
        for a, b in pairs(lifted_offsets(lift_distance)):
            dm = np.linalg.norm(flat_flow[a] - flat_flow[b], axis=1) / params.sigma.at(0)
            ds = np.linalg.norm(flat0[a] - flat0[b], axis=1)
            for u, v, m, s in zip(a.tolist(), b.tolist(), dm.tolist(), ds.tolist()):
                builder.add_edge((u, v), pairwise_cost_from_distances(m, s, 0.0, params), Kind.LIFTED)
    return builder.build()


def synthetic_flow(k: int, pattern: str = "scene", seed: int = 0) -> np.ndarray:
    """Flow field of side ``2**k``, in pixels of that resolution.

    Magnitudes are defined at 128 px and scaled with the side, the way a
    downsampled flow field shrinks.
    """
    n = 2 ** k
    scale = n / 128.0
    ys, xs = np.mgrid[0:n, 0:n].astype(float)
    u = (xs + 0.5) / n
    v = (ys + 0.5) / n
    flow = np.zeros((n, n, 2))
    if pattern == "constant":
        flow[..., 0] = 3.0 * scale
    elif pattern == "two-region":
        flow[..., 0] = np.where(u < 0.5, 0.0, 20.0 * scale)
    elif pattern == "scene":
        flow[..., 0] = -4.0 * scale
        flow[..., 1] = 1.0 * scale
        cx, cy, r = 0.45, 0.55, 0.28
        inside = np.hypot(u - cx, v - cy) < r
        omega, growth = 0.15, 0.04
        dx, dy = (u - cx) * 128, (v - cy) * 128
        rot_x = -omega * dy + growth * dx + 12.0
        rot_y = omega * dx + growth * dy - 3.0
        flow[..., 0] = np.where(inside, rot_x * scale, flow[..., 0])
        flow[..., 1] = np.where(inside, rot_y * scale, flow[..., 1])
        box = (u > 0.75) & (u < 0.95) & (v > 0.1) & (v < 0.35)
        flow[..., 0] = np.where(box, 10.0 * scale, flow[..., 0])
        flow[..., 1] = np.where(box, 8.0 * scale, flow[..., 1])
    else:
        raise ValueError(f"unknown flow pattern {pattern!r}")
    if seed:
        flow += np.random.default_rng(seed).normal(0.0, 0.05 * scale, size=flow.shape)
    return flow


def random_instance(
    rng: np.random.Generator,
    n_nodes: int | None = None,
    lifted_share: float = 0.3,
    cost_range: float = 2.0,
    pair_prob: float = 0.5,
    triple_prob: float = 0.15,
) -> LiftedHypergraph:
    """Random instance with pairwise and third-order edges and uniform costs."""
    n = int(rng.integers(4, 9)) if n_nodes is None else n_nodes
    builder = HypergraphBuilder(n)
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < pair_prob:
                kind = Kind.LIFTED if rng.random() < lifted_share else Kind.CONNECTIVITY
                builder.add_edge((i, j), rng.uniform(-cost_range, cost_range), kind)
    for i in range(n):
        for j in range(i + 1, n):
            for k in range(j + 1, n):
                if rng.random() < triple_prob:
                    kind = Kind.LIFTED if rng.random() < lifted_share else Kind.CONNECTIVITY
                    builder.add_edge((i, j, k), rng.uniform(-cost_range, cost_range), kind)
    return builder.build()


@dataclass(frozen=True)
class Scores:
    rand_index: float
    precision: float
    recall: float
    f_measure: float

    def __iter__(self):
        return iter((self.rand_index, self.precision, self.recall, self.f_measure))


def rand_index(predicted: Sequence[int], truth: Sequence[int]) -> float:
    """Share of node pairs on which both partitions agree (same vs different class)."""
    if len(predicted) != len(truth):
        raise ValueError(f"size mismatch: {len(predicted)} vs {len(truth)}")
    n = len(predicted)
    if n < 2:
        return 1.0
    _, p = np.unique(np.asarray(predicted), return_inverse=True)
    _, t = np.unique(np.asarray(truth), return_inverse=True)
    table = np.zeros((p.max() + 1, t.max() + 1), dtype=np.int64)
    np.add.at(table, (p, t), 1)

    def pairs(x):
        return (x * (x - 1) // 2).sum()

    total = n * (n - 1) // 2
    both = pairs(table)
    agree = total - pairs(table.sum(axis=1)) - pairs(table.sum(axis=0)) + 2 * both
    return float(agree / total)


def score_partition(predicted: Sequence[int], truth: Sequence[int]) -> Scores:
    """Rand index plus precision/recall/F over greedily matched clusters.

    Clusters are matched one-to-one by decreasing overlap; precision and
    recall are averaged over the matched pairs.
    """
    ri = rand_index(predicted, truth)
    _, p = np.unique(np.asarray(predicted), return_inverse=True)
    _, t = np.unique(np.asarray(truth), return_inverse=True)
    table = np.zeros((p.max() + 1, t.max() + 1), dtype=np.int64)
    np.add.at(table, (p, t), 1)
    pred_sizes = table.sum(axis=1)
    true_sizes = table.sum(axis=0)
    order = sorted(
        ((int(table[a, b]), a, b) for a in range(table.shape[0]) for b in range(table.shape[1]) if table[a, b]),
        key=lambda x: (-x[0], x[1], x[2]),
    )
    used_p: set[int] = set()
    used_t: set[int] = set()
    precisions, recalls = [], []
    for overlap, a, b in order:
        if a in used_p or b in used_t:
            continue
        used_p.add(a)
        used_t.add(b)
        precisions.append(overlap / pred_sizes[a])
        recalls.append(overlap / true_sizes[b])
    precision = float(np.mean(precisions))
    recall = float(np.mean(recalls))
    f = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return Scores(ri, precision, recall, float(f))
