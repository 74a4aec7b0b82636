"""Problem instances from point trajectories.

Four constructions are supported: motion-adaptive (pairwise edges, and
third-order edges only around pairs that translational motion does not
explain), additive pairwise plus third order, purely third order, and
pairwise only. Any of them can be lifted, which turns long-range
pairwise edges into lifted edges.
"""

from __future__ import annotations

import enum
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from .hypergraph import HypergraphBuilder, Kind, LiftedHypergraph
from .motion import (
    CostParams,
    Trajectory,
    batch_triplet_residuals,
    combine_third_order_batch,
    distances_from_residuals,
    pairwise_cost_from_distances,
)


class Mode(enum.Enum):
    AOMC = "aomc"
    HOPMC = "hopmc"
    HOMC = "homc"
    PAIRWISE = "pairwise"


@dataclass
class BuilderConfig:
    mode: Mode = Mode.AOMC
    lifted: bool = False
    pairwise_cutoff: float = 100.0  # px, mean distance
    lift_knn: int = 12
    lift_dist: float = 40.0  # px, max distance
    triple_full_dist: float = 20.0
    triple_max_dist: float = 300.0
    seed: int = 0

    def __post_init__(self):
        self.mode = Mode(self.mode)
        if not 0 < self.triple_full_dist < self.triple_max_dist:
            raise ValueError("need 0 < triple_full_dist < triple_max_dist")
        if not self.lift_dist < self.pairwise_cutoff:
            raise ValueError("lift_dist must be below pairwise_cutoff")
        if self.lift_knn < 0:
            raise ValueError("lift_knn must be non-negative")


class TrajectoryTable:
    """Trajectories as NaN-padded arrays, plus all pairwise statistics."""

    def __init__(self, trajectories: Sequence[Trajectory], params: CostParams | None = None):
        self.trajectories = list(trajectories)
        self.params = params or CostParams()
        n = len(self.trajectories)
        n_frames = max((t.end_frame for t in self.trajectories), default=0)
        dim = max((t.features.shape[1] for t in self.trajectories if t.features is not None), default=0)
        pos = np.full((n, n_frames, 2), np.nan)
        feat = np.full((n, n_frames, dim), np.nan)
        for i, t in enumerate(self.trajectories):
            pos[i, t.start_frame:t.end_frame] = t.positions
            if dim and t.features is not None:
                feat[i, t.start_frame:t.end_frame] = t.features
        self.positions = pos
        self.n = n
        self.n_frames = n_frames
        sigma = self.params.sigma.over(0, max(n_frames - 1, 0))

        alive = ~np.isnan(pos[:, :, 0])
        vel = np.diff(pos, axis=1)
        self.frames = np.zeros((n, n), dtype=int)
        self.mean_dist = np.full((n, n), np.nan)
        self.max_dist = np.full((n, n), np.nan)
        self.cost = np.full((n, n), np.nan)
        with np.errstate(invalid="ignore"):
            for i in range(n):
                both = alive[i] & alive
                self.frames[i] = both.sum(axis=1)
                d = np.linalg.norm(pos[i] - pos, axis=2)
                has = self.frames[i] > 0
                self.mean_dist[i, has] = np.nanmean(d[has], axis=1)
                self.max_dist[i, has] = np.nanmax(d[has], axis=1)
                dv = np.linalg.norm(vel[i] - vel, axis=2) / sigma
                two = self.frames[i] >= 2
                dm = np.nanmax(dv[two], axis=1) if two.any() else np.array([])
                if dim and self.trajectories[i].features is not None:
                    dc = np.nanmean(np.linalg.norm(feat[i] - feat, axis=2)[two], axis=1)
                    dc = np.nan_to_num(dc)
                else:
                    dc = np.zeros(two.sum())
                ds = self.mean_dist[i, two]
                p = self.params
                self.cost[i, two] = -np.maximum(
                    p.theta_bar0 + p.theta1 * dm + p.theta2 * ds + p.theta3 * dc,
                    p.theta0 + p.theta1 * dm,
                )
        np.fill_diagonal(self.frames, 0)
        np.fill_diagonal(self.cost, np.nan)

    def pair_cost(self, i: int, j: int) -> float:
        return float(self.cost[i, j])

    def admissible_pair(self, i: int, j: int, cutoff: float) -> bool:
        return self.frames[i, j] >= 2 and self.mean_dist[i, j] < cutoff

    def triple_costs(self, triples: np.ndarray, chunk: int = 4096) -> np.ndarray:
        """Third-order costs; NaN where the three never share a usable transition."""
        out = np.empty(len(triples))
        sigma = self.params.sigma.over(0, max(self.n_frames - 1, 0))
        for lo in range(0, len(triples), chunk):
            tri = triples[lo:lo + chunk]
            pts = self.positions[tri]  # (m, 3, F, 2)
            m = len(tri)
            p0 = pts[:, :, :-1].transpose(0, 2, 1, 3).reshape(-1, 3, 2)
            p1 = pts[:, :, 1:].transpose(0, 2, 1, 3).reshape(-1, 3, 2)
            res = batch_triplet_residuals(p0, p1, np.tile(sigma, m)).reshape(m, -1, 3)
            d_min, d_max = distances_from_residuals(res)
            cost = combine_third_order_batch(d_min, d_max, self.params)
            out[lo:lo + chunk] = np.where(np.isnan(d_max), np.nan, cost)
        return out


def keep_probability(d, config: BuilderConfig | None = None):
    """Chance that a triple with maximal pairwise distance ``d`` is kept.

    Everything up to ``triple_full_dist`` is kept; beyond that, up to
    ``triple_max_dist``, a share of ``100/d**2`` percent.
    """
    config = config or BuilderConfig()
    d = np.asarray(d, dtype=float)
    with np.errstate(divide="ignore"):
        p = np.where(d <= config.triple_full_dist, 1.0, 1.0 / np.maximum(d, 1e-300) ** 2)
    return np.where(d >= config.triple_max_dist, 0.0, np.minimum(p, 1.0))


_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_GOLD = np.uint64(0x9E3779B97F4A7C15)


def _mix(x: np.ndarray) -> np.ndarray:
    x = x ^ (x >> np.uint64(30))
    x = x * _M1
    x = x ^ (x >> np.uint64(27))
    x = x * _M2
    return x ^ (x >> np.uint64(31))


def triple_uniforms(triples: np.ndarray, seed: int) -> np.ndarray:
    """One U[0, 1) draw per triple, a pure function of (seed, sorted triple)."""
    t = np.sort(np.asarray(triples, dtype=np.int64).reshape(-1, 3), axis=1).astype(np.uint64)
    with np.errstate(over="ignore"):
        h = _mix(np.full(len(t), np.uint64(seed & 0xFFFFFFFFFFFFFFFF)) + _GOLD)
        for col in range(3):
            h = _mix(h ^ (t[:, col] + _GOLD))
    return (h >> np.uint64(11)).astype(np.float64) / float(1 << 53)


def sample_triples(triples: np.ndarray, distances: np.ndarray, config: BuilderConfig | None = None) -> np.ndarray:
    """Boolean mask of the triples kept by distance-dependent sampling."""
    config = config or BuilderConfig()
    triples = np.asarray(triples).reshape(-1, 3)
    p = keep_probability(distances, config)
    return triple_uniforms(triples, config.seed) < p


def _triple_spread(table: TrajectoryTable, triples: np.ndarray) -> np.ndarray:
    i, j, k = triples[:, 0], triples[:, 1], triples[:, 2]
    d = np.stack([table.mean_dist[i, j], table.mean_dist[i, k], table.mean_dist[j, k]], axis=1)
    return d.max(axis=1)  # NaN if some pair never coexists


def _third_partners(table: TrajectoryTable, i: int, j: int, config: BuilderConfig) -> np.ndarray:
    ks = np.arange(table.n)
    ks = ks[(ks != i) & (ks != j)]
    tri = np.stack([np.full(len(ks), i), np.full(len(ks), j), ks], axis=1)
    d = _triple_spread(table, tri)
    ok = np.isfinite(d) & (d < config.triple_max_dist)
    tri, d = tri[ok], d[ok]
    return tri[sample_triples(tri, d, config)]


def _admissible_pairs(table: TrajectoryTable, config: BuilderConfig) -> list[tuple[int, int]]:
    ii, jj = np.nonzero(np.triu((table.frames >= 2) & (table.mean_dist < config.pairwise_cutoff), 1))
    return list(zip(ii.tolist(), jj.tolist()))


def _all_triples(table: TrajectoryTable, config: BuilderConfig) -> np.ndarray:
    n = table.n
    found = []
    for i in range(n):
        for j in range(i + 1, n):
            if not np.isfinite(table.mean_dist[i, j]) or table.mean_dist[i, j] >= config.triple_max_dist:
                continue
            ks = np.arange(j + 1, n)
            if not len(ks):
                continue
            tri = np.stack([np.full(len(ks), i), np.full(len(ks), j), ks], axis=1)
            d = _triple_spread(table, tri)
            ok = np.isfinite(d) & (d < config.triple_max_dist)
            tri, d = tri[ok], d[ok]
            found.append(tri[sample_triples(tri, d, config)])
    return np.concatenate(found) if found else np.zeros((0, 3), dtype=int)


def _add_triples(builder: HypergraphBuilder, table: TrajectoryTable, triples: np.ndarray) -> None:
    if not len(triples):
        return
    costs = table.triple_costs(triples)
    for tri, c in zip(triples.tolist(), costs.tolist()):
        if np.isfinite(c):
            builder.add_edge(tri, c)


def build_adaptive(table: TrajectoryTable, config: BuilderConfig) -> LiftedHypergraph:
    """Pairwise edges everywhere; triples only around non-attractive pairs.

    Attractive pairs keep their translational cost. Any other pair is
    inserted with cost 0 and proposes a third-order edge with every
    admissible third trajectory; a triple proposed twice is kept once.
    """
    builder = HypergraphBuilder(table.n)
    seen: set[tuple[int, int, int]] = set()
    proposed = []
    for i, j in _admissible_pairs(table, config):
        c = table.pair_cost(i, j)
        if c < 0:
            builder.add_edge((i, j), c)
            continue
        builder.add_edge((i, j), 0.0)
        for tri in _third_partners(table, i, j, config).tolist():
            key = tuple(sorted(tri))
            if key not in seen:
                seen.add(key)
                proposed.append(key)
    _add_triples(builder, table, np.array(proposed, dtype=int).reshape(-1, 3))
    return builder.build()


def build_hopmc(table: TrajectoryTable, config: BuilderConfig) -> LiftedHypergraph:
    builder = HypergraphBuilder(table.n)
    for i, j in _admissible_pairs(table, config):
        builder.add_edge((i, j), table.pair_cost(i, j))
    _add_triples(builder, table, _all_triples(table, config))
    return builder.build()


def build_homc(table: TrajectoryTable, config: BuilderConfig) -> LiftedHypergraph:
    builder = HypergraphBuilder(table.n)
    _add_triples(builder, table, _all_triples(table, config))
    return builder.build()


def build_pairwise(table: TrajectoryTable, config: BuilderConfig) -> LiftedHypergraph:
    builder = HypergraphBuilder(table.n)
    for i, j in _admissible_pairs(table, config):
        builder.add_edge((i, j), table.pair_cost(i, j))
    return builder.build()


def nearest_neighbors(table: TrajectoryTable, k: int) -> list[set[int]]:
    """The k spatially closest co-existing trajectories of each trajectory."""
    out = []
    for i in range(table.n):
        d = table.mean_dist[i].copy()
        d[i] = np.nan
        cand = np.flatnonzero(np.isfinite(d))
        order = cand[np.argsort(d[cand], kind="stable")]
        out.append(set(order[:k].tolist()))
    return out


def lift(graph: LiftedHypergraph, table: TrajectoryTable, config: BuilderConfig) -> LiftedHypergraph:
    """Mark long-range pairwise edges as lifted; higher-order edges stay in F."""
    knn = nearest_neighbors(table, config.lift_knn)
    builder = HypergraphBuilder(graph.node_count)
    for nodes, kind, cost in zip(graph.edge_nodes, graph.kinds, graph.costs):
        if len(nodes) == 2:
            i, j = nodes
            local = j in knn[i] or i in knn[j] or table.max_dist[i, j] < config.lift_dist
            kind = Kind.CONNECTIVITY if local else Kind.LIFTED
        builder.add_edge(nodes, cost, kind)
    return builder.build()


_BUILDERS = {
    Mode.AOMC: build_adaptive,
    Mode.HOPMC: build_hopmc,
    Mode.HOMC: build_homc,
    Mode.PAIRWISE: build_pairwise,
}


def build_graph(
    trajectories: Sequence[Trajectory] | TrajectoryTable,
    params: CostParams | None = None,
    config: BuilderConfig | None = None,
) -> LiftedHypergraph:
    config = config or BuilderConfig()
    if isinstance(trajectories, TrajectoryTable):
        table = trajectories
    else:
        if len(trajectories) < 2:
            raise ValueError("need at least two trajectories")
        table = TrajectoryTable(trajectories, params)
    graph = _BUILDERS[config.mode](table, config)
    if config.lifted:
        graph = lift(graph, table, config)
    return graph
