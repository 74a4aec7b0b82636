"""Exhaustive solver over all set partitions, for small instances."""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .hypergraph import LiftedHypergraph
from .model import EdgeLabeling, labeling_from_partition, normalize_partition


class TooLarge(ValueError):
    def __init__(self, n: int, limit: int):
        super().__init__(f"{n} nodes exceeds the exhaustive node limit {limit}")
        self.n = n
        self.limit = limit


@lru_cache(maxsize=16)
def restricted_growth_strings(n: int) -> np.ndarray:
    """All restricted-growth strings of length n, in lexicographic order.

    Row r assigns block ``rgs[r, v]`` to node v; there are Bell(n) rows.
    """
    if n == 0:
        return np.zeros((1, 0), dtype=np.int8)
    rows = np.zeros((1, 1), dtype=np.int8)
    for _ in range(1, n):
        top = rows.max(axis=1)
        parts = []
        for value in range(int(top.max()) + 2):
            keep = rows[top + 1 >= value]
            parts.append(np.hstack([keep, np.full((len(keep), 1), value, dtype=np.int8)]))
        rows = np.vstack(parts)
        rows = rows[np.lexsort(rows.T[::-1])]
    rows.setflags(write=False)
    return rows


def _component_counts(graph: LiftedHypergraph, rgs: np.ndarray, joined: np.ndarray) -> np.ndarray:
    """Number of components of (V, {e in F : y_e = 1}) for every row."""
    n = graph.node_count
    labels = np.tile(np.arange(n), (len(rgs), 1))
    f_edges = [e for e in range(graph.edge_count) if not graph.is_lifted[e]]
    while True:
        changed = False
        for e in f_edges:
            cols = list(graph.edge_nodes[e])
            on = joined[:, e]
            if not on.any():
                continue
            block = labels[on][:, cols]
            low = block.min(axis=1, keepdims=True)
            if (block != low).any():
                changed = True
                labels[np.ix_(np.flatnonzero(on), cols)] = low
        if not changed:
            break
    return (labels == np.arange(n)).sum(axis=1)


def solve_exact(graph: LiftedHypergraph, node_limit: int = 10) -> tuple[EdgeLabeling, float]:
    """Globally optimal decomposition by enumerating every set partition.

    Partitions with a class that its connectivity edges do not connect
    are discarded. Among optimal partitions the one joining the fewest
    edges wins, then the lexicographically smallest restricted-growth string.
    """
    n = graph.node_count
    if n > node_limit:
        raise TooLarge(n, node_limit)
    rgs = restricted_growth_strings(n)
    joined = np.ones((len(rgs), graph.edge_count), dtype=bool)
    for e, nodes in enumerate(graph.edge_nodes):
        cols = rgs[:, list(nodes)]
        joined[:, e] = (cols == cols[:, :1]).all(axis=1)
    blocks = rgs.max(axis=1).astype(np.int64) + 1 if n else np.zeros(1, dtype=np.int64)
    feasible = _component_counts(graph, rgs, joined) == blocks
    costs = np.asarray(graph.costs, dtype=float)
    values = joined.astype(float) @ costs if graph.edge_count else np.zeros(len(rgs))
    values = np.where(feasible, values, np.inf)
    best = values.min()
    ties = np.flatnonzero(values <= best + 1e-12)
    n_joined = joined[ties].sum(axis=1)
    row = ties[np.argmin(n_joined)]  # argmin keeps the first, i.e. lexicographically smallest
    partition = normalize_partition(rgs[row].tolist())
    labeling = labeling_from_partition(graph, partition)
    return labeling, float(sum(c for c, y in zip(graph.costs, labeling) if y))
