"""Slow, obviously-correct reference implementations used only by the tests."""

from __future__ import annotations

import itertools
import math
from collections import deque

import numpy as np

from holmc.hypergraph import LiftedHypergraph


def set_partitions(items):
    """Every set partition of ``items`` as a list of blocks (recursive)."""
    items = list(items)
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for smaller in set_partitions(rest):
        for i in range(len(smaller)):
            yield smaller[:i] + [[first] + smaller[i]] + smaller[i + 1:]
        yield [[first]] + smaller


def bell(n: int) -> int:
    row = [1]
    for _ in range(n):
        nxt = [row[-1]]
        for x in row:
            nxt.append(nxt[-1] + x)
        row = nxt
    return row[0]


def flood_components(n: int, hyperedges) -> list[int]:
    """Component label (smallest member) per node by BFS over node/edge incidence."""
    touching = [[] for _ in range(n)]
    for i, e in enumerate(hyperedges):
        for v in e:
            touching[v].append(i)
    label = [-1] * n
    for s in range(n):
        if label[s] >= 0:
            continue
        label[s] = s
        queue = deque([s])
        while queue:
            u = queue.popleft()
            for i in touching[u]:
                for v in hyperedges[i]:
                    if label[v] < 0:
                        label[v] = s
                        queue.append(v)
    return label


def block_labels(n: int, blocks) -> list[int]:
    lab = [0] * n
    for b in blocks:
        for v in b:
            lab[v] = min(b)
    return lab


def connected_blocks(graph: LiftedHypergraph, blocks) -> bool:
    """Every block is connected by connectivity edges lying inside it."""
    lab = block_labels(graph.node_count, blocks)
    inside = [
        vs for vs, lifted in zip(graph.edge_nodes, graph.is_lifted)
        if not lifted and len({lab[v] for v in vs}) == 1
    ]
    return flood_components(graph.node_count, inside) == lab


def induced_labeling(graph: LiftedHypergraph, lab) -> tuple[int, ...]:
    return tuple(int(len({lab[v] for v in vs}) == 1) for vs in graph.edge_nodes)


def brute_force_optimum(graph: LiftedHypergraph) -> float:
    best = math.inf
    for blocks in set_partitions(range(graph.node_count)):
        if not connected_blocks(graph, blocks):
            continue
        lab = block_labels(graph.node_count, blocks)
        value = sum(c for c, y in zip(graph.costs, induced_labeling(graph, lab)) if y)
        best = min(best, value)
    return best


def feasible_labelings(graph: LiftedHypergraph) -> set[tuple[int, ...]]:
    out = set()
    for blocks in set_partitions(range(graph.node_count)):
        if connected_blocks(graph, blocks):
            out.add(induced_labeling(graph, block_labels(graph.node_count, blocks)))
    return out


def all_labelings(m: int):
    return itertools.product((0, 1), repeat=m)


def scratch_gain(graph: LiftedHypergraph, sides: dict[int, int], w: int) -> float:
    """Objective decrease from flipping ``w``, recomputed over edges inside the two sides.

    ``sides`` maps every node of A u B to 0 or 1.
    """
    def value(assign):
        total = 0.0
        for vs, c in zip(graph.edge_nodes, graph.costs):
            if all(v in assign for v in vs) and len({assign[v] for v in vs}) == 1:
                total += c
        return total

    flipped = dict(sides)
    flipped[w] ^= 1
    return value(sides) - value(flipped)


def similarity(alpha: float, scale: float, shift, points):
    c, s = math.cos(alpha), math.sin(alpha)
    rot = np.array([[c, -s], [s, c]])
    return scale * np.asarray(points, float) @ rot.T + np.asarray(shift, float)


def rand_by_pairs(a, b) -> float:
    n = len(a)
    pairs = list(itertools.combinations(range(n), 2))
    if not pairs:
        return 1.0
    agree = sum((a[i] == a[j]) == (b[i] == b[j]) for i, j in pairs)
    return agree / len(pairs)
