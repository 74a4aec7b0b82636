"""Edge labelings, node partitions and the lifted multicut objective.

A labeling assigns ``y_e = 1`` to an edge when all of its nodes end up in
one component. Labelings and partitions are plain tuples of ints; a
partition stores, for every node, the smallest node id of its class.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass
from itertools import combinations

from .hypergraph import LiftedHypergraph, UnionFind

EdgeLabeling = tuple[int, ...]
NodePartition = tuple[int, ...]


class DisconnectedClass(ValueError):
    def __init__(self, class_id: int):
        super().__init__(f"class {class_id} is not connected by its connectivity edges")
        self.class_id = class_id


def normalize_partition(labels: Sequence[int]) -> NodePartition:
    """Relabel arbitrary class labels so each class is named by its smallest node."""
    first: dict[int, int] = {}
    out = []
    for v, lab in enumerate(labels):
        out.append(first.setdefault(lab, v))
    return tuple(out)


def classes(partition: Sequence[int]) -> dict[int, list[int]]:
    groups: dict[int, list[int]] = {}
    for v, lab in enumerate(partition):
        groups.setdefault(lab, []).append(v)
    return groups


def singletons(graph: LiftedHypergraph) -> NodePartition:
    return tuple(range(graph.node_count))


def canonicalize(graph: LiftedHypergraph, partition: Sequence[int]) -> NodePartition:
    """Split every class into the components of its induced connectivity subgraph."""
    labels = list(partition)
    uf = UnionFind(graph.node_count)
    for e, vs in enumerate(graph.edge_nodes):
        if graph.is_lifted[e]:
            continue
        lab = labels[vs[0]]
        if all(labels[v] == lab for v in vs[1:]):
            uf.union_all(vs)
    # A class may only merge with itself, so the union-find classes refine it.
    return uf.labels()


def labeling_from_partition(graph: LiftedHypergraph, partition: Sequence[int]) -> EdgeLabeling:
    """Edge labeling of a decomposition; raises if a class is disconnected."""
    if len(partition) != graph.node_count:
        raise ValueError(f"partition has {len(partition)} entries, graph has {graph.node_count} nodes")
    normalized = normalize_partition(partition)
    split = canonicalize(graph, normalized)
    if split != normalized:
        bad = next(normalized[v] for v in range(graph.node_count) if split[v] != normalized[v])
        raise DisconnectedClass(bad)
    return tuple(
        1 if all(normalized[v] == normalized[vs[0]] for v in vs[1:]) else 0
        for vs in graph.edge_nodes
    )


def partition_from_labeling(graph: LiftedHypergraph, labeling: Sequence[int]) -> NodePartition:
    if len(labeling) != graph.edge_count:
        raise ValueError(f"labeling has {len(labeling)} entries, graph has {graph.edge_count} edges")
    return graph.connected_components(labeling)


def is_feasible(graph: LiftedHypergraph, labeling: Sequence[int]) -> bool:
    """True iff the labeling is induced by a decomposition of the graph.

    Equivalent to the full system of higher-order, cycle, path and cut
    inequalities, checked through the partition round trip.
    """
    if len(labeling) != graph.edge_count or any(y not in (0, 1) for y in labeling):
        return False
    partition = partition_from_labeling(graph, labeling)
    return labeling_from_partition(graph, partition) == tuple(labeling)


def objective(graph: LiftedHypergraph, labeling: Sequence[int]) -> float:
    return sum(c for c, y in zip(graph.costs, labeling) if y)


def partition_objective(graph: LiftedHypergraph, partition: Sequence[int]) -> float:
    """Objective of the labeling a partition induces; no connectivity check."""
    total = 0.0
    for vs, c in zip(graph.edge_nodes, graph.costs):
        lab = partition[vs[0]]
        if all(partition[v] == lab for v in vs[1:]):
            total += c
    return total


def joined_partition(graph: LiftedHypergraph) -> NodePartition:
    """Coarsest decomposition: the connected components of (V, F)."""
    return graph.connected_components()


@dataclass(frozen=True)
class Violation:
    kind: str  # "subset" (y_eh <= y_e) or "connected" (1 - y_eh <= sum(1 - y_e))
    edge: int
    sub_edges: tuple[int, ...]

    def __str__(self) -> str:
        return f"{self.kind} violation at edge {self.edge} via {list(self.sub_edges)}"


def _sub_edges(graph: LiftedHypergraph, handle: int) -> list[int]:
    nodes = graph.edge_nodes[handle]
    found = []
    for size in range(2, len(nodes)):
        for sub in combinations(nodes, size):
            e = graph.find(sub)
            if e is not None:
                found.append(e)
    return found


def _spans(nodes: tuple[int, ...], subsets: list[tuple[int, ...]]) -> bool:
    index = {v: i for i, v in enumerate(nodes)}
    uf = UnionFind(len(nodes))
    for sub in subsets:
        uf.union_all([index[v] for v in sub])
    return len(set(uf.labels())) == 1


def local_diagnostics(graph: LiftedHypergraph, labeling: Sequence[int]) -> list[Violation]:
    """Violations of the constraints tying higher-order edges to their sub-edges.

    Sub-edges are edges of E (either kind) strictly contained in the
    higher-order edge.
    """
    out: list[Violation] = []
    for eh, nodes in enumerate(graph.edge_nodes):
        if len(nodes) < 3:
            continue
        subs = _sub_edges(graph, eh)
        for e in subs:
            if labeling[eh] > labeling[e]:
                out.append(Violation("subset", eh, (e,)))
        if subs and _spans(nodes, [graph.edge_nodes[e] for e in subs]):
            if 1 - labeling[eh] > sum(1 - labeling[e] for e in subs):
                out.append(Violation("connected", eh, tuple(subs)))
    return out
