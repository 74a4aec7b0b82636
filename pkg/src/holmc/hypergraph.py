"""Lifted hypergraphs: connectivity edges F, lifted edges F', and costs."""

from __future__ import annotations

import enum
from collections.abc import Callable, Iterable, Sequence
from dataclasses import dataclass


class HypergraphError(ValueError):
    pass


class Kind(enum.Enum):
    CONNECTIVITY = "F"
    LIFTED = "L"


@dataclass(frozen=True)
class HyperEdge:
    nodes: tuple[int, ...]
    kind: Kind
    cost: float

    @property
    def order(self) -> int:
        return len(self.nodes)

    @property
    def lifted(self) -> bool:
        return self.kind is Kind.LIFTED


class UnionFind:
    """Disjoint sets over 0..n-1 with path halving and union by size."""

    def __init__(self, n: int):
        self.parent = list(range(n))
        self.size = [1] * n

    def find(self, x: int) -> int:
        parent = self.parent
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]
        return True

    def union_all(self, nodes: Sequence[int]) -> None:
        first = nodes[0]
        for v in nodes[1:]:
            self.union(first, v)

    def labels(self) -> tuple[int, ...]:
        """Class id per element, the id being the smallest member."""
        n = len(self.parent)
        smallest: dict[int, int] = {}
        roots = [self.find(v) for v in range(n)]
        for v, r in enumerate(roots):
            if r not in smallest:
                smallest[r] = v
        return tuple(smallest[r] for r in roots)


class HypergraphBuilder:
    """Accumulates edges for a :class:`LiftedHypergraph`.

    Re-adding a node set with the same kind sums the costs, which is exact
    because the objective is linear in the edge costs.
    """

    def __init__(self, node_count: int):
        if node_count < 0:
            raise HypergraphError(f"negative node count {node_count}")
        self.node_count = node_count
        self._nodes: list[tuple[int, ...]] = []
        self._kinds: list[Kind] = []
        self._costs: list[float] = []
        self._index: dict[tuple[int, ...], int] = {}

    def __len__(self) -> int:
        return len(self._nodes)

    def add_edge(self, nodes: Iterable[int], cost: float, kind: Kind = Kind.CONNECTIVITY) -> int:
        key = tuple(sorted(int(v) for v in nodes))
        if len(key) < 2:
            raise HypergraphError(f"edge {key} has fewer than two nodes")
        if len(set(key)) != len(key):
            raise HypergraphError(f"edge {key} repeats a node")
        if key[0] < 0 or key[-1] >= self.node_count:
            raise HypergraphError(f"edge {key} out of range for {self.node_count} nodes")
        handle = self._index.get(key)
        if handle is None:
            handle = len(self._nodes)
            self._index[key] = handle
            self._nodes.append(key)
            self._kinds.append(kind)
            self._costs.append(float(cost))
            return handle
        if self._kinds[handle] is not kind:
            raise HypergraphError(
                f"edge {key} already present as {self._kinds[handle].name.lower()}"
            )
        self._costs[handle] += float(cost)
        return handle

    def find(self, nodes: Iterable[int]) -> int | None:
        return self._index.get(tuple(sorted(nodes)))

    def build(self) -> LiftedHypergraph:
        return LiftedHypergraph(self.node_count, self._nodes, self._kinds, self._costs)


class LiftedHypergraph:
    """Immutable instance graph ``G' = (V, F u F')`` with edge costs.

    Edge handles are positions in :attr:`edges`. Incidence lists are kept
    both for all edges and for connectivity edges only.
    """

    def __init__(
        self,
        node_count: int,
        nodes: Sequence[tuple[int, ...]],
        kinds: Sequence[Kind],
        costs: Sequence[float],
    ):
        self.node_count = node_count
        self.edge_nodes: tuple[tuple[int, ...], ...] = tuple(nodes)
        self.kinds: tuple[Kind, ...] = tuple(kinds)
        self.costs: tuple[float, ...] = tuple(float(c) for c in costs)
        self.is_lifted: tuple[bool, ...] = tuple(k is Kind.LIFTED for k in self.kinds)
        incident: list[list[int]] = [[] for _ in range(node_count)]
        f_incident: list[list[int]] = [[] for _ in range(node_count)]
        for e, (vs, lifted) in enumerate(zip(self.edge_nodes, self.is_lifted)):
            for v in vs:
                incident[v].append(e)
                if not lifted:
                    f_incident[v].append(e)
        self.incident: tuple[tuple[int, ...], ...] = tuple(map(tuple, incident))
        self.f_incident: tuple[tuple[int, ...], ...] = tuple(map(tuple, f_incident))
        self._index = {vs: e for e, vs in enumerate(self.edge_nodes)}

    @classmethod
    def from_edges(cls, node_count: int, edges: Iterable[tuple[Iterable[int], float, Kind] | tuple[Iterable[int], float]]) -> LiftedHypergraph:
        builder = HypergraphBuilder(node_count)
        for item in edges:
            builder.add_edge(*item)
        return builder.build()

    @property
    def edge_count(self) -> int:
        return len(self.edge_nodes)

    @property
    def edges(self) -> list[HyperEdge]:
        return [HyperEdge(n, k, c) for n, k, c in zip(self.edge_nodes, self.kinds, self.costs)]

    def edge(self, handle: int) -> HyperEdge:
        return HyperEdge(self.edge_nodes[handle], self.kinds[handle], self.costs[handle])

    def find(self, nodes: Iterable[int]) -> int | None:
        return self._index.get(tuple(sorted(nodes)))

    def connectivity_edges(self) -> list[int]:
        return [e for e, lifted in enumerate(self.is_lifted) if not lifted]

    def higher_order_count(self) -> int:
        return sum(1 for vs in self.edge_nodes if len(vs) > 2)

    def f_neighbors(self, node: int) -> set[int]:
        """Nodes sharing at least one connectivity edge with ``node``."""
        out: set[int] = set()
        for e in self.f_incident[node]:
            out.update(self.edge_nodes[e])
        out.discard(node)
        return out

    def connected_components(
        self, active: Callable[[int], bool] | Sequence[int] | Sequence[bool] | None = None
    ) -> tuple[int, ...]:
        """Partition of V induced by the active connectivity edges.

        ``active`` is either a predicate over edge handles or a per-edge
        0/1 sequence; ``None`` activates every connectivity edge. Lifted
        edges never merge nodes. Class ids are the smallest member node.
        """
        if active is None:
            is_on: Callable[[int], bool] = lambda e: True
        elif callable(active):
            is_on = active
        else:
            flags = active
            is_on = lambda e: bool(flags[e])
        uf = UnionFind(self.node_count)
        for e, lifted in enumerate(self.is_lifted):
            if not lifted and is_on(e):
                uf.union_all(self.edge_nodes[e])
        return uf.labels()

    def __repr__(self) -> str:
        n_lifted = sum(self.is_lifted)
        return (
            f"LiftedHypergraph(nodes={self.node_count}, "
            f"connectivity={self.edge_count - n_lifted}, lifted={n_lifted})"
        )
