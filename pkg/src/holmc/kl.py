"""Kernighan-Lin local search for higher-order lifted multicut problems.

The outer loop visits every pair of neighbouring components and then
every component paired with a fresh empty one. Each visit builds a
greedy sequence of single-node moves with incrementally maintained
gains, and applies either the best prefix of that sequence or the join
of both components, whichever decreases the objective more.
"""

from __future__ import annotations

import heapq
import logging
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field

from .hypergraph import LiftedHypergraph
from .model import (
    EdgeLabeling,
    NodePartition,
    is_feasible,
    labeling_from_partition,
    normalize_partition,
    objective,
    partition_from_labeling,
)

log = logging.getLogger(__name__)


class InfeasibleInput(ValueError):
    pass


@dataclass
class SolverConfig:
    max_iter: int = 1000
    epsilon: float = 1e-9
    rollback: bool = True

    def __post_init__(self):
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be >= 1, got {self.max_iter}")


@dataclass
class SolveResult:
    labeling: EdgeLabeling
    partition: NodePartition
    objective: float
    iterations: int
    converged: bool
    history: list[float] = field(default_factory=list)

    @property
    def n_components(self) -> int:
        return len(set(self.partition))


class Bipartition:
    """Move bookkeeping for one pair of components ``A`` and ``B``.

    ``b`` may be ``None``, standing for a new empty component. Gains are
    computed on first use and then kept exact under moves: ``gains[w]`` is
    the decrease of the objective if ``w`` alone switched sides.
    """

    def __init__(self, graph: LiftedHypergraph, label: Sequence[int], a: int, b: int | None):
        self.graph = graph
        self.label = label
        self.a = a
        self.b = b
        self.flipped: set[int] = set()
        self.gains: dict[int, float] = {}

    def side(self, v: int) -> int:
        """0 for A, 1 for B, -1 outside of A u B."""
        lab = self.label[v]
        if lab == self.a:
            s = 0
        elif lab == self.b:
            s = 1
        else:
            return -1
        return s ^ 1 if v in self.flipped else s

    def _inside(self, e: int) -> list[int] | None:
        sides = [self.side(v) for v in self.graph.edge_nodes[e]]
        return None if -1 in sides else sides

    def _contribution(self, e: int, w: int, sides: list[int]) -> float:
        # Edge e is joined now iff all other nodes share w's side, and joined
        # after moving w iff all of them sit on the opposite side.
        nodes = self.graph.edge_nodes[e]
        sw = sides[nodes.index(w)]
        same = sum(1 for s in sides if s == sw) - 1
        if same == len(nodes) - 1:
            return self.graph.costs[e]
        if same == 0:
            return -self.graph.costs[e]
        return 0.0

    def gain(self, w: int) -> float:
        cached = self.gains.get(w)
        if cached is not None:
            return cached
        total = 0.0
        for e in self.graph.incident[w]:
            sides = self._inside(e)
            if sides is not None:
                total += self._contribution(e, w, sides)
        self.gains[w] = total
        return total

    def move(self, v: int) -> list[int]:
        """Switch ``v`` to the other side; return nodes whose cached gain changed."""
        graph = self.graph
        pending: list[tuple[int, int, float]] = []
        for e in graph.incident[v]:
            sides = self._inside(e)
            if sides is None:
                continue
            for w in graph.edge_nodes[e]:
                if w != v and w in self.gains:
                    pending.append((e, w, self._contribution(e, w, sides)))
        if v in self.flipped:
            self.flipped.discard(v)
        else:
            self.flipped.add(v)
        if v in self.gains:
            self.gains[v] = -self.gains[v]
        touched = []
        last_e, sides = -1, []
        for e, w, old in pending:
            if e != last_e:
                sides = self._inside(e)
                last_e = e
            new = self._contribution(e, w, sides)
            if new != old:
                self.gains[w] += new - old
                touched.append(w)
        return touched

    def join_gain(self, side_a: Sequence[int], side_b: Sequence[int]) -> float:
        """Objective decrease from merging A and B into one component."""
        graph = self.graph
        small = side_a if len(side_a) <= len(side_b) else side_b
        seen: set[int] = set()
        total = 0.0
        for u in small:
            for e in graph.incident[u]:
                if e in seen:
                    continue
                seen.add(e)
                sides = self._inside(e)
                if sides is not None and 0 in sides and 1 in sides:
                    total -= graph.costs[e]
        return total

    def crossing_f_nodes(self, nodes: Sequence[int]) -> set[int]:
        """Unmoved nodes of A u B on a connectivity edge through ``nodes`` touching both sides."""
        graph = self.graph
        out: set[int] = set()
        for u in nodes:
            for e in graph.f_incident[u]:
                vs = graph.edge_nodes[e]
                sides = [self.side(v) for v in vs]
                if 0 in sides and 1 in sides:
                    out.update(v for v, s in zip(vs, sides) if s >= 0 and v not in self.flipped)
        return out


class KernighanLin:
    """Solver state: the current decomposition and its component graph.

    ``trace``, when set, is called with the live :class:`Bipartition`
    before the first and after every greedy move.
    """

    def __init__(
        self,
        graph: LiftedHypergraph,
        partition: Sequence[int],
        config: SolverConfig | None = None,
        trace: Callable[[Bipartition], None] | None = None,
    ):
        self.graph = graph
        self.config = config or SolverConfig()
        self.trace = trace
        self.label: list[int] = list(normalize_partition(partition))
        self.members: dict[int, set[int]] = {}
        for v, lab in enumerate(self.label):
            self.members.setdefault(lab, set()).add(v)
        self._clock = 0
        self.stamp: dict[int, int] = {cid: self._tick() for cid in self.members}
        self._clean: dict[tuple[int, int], tuple[int, int]] = {}
        self.iterations = 0
        self.converged = False
        self.history: list[float] = []

    def _tick(self) -> int:
        self._clock += 1
        return self._clock

    @property
    def partition(self) -> NodePartition:
        return tuple(self.label)

    def adjacent_pairs(self) -> list[tuple[int, int]]:
        label = self.label
        pairs: set[tuple[int, int]] = set()
        for e in self.graph.connectivity_edges():
            labs = {label[v] for v in self.graph.edge_nodes[e]}
            if len(labs) > 1:
                ordered = sorted(labs)
                for i, x in enumerate(ordered):
                    for y in ordered[i + 1:]:
                        pairs.add((x, y))
        return sorted(pairs)

    def run(self) -> NodePartition:
        label = self.label
        self.history.append(self.objective())
        for t in range(1, self.config.max_iter + 1):
            self.iterations = t
            changed = False
            for a, b in self.adjacent_pairs():
                ca, cb = label[a], label[b]
                if ca != cb:
                    changed |= self.update_bipartition(min(ca, cb), max(ca, cb))
            done: set[int] = set()
            for a in sorted(self.members):
                ca = label[a]
                if ca not in done:
                    done.add(ca)
                    changed |= self.update_bipartition(ca, None)
            self.history.append(self.objective())
            log.debug("sweep %d: objective %.6g, %d components", t, self.history[-1], len(self.members))
            if not changed:
                self.converged = True
                break
        return self.partition

    def objective(self) -> float:
        graph, label = self.graph, self.label
        total = 0.0
        for vs, c in zip(graph.edge_nodes, graph.costs):
            lab = label[vs[0]]
            for v in vs[1:]:
                if label[v] != lab:
                    break
            else:
                total += c
        return total

    def update_bipartition(self, a: int, b: int | None) -> bool:
        """Improve components ``a`` and ``b`` (``None``: a new component).

        Returns True if the decomposition changed.
        """
        key = (a, -1 if b is None else b)
        stamps = (self.stamp[a], -1 if b is None else self.stamp[b])
        if self._clean.get(key) == stamps:
            return False
        changed = self._update(a, b)
        if not changed:
            self._clean[key] = stamps
        return changed

    def _update(self, a: int, b: int | None) -> bool:
        graph, eps = self.graph, self.config.epsilon
        side_a = self.members[a]
        side_b = self.members[b] if b is not None else set()
        if b is None and len(side_a) < 2:
            return False
        bip = Bipartition(graph, self.label, a, b)

        if b is None:
            candidates = set(side_a)
            join_gain = float("-inf")
        else:
            small = side_a if len(side_a) <= len(side_b) else side_b
            candidates = bip.crossing_f_nodes(small)
            if not candidates:
                return False
            join_gain = bip.join_gain(side_a, side_b)

        heap: list[tuple[float, int]] = []
        for w in candidates:
            heap.append((-bip.gain(w), w))
        heapq.heapify(heap)
        if self.trace:
            self.trace(bip)

        moves: list[int] = []
        cumulative = [0.0]
        for _ in range(len(candidates)):
            v = None
            while heap:
                neg, w = heapq.heappop(heap)
                if w in candidates and w not in bip.flipped and -neg == bip.gains[w]:
                    v = w
                    break
            if v is None:
                break
            moves.append(v)
            cumulative.append(cumulative[-1] + bip.gains[v])
            candidates.discard(v)
            touched = bip.move(v)
            if b is None and len(moves) == 1:
                # Past the first pick, only grow the new component along F.
                candidates = set()
            for w in bip.crossing_f_nodes([v]):
                if w not in candidates:
                    candidates.add(w)
                    heapq.heappush(heap, (-bip.gain(w), w))
            for w in touched:
                if w in candidates:
                    heapq.heappush(heap, (-bip.gains[w], w))
            if self.trace:
                self.trace(bip)

        best_k = 0
        for i, s in enumerate(cumulative):
            if s > cumulative[best_k]:
                best_k = i
        best_moves = cumulative[best_k]

        if b is not None and join_gain > best_moves and join_gain > eps:
            groups = {v: 0 for v in side_a}
            groups.update((v, 0) for v in side_b)
        elif best_moves > eps:
            moved = set(moves[:best_k])
            groups = {v: 0 for v in side_a}
            groups.update((v, 1) for v in side_b)
            for v in moved:
                groups[v] ^= 1
        else:
            return False
        return self._apply(a, b, groups)

    def _split(self, groups: dict[int, int]) -> list[list[int]]:
        """Connected pieces of every group under connectivity edges inside the group."""
        graph = self.graph
        seen: set[int] = set()
        pieces = []
        for start in groups:
            if start in seen:
                continue
            g = groups[start]
            seen.add(start)
            stack, piece = [start], [start]
            while stack:
                u = stack.pop()
                for e in graph.f_incident[u]:
                    vs = graph.edge_nodes[e]
                    if all(groups.get(v) == g for v in vs):
                        for v in vs:
                            if v not in seen:
                                seen.add(v)
                                stack.append(v)
                                piece.append(v)
            pieces.append(piece)
        return pieces

    def _apply(self, a: int, b: int | None, groups: dict[int, int]) -> bool:
        graph, label = self.graph, self.label
        pieces = self._split(groups)
        new_class: dict[int, int] = {}
        for piece in pieces:
            cid = min(piece)
            for v in piece:
                new_class[v] = cid

        delta = 0.0
        seen: set[int] = set()
        for u in groups:
            for e in graph.incident[u]:
                if e in seen:
                    continue
                seen.add(e)
                vs = graph.edge_nodes[e]
                lab = label[vs[0]]
                old = all(label[v] == lab for v in vs[1:])
                cls = new_class.get(vs[0], -1)
                new = cls >= 0 and all(new_class.get(v, -1) == cls for v in vs[1:])
                if old != new:
                    delta += graph.costs[e] if new else -graph.costs[e]

        if self.config.rollback and delta >= -self.config.epsilon:
            return False
        old_ids = {a} if b is None else {a, b}
        if {min(p) for p in pieces} == old_ids and all(
            label[v] == new_class[v] for v in groups
        ):
            return False
        for cid in old_ids:
            del self.members[cid]
            del self.stamp[cid]
        for piece in pieces:
            cid = min(piece)
            self.members[cid] = set(piece)
            self.stamp[cid] = self._tick()
            for v in piece:
                label[v] = cid
        return True


def _check_partition(graph: LiftedHypergraph, partition: Sequence[int]) -> NodePartition:
    try:
        labeling_from_partition(graph, partition)
    except ValueError as err:
        raise InfeasibleInput(str(err)) from err
    return normalize_partition(partition)


def solve_partition(
    graph: LiftedHypergraph,
    partition: Sequence[int],
    config: SolverConfig | None = None,
    trace: Callable[[Bipartition], None] | None = None,
) -> SolveResult:
    start = _check_partition(graph, partition)
    solver = KernighanLin(graph, start, config, trace)
    final = solver.run()
    labeling = labeling_from_partition(graph, final)
    return SolveResult(
        labeling=labeling,
        partition=final,
        objective=objective(graph, labeling),
        iterations=solver.iterations,
        converged=solver.converged,
        history=solver.history,
    )


def solve(
    graph: LiftedHypergraph,
    initial: Sequence[int],
    config: SolverConfig | None = None,
    trace: Callable[[Bipartition], None] | None = None,
) -> SolveResult:
    """Run the local search from a feasible edge labeling."""
    if not is_feasible(graph, initial):
        raise InfeasibleInput("initial labeling is not induced by a decomposition")
    return solve_partition(graph, partition_from_labeling(graph, initial), config, trace)
