"""Plain-text instance, trajectory and solution files.

All three formats are whitespace-delimited lines; ``#`` starts a comment
and blank lines are ignored. Floats are written in their shortest
round-trip form, so re-serializing a canonical file is byte-identical.
"""

from __future__ import annotations

import math
import re
from collections.abc import Iterator, Sequence
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .hypergraph import HypergraphBuilder, HypergraphError, Kind, LiftedHypergraph
from .model import normalize_partition
from .motion import Trajectory


MAX_NODES = 10_000_000
_INT = re.compile(r"[+-]?[0-9]+")


class FormatError(ValueError):
    """Malformed input; ``line`` and ``column`` are 1-based."""

    def __init__(self, message: str, line: int, column: int = 1):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


def format_float(x: float) -> str:
    """Shortest decimal that parses back to ``x``; integral values drop the ``.0``."""
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"cannot serialize non-finite value {x}")
    if x == 0:
        return "0"
    text = repr(x)
    return text[:-2] if text.endswith(".0") else text


@dataclass(frozen=True)
class _Token:
    text: str
    line: int
    column: int


def _lines(text: str) -> Iterator[list[_Token]]:
    for lineno, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0]
        tokens = []
        pos = 0
        for part in body.split():
            pos = body.index(part, pos)
            tokens.append(_Token(part, lineno, pos + 1))
            pos += len(part)
        if tokens:
            yield tokens


def _int(tok: _Token, what: str, minimum: int | None = 0) -> int:
    if not _INT.fullmatch(tok.text) or len(tok.text) > 19:
        raise FormatError(f"expected integer {what}, got {tok.text!r}", tok.line, tok.column)
    value = int(tok.text)
    if minimum is not None and value < minimum:
        raise FormatError(f"{what} must be >= {minimum}, got {value}", tok.line, tok.column)
    return value


def _float(tok: _Token, what: str) -> float:
    try:
        value = float(tok.text)
    except ValueError:
        raise FormatError(f"expected number {what}, got {tok.text!r}", tok.line, tok.column) from None
    if not math.isfinite(value):
        raise FormatError(f"{what} must be finite, got {tok.text!r}", tok.line, tok.column)
    return value


def _expect(tokens: list[_Token], keyword: str, count: int | None = None) -> None:
    head = tokens[0]
    if head.text != keyword:
        raise FormatError(f"expected {keyword!r}, got {head.text!r}", head.line, head.column)
    if count is not None and len(tokens) != count:
        last = tokens[-1]
        where = last.column + len(last.text) if len(tokens) < count else tokens[count].column
        raise FormatError(f"{keyword!r} line needs {count - 1} fields, got {len(tokens) - 1}", head.line, where)


def _next(lines: Iterator[list[_Token]], what: str, last_line: int) -> list[_Token]:
    try:
        return next(lines)
    except StopIteration:
        raise FormatError(f"unexpected end of input, expected {what}", last_line + 1) from None


# Instances

def _canonical_order(graph: LiftedHypergraph) -> list[int]:
    return sorted(range(graph.edge_count), key=lambda e: (len(graph.edge_nodes[e]), graph.edge_nodes[e], graph.is_lifted[e]))


def dumps_instance(graph: LiftedHypergraph) -> str:
    out = ["HOLMC 1", f"nodes {graph.node_count}"]
    for e in _canonical_order(graph):
        nodes = graph.edge_nodes[e]
        kind = graph.kinds[e].value
        out.append(f"edge {kind} {len(nodes)} {' '.join(map(str, nodes))} {format_float(graph.costs[e])}")
    return "\n".join(out) + "\n"


def loads_instance(text: str) -> LiftedHypergraph:
    """Parse an instance; repeated node sets of the same kind have their costs summed."""
    lines = _lines(text)
    header = _next(lines, "'HOLMC 1' header", 0)
    if [t.text for t in header] != ["HOLMC", "1"]:
        raise FormatError("expected header 'HOLMC 1'", header[0].line, header[0].column)
    tokens = _next(lines, "'nodes <N>'", header[0].line)
    _expect(tokens, "nodes", 2)
    n = _int(tokens[1], "node count")
    if n > MAX_NODES:
        raise FormatError(f"node count {n} exceeds {MAX_NODES}", tokens[1].line, tokens[1].column)
    builder = HypergraphBuilder(n)
    for tokens in lines:
        _expect(tokens, "edge")
        if len(tokens) < 3:
            raise FormatError("edge line needs a kind and an order", tokens[0].line, tokens[-1].column + len(tokens[-1].text))
        kind_tok = tokens[1]
        try:
            kind = Kind(kind_tok.text)
        except ValueError:
            raise FormatError(f"edge kind must be F or L, got {kind_tok.text!r}", kind_tok.line, kind_tok.column) from None
        k = _int(tokens[2], "edge order", minimum=2)
        if len(tokens) != 4 + k:
            raise FormatError(f"edge of order {k} needs {k} nodes and a cost, got {len(tokens) - 3} fields", tokens[0].line, tokens[2].column)
        nodes = [_int(t, "node id") for t in tokens[3:3 + k]]
        for prev, cur, tok in zip(nodes, nodes[1:], tokens[4:3 + k]):
            if cur <= prev:
                raise FormatError("edge node ids must be strictly ascending", tok.line, tok.column)
        cost = _float(tokens[3 + k], "edge cost")
        try:
            builder.add_edge(nodes, cost, kind)
        except HypergraphError as err:
            raise FormatError(str(err), tokens[0].line, tokens[3].column) from None
    return builder.build()


# Trajectories

def dumps_trajectories(trajectories: Sequence[Trajectory], n_frames: int | None = None) -> str:
    feat_dim = 0
    for t in trajectories:
        if t.features is not None:
            feat_dim = t.features.shape[1]
            break
    if n_frames is None:
        n_frames = max((t.end_frame for t in trajectories), default=0)
    out = [f"TRAJ 1 {n_frames} {feat_dim}"]
    for t in trajectories:
        out.append(f"traj {t.id} {t.start_frame} {len(t)}")
        for r in range(len(t)):
            row = [format_float(x) for x in t.positions[r]]
            if feat_dim:
                row += [format_float(x) for x in t.features[r]]
            out.append(" ".join(row))
    return "\n".join(out) + "\n"


def loads_trajectories(text: str) -> tuple[list[Trajectory], int]:
    """Parse trajectories and the frame count; ids must run 0, 1, 2, ... in order."""
    lines = _lines(text)
    header = _next(lines, "'TRAJ 1 <n_frames> <feat_dim>' header", 0)
    if len(header) != 4 or header[0].text != "TRAJ" or header[1].text != "1":
        raise FormatError("expected header 'TRAJ 1 <n_frames> <feat_dim>'", header[0].line, header[0].column)
    n_frames = _int(header[2], "frame count")
    feat_dim = _int(header[3], "feature dimension")
    trajectories = []
    last = header[0].line
    for tokens in lines:
        _expect(tokens, "traj", 4)
        tid = _int(tokens[1], "trajectory id")
        if tid != len(trajectories):
            raise FormatError(f"expected trajectory id {len(trajectories)}, got {tid}", tokens[1].line, tokens[1].column)
        start = _int(tokens[2], "start frame")
        length = _int(tokens[3], "length", minimum=2)
        if start + length > n_frames:
            raise FormatError(f"trajectory ends at frame {start + length} past the {n_frames} frames", tokens[3].line, tokens[3].column)
        rows = []
        last = tokens[0].line
        for r in range(length):
            row = _next(lines, f"point {r} of trajectory {tid}", last)
            last = row[0].line
            if len(row) != 2 + feat_dim:
                raise FormatError(f"point line needs {2 + feat_dim} values, got {len(row)}", row[0].line, row[0].column)
            rows.append([_float(tok, "coordinate") for tok in row])
        rows = np.array(rows)
        features = rows[:, 2:] if feat_dim else None
        trajectories.append(Trajectory(tid, start, rows[:, :2].copy(), features))
    return trajectories, n_frames


# Solutions and label files

@dataclass(frozen=True)
class Solution:
    partition: tuple[int, ...]
    objective: float | None = None


def dumps_solution(partition: Sequence[int], objective: float | None = None) -> str:
    """Write ``<node> <component>`` lines, naming components by their smallest node."""
    out = [] if objective is None else [f"objective {format_float(objective)}"]
    out += [f"{v} {c}" for v, c in enumerate(normalize_partition(partition))]
    return "\n".join(out) + "\n"


def loads_solution(text: str, require_objective: bool = False, strict: bool = True) -> Solution:
    """Parse a solution or label file.

    With ``strict``, component ids must be minimum member ids; otherwise any
    integer ids are accepted and renamed.
    """
    objective = None
    labels: dict[int, int] = {}
    where: dict[int, _Token] = {}
    for tokens in _lines(text):
        if tokens[0].text == "objective":
            _expect(tokens, "objective", 2)
            if objective is not None or labels:
                raise FormatError("objective must come first and only once", tokens[0].line, tokens[0].column)
            objective = _float(tokens[1], "objective")
            continue
        if len(tokens) != 2:
            raise FormatError(f"expected '<node> <component>', got {len(tokens)} fields", tokens[0].line, tokens[0].column)
        v = _int(tokens[0], "node id")
        c = _int(tokens[1], "component id", minimum=0 if strict else None)
        if v in labels:
            raise FormatError(f"node {v} labeled twice", tokens[0].line, tokens[0].column)
        labels[v] = c
        where[v] = tokens[1]
    if require_objective and objective is None:
        raise FormatError("missing 'objective' line", 1)
    n = len(labels)
    missing = sorted(set(range(n)) - labels.keys())
    if missing:
        last = max((t.line for t in where.values()), default=0)
        raise FormatError(f"node {missing[0]} is not labeled", last + 1)
    raw = [labels[v] for v in range(n)]
    partition = normalize_partition(raw)
    if strict and tuple(raw) != partition:
        v = next(v for v in range(n) if raw[v] != partition[v])
        raise FormatError(f"component id of node {v} must be its smallest member {partition[v]}, got {raw[v]}", where[v].line, where[v].column)
    return Solution(partition, objective)


def read_text(path: str | Path) -> str:
    return Path(path).read_text(encoding="utf-8")


def write_text(path: str | Path, text: str) -> None:
    Path(path).write_text(text, encoding="utf-8")
