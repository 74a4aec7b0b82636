"""Command-line entry point: ``holmc <command> ...``.

Exit codes: 0 success, 1 verification failure, 2 usage or parse error.
Any option may also come from a ``key = value`` file given by ``--config``;
command-line flags take precedence.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
import time
from collections.abc import Sequence

from .builder import BuilderConfig, Mode, build_graph
from .exact import TooLarge, solve_exact
from .formats import (
    FormatError,
    dumps_instance,
    dumps_solution,
    dumps_trajectories,
    format_float,
    loads_instance,
    loads_solution,
    loads_trajectories,
    read_text,
    write_text,
)
from .hypergraph import LiftedHypergraph
from .kl import InfeasibleInput, SolverConfig, solve_partition
from .model import DisconnectedClass, is_feasible, joined_partition, labeling_from_partition, objective, partition_from_labeling, singletons
from .motion import CostParams
from .synth import generate_grid_instance, generate_scene, rotation_scene, score_partition, synthetic_flow, twin_scene

log = logging.getLogger("holmc")

OK, VERIFY_FAILED, USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _emit(text: str, path: str | None) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        write_text(path, text)


def _load_instance(path: str) -> LiftedHypergraph:
    return loads_instance(read_text(path))


def cmd_synth(args) -> int:
    if args.scene == "rotation":
        spec = rotation_scene(seed=args.seed, noise=args.noise, n_frames=args.frames)
    else:
        spec = twin_scene(per_side=args.per_side, n_frames=args.frames, noise=args.noise, seed=args.seed)
    trajectories, labels = generate_scene(spec)
    _emit(dumps_trajectories(trajectories, spec.n_frames), args.out)
    if args.labels:
        write_text(args.labels, dumps_solution(labels))
    log.info("%d trajectories, %d objects", len(trajectories), len(set(labels)))
    return OK


def cmd_grid(args) -> int:
    flow = synthetic_flow(args.k, args.pattern, seed=args.seed)
    graph = generate_grid_instance(flow, lifted=args.lifted, lift_distance=args.lift_distance)
    _emit(dumps_instance(graph), args.out)
    return OK


def _cost_params(args) -> CostParams:
    return CostParams(
        theta_bar0=args.theta_bar0,
        theta0=args.theta0,
        theta1=args.theta1,
        theta2=args.theta2,
        theta3=args.theta3,
    )


def cmd_build_graph(args) -> int:
    trajectories, _ = loads_trajectories(read_text(args.trajectories))
    config = BuilderConfig(
        mode=Mode(args.mode),
        lifted=args.lifted,
        pairwise_cutoff=args.pairwise_cutoff,
        lift_knn=args.lift_knn,
        lift_dist=args.lift_dist,
        triple_full_dist=args.triple_full_dist,
        triple_max_dist=args.triple_max_dist,
        seed=args.seed,
    )
    graph = build_graph(trajectories, _cost_params(args), config)
    log.info("%d nodes, %d edges, %d higher-order", graph.node_count, graph.edge_count, graph.higher_order_count())
    _emit(dumps_instance(graph), args.out)
    return OK


def _initial_partition(graph: LiftedHypergraph, init: str):
    if init == "singletons":
        return singletons(graph)
    if init == "joined":
        return joined_partition(graph)
    start = loads_solution(read_text(init), strict=False).partition
    if len(start) != graph.node_count:
        raise UsageError(f"initial partition labels {len(start)} nodes, instance has {graph.node_count}")
    return start


def cmd_solve(args) -> int:
    graph = _load_instance(args.instance)
    start = _initial_partition(graph, args.init)
    t0 = time.perf_counter()
    result = solve_partition(graph, start, SolverConfig(max_iter=args.max_iter))
    log.info(
        "objective %s after %d iterations (%s) in %.3fs",
        format_float(result.objective), result.iterations, "converged" if result.converged else "stopped", time.perf_counter() - t0,
    )
    _emit(dumps_solution(result.partition, result.objective), args.out)
    return OK


def cmd_solve_exact(args) -> int:
    graph = _load_instance(args.instance)
    labeling, value = solve_exact(graph, node_limit=args.node_limit)
    _emit(dumps_solution(partition_from_labeling(graph, labeling), value), args.out)
    return OK


def verify(graph: LiftedHypergraph, text: str, tolerance: float = 1e-9) -> tuple[bool, str]:
    """Check a solution file against an instance; return (ok, message)."""
    solution = loads_solution(text, require_objective=True)
    if len(solution.partition) != graph.node_count:
        return False, f"solution labels {len(solution.partition)} nodes, instance has {graph.node_count}"
    try:
        labeling = labeling_from_partition(graph, solution.partition)
    except DisconnectedClass as err:
        return False, f"infeasible: {err}"
    if not is_feasible(graph, labeling):
        return False, "infeasible labeling"
    value = objective(graph, labeling)
    if abs(value - solution.objective) > tolerance:
        return False, f"objective mismatch: file says {format_float(solution.objective)}, recomputed {format_float(value)}"
    return True, f"ok objective {format_float(value)}"


def cmd_verify(args) -> int:
    graph = _load_instance(args.instance)
    ok, message = verify(graph, read_text(args.solution), args.tolerance)
    print(message)
    return OK if ok else VERIFY_FAILED


def cmd_eval(args) -> int:
    predicted = loads_solution(read_text(args.predicted), strict=False).partition
    truth = loads_solution(read_text(args.truth), strict=False).partition
    if len(predicted) != len(truth):
        raise UsageError(f"label files cover {len(predicted)} and {len(truth)} nodes")
    scores = score_partition(predicted, truth)
    print(f"rand {scores.rand_index!r}")
    print(f"precision {scores.precision!r}")
    print(f"recall {scores.recall!r}")
    print(f"f {scores.f_measure!r}")
    print(f"clusters {len(set(predicted))}")
    return OK


def bench_rows(k_min: int, k_max: int, lifted: bool, pattern: str = "scene", max_iter: int = 1000):
    """Solve grid instances from the all-joined start; yield one row per size."""
    for k in range(k_min, k_max + 1):
        graph = generate_grid_instance(synthetic_flow(k, pattern), lifted=lifted)
        t0 = time.perf_counter()
        result = solve_partition(graph, joined_partition(graph), SolverConfig(max_iter=max_iter))
        seconds = time.perf_counter() - t0
        yield {
            "k": k,
            "nodes": graph.node_count,
            "higher_order": graph.higher_order_count(),
            "seconds": seconds,
            "iterations": result.iterations,
            "objective": result.objective,
        }


def cmd_bench(args) -> int:
    print("k nodes higher_order seconds iterations objective")
    xs, ys = [], []
    for row in bench_rows(args.k_min, args.k_max, args.lifted, args.pattern):
        print(f"{row['k']} {row['nodes']} {row['higher_order']} {row['seconds']:.3f} {row['iterations']} {format_float(row['objective'])}", flush=True)
        xs.append(row["higher_order"])
        ys.append(row["seconds"])
    if len(xs) >= 2:
        print(f"# log-log slope {loglog_slope(xs, ys):.3f}")
    return OK


def loglog_slope(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Least-squares slope of log(y) against log(x)."""
    lx = [math.log(x) for x in xs]
    ly = [math.log(max(y, 1e-9)) for y in ys]
    mx, my = sum(lx) / len(lx), sum(ly) / len(ly)
    sxx = sum((x - mx) ** 2 for x in lx)
    return sum((x - mx) * (y - my) for x, y in zip(lx, ly)) / sxx


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="holmc", description="Higher-order lifted multicut motion segmentation.")
    parser.add_argument("--config", help="key = value file supplying option defaults")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    # Same flags after the command name; SUPPRESS keeps the top-level value otherwise.
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=argparse.SUPPRESS, help="key = value file supplying option defaults")
    common.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS, help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def command(name: str, help: str) -> argparse.ArgumentParser:
        return sub.add_parser(name, help=help, parents=[common])

    p = command("synth", "write a synthetic trajectory scene")
    p.add_argument("--scene", choices=["rotation", "twin"], default="rotation")
    p.add_argument("--frames", type=int, default=20)
    p.add_argument("--noise", type=float, default=0.3)
    p.add_argument("--per-side", type=int, default=4, help="points per side of each twin square")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--labels", help="also write ground-truth labels here")
    p.add_argument("-o", "--out")
    p.set_defaults(run=cmd_synth)

    p = command("grid", "write a flow-grid instance")
    p.add_argument("--k", type=int, default=4, help="side length 2**k")
    p.add_argument("--pattern", choices=["scene", "constant", "two-region"], default="scene")
    p.add_argument("--lifted", action="store_true")
    p.add_argument("--lift-distance", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--out")
    p.set_defaults(run=cmd_grid)

    p = command("build-graph", "build an instance from trajectories")
    p.add_argument("trajectories")
    p.add_argument("--mode", choices=[m.value for m in Mode], default="aomc")
    p.add_argument("--lifted", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    defaults = BuilderConfig()
    p.add_argument("--pairwise-cutoff", type=float, default=defaults.pairwise_cutoff)
    p.add_argument("--lift-knn", type=int, default=defaults.lift_knn)
    p.add_argument("--lift-dist", type=float, default=defaults.lift_dist)
    p.add_argument("--triple-full-dist", type=float, default=defaults.triple_full_dist)
    p.add_argument("--triple-max-dist", type=float, default=defaults.triple_max_dist)
    params = CostParams()
    p.add_argument("--theta-bar0", type=float, default=params.theta_bar0)
    p.add_argument("--theta0", type=float, default=params.theta0)
    p.add_argument("--theta1", type=float, default=params.theta1)
    p.add_argument("--theta2", type=float, default=params.theta2)
    p.add_argument("--theta3", type=float, default=params.theta3)
    p.add_argument("-o", "--out")
    p.set_defaults(run=cmd_build_graph)

    p = command("solve", "local search solver")
    p.add_argument("instance")
    p.add_argument("--init", default="singletons", help="singletons, joined, or a label file")
    p.add_argument("--max-iter", type=int, default=1000)
    p.add_argument("-o", "--out")
    p.set_defaults(run=cmd_solve)

    p = command("solve-exact", "exhaustive solver for small instances")
    p.add_argument("instance")
    p.add_argument("--node-limit", type=int, default=10)
    p.add_argument("-o", "--out")
    p.set_defaults(run=cmd_solve_exact)

    p = command("verify", "check feasibility and objective of a solution")
    p.add_argument("instance")
    p.add_argument("solution")
    p.add_argument("--tolerance", type=float, default=1e-9)
    p.set_defaults(run=cmd_verify)

    p = command("eval", "score predicted labels against ground truth")
    p.add_argument("predicted")
    p.add_argument("truth")
    p.set_defaults(run=cmd_eval)

    p = command("bench", "grid timing sweep")
    p.add_argument("--k-min", type=int, default=3)
    p.add_argument("--k-max", type=int, default=7)
    p.add_argument("--lifted", action="store_true")
    p.add_argument("--pattern", choices=["scene", "constant", "two-region"], default="scene")
    p.set_defaults(run=cmd_bench)
    return parser


_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def read_config(path: str) -> dict[str, str]:
    """Parse ``key = value`` lines; ``#`` comments and blank lines are skipped."""
    values: dict[str, str] = {}
    for lineno, raw in enumerate(read_text(path).splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep or not key.strip():
            raise FormatError("expected 'key = value'", lineno)
        values[key.strip().replace("-", "_")] = value.strip()
    return values


def _apply_config(parser: argparse.ArgumentParser, command: str, values: dict[str, str]) -> None:
    sub = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction)).choices[command]
    actions = {a.dest: a for a in sub._actions if a.option_strings and a.dest not in ("help", "config", "verbose")}
    defaults = {}
    for key, value in values.items():
        action = actions.get(key)
        if action is None:
            raise UsageError(f"config key {key!r} is not an option of {command!r}")
        if action.nargs == 0:
            if value.lower() not in _TRUE | _FALSE:
                raise UsageError(f"config key {key!r} needs a boolean, got {value!r}")
            defaults[key] = value.lower() in _TRUE
        else:
            defaults[key] = value  # argparse converts string defaults with the option's type
    sub.set_defaults(**defaults)


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.config:
            _apply_config(parser, args.command, read_config(args.config))
            args = parser.parse_args(argv)
    except SystemExit as exc:
        return USAGE if exc.code else OK
    except (UsageError, FormatError, OSError) as err:
        print(f"holmc: {err}", file=sys.stderr)
        return USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s", stream=sys.stderr)
    try:
        return args.run(args)
    except (FormatError, UsageError, OSError, TooLarge, InfeasibleInput, ValueError) as err:
        print(f"holmc: {err}", file=sys.stderr)
        return USAGE


if __name__ == "__main__":
    sys.exit(main())
