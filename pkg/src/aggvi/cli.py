"""Command-line entry points.

    aggvi solve-oracle      centralized value iteration (MDP or network file)
    aggvi solve-distributed multi-agent run on a road network
    aggvi sweep-agents      seed-averaged error for several agent counts
    aggvi gen-city          write the synthetic grid city
    aggvi bench             time the compiled and pure-Python kernels

Exit status: 0 success, 2 usage, 3 unparsable input, 4 invalid input,
5 run did not converge, 6 parallel self-check mismatch.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import warnings
from pathlib import Path

from . import __version__
from .aggregation import (
    format_disaggregation,
    format_partition,
    kmeans_partition,
    uniform_boundary_disaggregation,
)
from .experiments import ORACLE_TOL, sweep_agents
from .mdp import MdpError, MdpParseError, NotConvergedError, load_mdp, value_iteration
from .metrics import run_metrics, write_metrics
from .schedule import ScheduleError, load_schedule
from .simulator import (
    build_run_config,
    format_values,
    load_run_config,
    results_identical,
    run_distributed_vi,
    write_broadcast_log,
    write_history,
    write_local_values,
)
from .traffic import (
    NetworkParseError,
    build_routing_mdp,
    bundled_city_path,
    format_speeds,
    generate_grid_city,
    load_network,
    parse_network,
    sample_speeds,
)

EXIT_OK = 0
EXIT_PARSE = 3
EXIT_VALIDATION = 4
EXIT_NOT_CONVERGED = 5
EXIT_SELF_CHECK = 6

SELF_CHECK_MAX_STATES = 5000

DEFAULTS = {
    "alpha": 0.9,
    "c_threshold": 0.1,
    "tolerance": 1e-8,
    "max_iters": 100_000,
    "schedule": "complete",
    "B": 0,
    "seed": 0,
    "record_history": False,
}


class SelfCheckError(RuntimeError):
    pass


def _network(path):
    if path is None:
        return parse_network(bundled_city_path().read_text())
    return load_network(path)


def _seeds(text):
    out = []
    for part in text.split(","):
        part = part.strip()
        if "-" in part:
            lo, hi = part.split("-", 1)
            out.extend(range(int(lo), int(hi) + 1))
        elif part:
            out.append(int(part))
    if not out:
        raise argparse.ArgumentTypeError("empty seed list")
    return out


def _int_list(text):
    try:
        vals = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated integer list: {text!r}")
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def _settings(args):
    """Merge: explicit flags > config file > built-in defaults."""
    merged = dict(DEFAULTS)
    if getattr(args, "config", None):
        merged.update(load_run_config(args.config))
    flags = {
        "alpha": args.alpha,
        "c_threshold": getattr(args, "threshold", None),
        "tolerance": args.tolerance,
        "max_iters": args.max_iters,
        "schedule": getattr(args, "schedule", None),
        "B": getattr(args, "window_b", None),
        "seed": getattr(args, "seed", None),
        "record_history": True if getattr(args, "history", False) else None,
    }
    merged.update({k: v for k, v in flags.items() if v is not None})
    return merged


def _out_dir(path):
    p = Path(path)
    p.mkdir(parents=True, exist_ok=True)
    return p


def cmd_solve_oracle(args):
    cfg = _settings(args)
    out = _out_dir(args.out)
    if args.mdp:
        mdp = load_mdp(args.mdp)
        if args.alpha is not None:
            mdp = mdp.with_alpha(args.alpha)
    else:
        net = _network(args.network)
        speeds = sample_speeds(net, cfg["seed"])
        mdp = build_routing_mdp(net, speeds, cfg["alpha"])
        (out / "speeds.txt").write_text(format_speeds(net, speeds))
    J, iters = value_iteration(mdp, tol=args.tolerance or ORACLE_TOL, max_iters=cfg["max_iters"])
    (out / "jstar.txt").write_text(format_values(range(mdp.n), J))
    write_metrics(
        [("states", mdp.n), ("alpha", mdp.alpha), ("iterations", iters),
         ("tolerance", float(args.tolerance or ORACLE_TOL))],
        out / "summary.csv",
    )
    print(f"oracle: {mdp.n} states, {iters} iterations -> {out / 'jstar.txt'}")
    return EXIT_OK


def _schedule_arg(cfg, q):
    kind = cfg["schedule"]
    if isinstance(kind, str) and kind.startswith("custom:"):
        return load_schedule(kind.split(":", 1)[1], q, int(cfg["B"]))
    return kind


def cmd_solve_distributed(args):
    cfg = _settings(args)
    out = _out_dir(args.out)
    net = _network(args.network)
    q = args.agents
    speeds = sample_speeds(net, cfg["seed"])
    mdp = build_routing_mdp(net, speeds, cfg["alpha"])
    partition = kmeans_partition(net.xy, q, seed=cfg["seed"])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        disagg = uniform_boundary_disaggregation(mdp, partition)
    config = build_run_config(
        q, c_threshold=cfg["c_threshold"], tolerance=cfg["tolerance"],
        max_iters=cfg["max_iters"], schedule=_schedule_arg(cfg, q), B=int(cfg["B"]),
        record_history=bool(cfg["record_history"]),
    )
    result = run_distributed_vi(mdp, partition, disagg, config, workers=args.workers)
    if args.workers > 1 and mdp.n <= SELF_CHECK_MAX_STATES:
        reference = run_distributed_vi(mdp, partition, disagg, config, workers=1)
        if not results_identical(result, reference):
            raise SelfCheckError("parallel run differs from the sequential reference")
    J_star, _ = value_iteration(mdp, tol=ORACLE_TOL)

    (out / "speeds.txt").write_text(format_speeds(net, speeds))
    (out / "partition.txt").write_text(format_partition(partition))
    (out / "disaggregation.txt").write_text(format_disaggregation(disagg))
    (out / "jstar.txt").write_text(format_values(range(mdp.n), J_star))
    write_local_values(result, out)
    write_broadcast_log(result, out / "broadcasts.csv")
    if result.history is not None:
        write_history(result, out / "r_history.csv")
    rows = run_metrics(result, J_star)
    write_metrics(rows, out / "metrics.csv")
    m = dict(rows)
    print(
        f"q={q} iterations={result.iterations} messages={result.messages_sent}/"
        f"{result.message_ceiling()} avg_error={100 * m['avg_error']:.2f}% "
        f"max_error={100 * m['max_error']:.2f}%"
    )
    if not result.converged:
        print(f"run did not converge within {config.max_iters} iterations; outputs are partial",
              file=sys.stderr)
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def cmd_sweep_agents(args):
    cfg = _settings(args)
    out = _out_dir(args.out)
    net = _network(args.network)
    rows = sweep_agents(
        net, args.agents_list, args.seeds, alpha=cfg["alpha"], c_threshold=cfg["c_threshold"],
        tolerance=cfg["tolerance"], B=int(cfg["B"]), schedule=cfg["schedule"],
        max_iters=cfg["max_iters"],
    )
    path = out / "sweep.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["q", "mean_avg_error", "std_avg_error", "mean_max_error", "runs", "failures",
                    "mean_iterations", "mean_messages"])
        for r in rows:
            w.writerow([r.q, repr(r.mean_avg_error), repr(r.std_avg_error),
                        repr(r.mean_max_error), r.runs, r.failures, repr(r.mean_iterations),
                        repr(r.mean_messages)])
    for r in rows:
        print(f"q={r.q:3d}  avg_error={100 * r.mean_avg_error:6.2f}% "
              f"(std {100 * r.std_avg_error:.2f}%)  failures={r.failures}")
    return EXIT_OK


def cmd_gen_city(args):
    text, counts = generate_grid_city(args.rows, args.cols, args.seed)
    Path(args.out).write_text(text)
    print(f"wrote {counts.nodes} nodes, {counts.edges} edges to {args.out}")
    return EXIT_OK


def cmd_bench(args):
    from .bench import run_benchmark

    for line in run_benchmark(repeat=args.repeat):
        print(line)
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="aggvi", description=__doc__.split("\n\n")[0])
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def run_flags(sp, distributed=True):
        sp.add_argument("--alpha", type=float)
        sp.add_argument("--seed", type=int)
        sp.add_argument("--tolerance", type=float)
        sp.add_argument("--max-iters", type=int)
        sp.add_argument("--out", required=True)
        sp.add_argument("--config", help="JSON run configuration")
        if distributed:
            sp.add_argument("--threshold", type=float, help="communication threshold")
            sp.add_argument("--window-b", type=int, help="connectivity window B")
            sp.add_argument("--schedule",
                            help="complete | round-robin | custom:<file>")

    sp = sub.add_parser("solve-oracle", help="centralized value iteration")
    src = sp.add_mutually_exclusive_group()
    src.add_argument("--mdp", help="MDP text file")
    src.add_argument("--network", help="road network file (default: bundled city)")
    run_flags(sp, distributed=False)
    sp.set_defaults(func=cmd_solve_oracle)

    sp = sub.add_parser("solve-distributed", help="multi-agent run on a road network")
    sp.add_argument("--network", help="road network file (default: bundled city)")
    sp.add_argument("-q", "--agents", type=int, default=5)
    sp.add_argument("--history", action="store_true", help="write r_history.csv")
    sp.add_argument("--workers", type=int, default=1)
    run_flags(sp)
    sp.set_defaults(func=cmd_solve_distributed)

    sp = sub.add_parser("sweep-agents", help="error versus number of agents")
    sp.add_argument("--network", help="road network file (default: bundled city)")
    sp.add_argument("--agents-list", type=_int_list, default=[4, 8, 12, 16])
    sp.add_argument("--seeds", type=_seeds, default=list(range(10)), help="e.g. 0-9 or 1,5,7")
    run_flags(sp)
    sp.set_defaults(func=cmd_sweep_agents)

    sp = sub.add_parser("gen-city", help="write the synthetic grid city")
    sp.add_argument("--out", required=True)
    sp.add_argument("--rows", type=int, default=12)
    sp.add_argument("--cols", type=int, default=25)
    sp.add_argument("--seed", type=int, default=2022)
    sp.set_defaults(func=cmd_gen_city)

    sp = sub.add_parser("bench", help="compare kernel backends")
    sp.add_argument("--repeat", type=int, default=3)
    sp.set_defaults(func=cmd_bench)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "agents", 1) < 1:
        parser.error("--agents must be at least 1")
    try:
        return args.func(args)
    except (MdpParseError, NetworkParseError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ScheduleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NotConvergedError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    except SelfCheckError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SELF_CHECK
    except (MdpError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
