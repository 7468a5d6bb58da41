"""Command line entry point: batch runs, snapshot emission, replay.

gbpsim run    builds a scenario, drives a schedule to convergence, writes
              periodic snapshots plus a final metrics file, and reports the
              batch-oracle comparison.
gbpsim replay reads a snapshot back and summarizes it against the embedded
              batch overlay, if one was recorded.

Exit codes: 0 converged, 1 any error, 2 ran out of iterations. Metrics files
contain no timing, so identical configs produce byte-identical output.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from importlib import resources

import numpy as np

from .batch import compare, solve, solve_robust
from .errors import GbpError
from .gaussians import moments_or_relaxed
from .messages import DampingConfig
from .models import RobustKernel
from .scenarios import (
    SlamConfig,
    build_surface_graph,
    classify_factors,
    gen_pose_graph,
    load_surface,
    new_world,
    run_script,
)
from .schedules import ScheduleKind, run_until
from .snapshots import build_snapshot, read_snapshot, write_snapshot

HUBER_DEFAULT = RobustKernel("huber", 4.0)


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on bad flags; 2 means "not converged" here, so remap
    def error(self, message):
        self.print_usage(sys.stderr)
        raise SystemExit(f"{self.prog}: error: {message}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="gbpsim", description="Gaussian belief propagation runner")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="build a scenario and run a schedule")
    run.add_argument(
        "--scenario",
        required=True,
        choices=("surface1d", "posegraph2d", "slam"),
    )
    run.add_argument(
        "--schedule", choices=("sync", "random", "floodfill"), default="sync"
    )
    run.add_argument("--iters", type=int, default=5000, help="iteration cap")
    run.add_argument("--tol", type=float, default=1e-8, help="message residual target")
    run.add_argument("--damping", type=float, default=0.0)
    run.add_argument(
        "--robust", action="store_true", help="huber kernels (and, for slam, outliers)"
    )
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--script", default="", help="slam steering script over w/a/s/d")
    run.add_argument(
        "--data", default=None, help="surface1d measurement file (default: packaged)"
    )
    run.add_argument(
        "--snapshot-every",
        type=int,
        default=1000,
        help="iterations between snapshot files (no effect without --out)",
    )
    run.add_argument("--out", default=None, help="output directory for JSON files")

    replay = sub.add_parser("replay", help="summarize a snapshot file")
    replay.add_argument("snapshot", help="path to a snapshot JSON file")
    return parser


def _build_scenario(args):
    """Returns (graph, gt dict or None, world or None)."""
    if args.scenario == "surface1d":
        if args.data is not None:
            scn = load_surface(args.data)
        else:
            with resources.as_file(
                resources.files("gbpsim").joinpath("data/surface1d.txt")
            ) as path:
                scn = load_surface(path)
        graph = build_surface_graph(scn)
        if args.robust:
            for f in graph.factors.values():
                if f.model.kind != "anchor":
                    f.model = f.model.with_robust(HUBER_DEFAULT)
        return graph, None, None
    if args.scenario == "posegraph2d":
        scn, graph = gen_pose_graph(args.seed)
        if args.robust:
            for f in graph.factors.values():
                if f.model.kind == "relative":
                    f.model = f.model.with_robust(HUBER_DEFAULT)
        gt = {vid: scn.ground_truth[vid] for vid in graph.variables}
        return graph, gt, None
    world, graph = new_world(SlamConfig(seed=args.seed, robust=args.robust))
    if args.script:
        run_script(world, graph, args.script)
    return graph, world.var_gt, world


def run_command(args) -> int:
    if args.tol <= 0:
        raise GbpError("--tol must be positive")
    if args.snapshot_every < 1:
        raise GbpError("--snapshot-every must be >= 1")
    if args.out is not None:
        os.makedirs(args.out, exist_ok=True)

    graph, gt, world = _build_scenario(args)
    damping = DampingConfig(args.damping)
    kind = ScheduleKind(args.schedule)

    def emit(g, iteration, messages_sent, residual):
        if args.out is None or iteration % args.snapshot_every != 0:
            return
        doc = build_snapshot(g, args.seed, messages_sent=messages_sent, gt=gt)
        write_snapshot(doc, os.path.join(args.out, f"snapshot_{iteration:06d}.json"))

    report = run_until(
        graph,
        kind,
        max_iters=args.iters,
        tol=args.tol,
        damping=damping,
        seed=args.seed,
        on_iteration=emit,
    )

    batch = solve_robust(graph) if args.robust else solve(graph)
    metrics = compare(graph, batch)
    doc = {
        "scenario": args.scenario,
        "schedule": args.schedule,
        "seed": args.seed,
        "robust": bool(args.robust),
        "damping": args.damping,
        "tol": args.tol,
        "max_iters": args.iters,
        "converged": report.converged,
        "iterations": report.iterations,
        "messages_sent": report.messages_sent,
        "max_residual": report.max_message_residual,
        "comparison": {
            "max_mean_err": metrics.max_mean_err,
            "overconfident_fraction": metrics.overconfident_fraction,
            "per_variable_mean_err": {
                str(k): v for k, v in sorted(metrics.per_variable_mean_err.items())
            },
        },
    }

    classes = None
    if world is not None:
        classes = classify_factors(world, graph)
        counts = {"grey": 0, "white": 0, "red": 0, "yellow": 0}
        for c in classes.values():
            counts[c.label] += 1
        ledger = world.outlier_ledger
        doc["classification"] = {
            "counts": counts,
            "ledger_outliers": len(ledger),
            "ledger_outliers_white": sum(
                1 for fid in ledger if classes[fid].label == "white"
            ),
        }

    if args.out is not None:
        final = build_snapshot(
            graph,
            args.seed,
            messages_sent=report.messages_sent,
            gt=gt,
            classes=classes,
            batch=batch,
            mean_err_vs_batch=metrics.max_mean_err,
            cov_ratio_census=metrics.overconfident_fraction,
        )
        write_snapshot(final, os.path.join(args.out, "snapshot_final.json"))
        with open(os.path.join(args.out, "metrics.json"), "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")

    print(json.dumps(doc, indent=2, sort_keys=True))
    return 0 if report.converged else 2


def replay_command(args) -> int:
    doc = read_snapshot(args.snapshot)
    print(f"iteration {doc['iteration']}, seed {doc['seed']}")
    print(
        f"{len(doc['variables'])} variables, {len(doc['factors'])} factors, "
        f"messages_sent {doc['metrics']['messages_sent']}, "
        f"max_residual {doc['metrics']['max_residual']:.3e}"
    )
    if "batch" not in doc:
        print("no oracle embedded")
        return 0
    batch_by_id = {entry["id"]: entry for entry in doc["batch"]}
    worst = 0.0
    overconfident = 0
    for var in doc["variables"]:
        ref = batch_by_id[var["id"]]
        err = float(
            np.max(np.abs(np.asarray(var["mean"]) - np.asarray(ref["mean"])))
        )
        worst = max(worst, err)
        ratio = np.trace(np.asarray(var["cov"])) / np.trace(np.asarray(ref["cov"]))
        if ratio < 1.0:
            overconfident += 1
        print(f"  var {var['id']:>4} mean err vs batch {err:.3e} cov ratio {ratio:.4f}")
    print(
        f"max mean err vs batch {worst:.3e}; "
        f"{overconfident}/{len(doc['variables'])} variables overconfident"
    )
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            return run_command(args)
        return replay_command(args)
    except (GbpError, OSError, json.JSONDecodeError) as exc:
        print(f"gbpsim: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
