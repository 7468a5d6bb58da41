"""Message-passing schedules and convergence monitoring.

Three schedules cover the demos: synchronous-parallel (everything from the
previous step's committed state, two phases, double-buffered), random
single-edge (one uniformly chosen edge and direction per step, committed
immediately), and floodfill (a sequential left-to-right then right-to-left
sweep over a chain, after which beliefs on a tree are final).

Convergence is monitored with the message residual: the largest change
between the last two committed payloads over all mailboxes. On a converging
linear graph every schedule drives it to zero, and they all agree on the
fixed point.
"""

from __future__ import annotations

import enum
import time
from dataclasses import dataclass
from typing import Callable, List, Optional, Tuple

import numpy as np

from .errors import EmptyGraph, NotAChain
from .graph import FactorGraph, Message
from .messages import (
    DampingConfig,
    RelinearizePolicy,
    _robust_pass_scale,
    factor_to_variable_message,
    relinearize,
    variable_to_factor_message,
)


class ScheduleKind(enum.Enum):
    SYNC = "sync"
    RANDOM = "random"
    FLOODFILL = "floodfill"


@dataclass
class ConvergenceReport:
    iterations: int
    messages_sent: int
    max_message_residual: float
    converged: bool
    wall_notes: str = ""


def message_residual(graph: FactorGraph) -> float:
    """Max over edges/directions of the change between the last two commits."""
    return graph.max_commit_delta()


def sync_step(graph: FactorGraph, damping: DampingConfig | None = None) -> int:
    """One simulated-parallel step: all variable messages, then all factor messages.

    Both phases read only payloads committed before the phase started, so the
    result is independent of iteration order within a phase. Robust rescales
    are computed once per factor: a factor's outgoing messages all see the
    same committed inputs, so they share one k_r.
    """
    stamp = graph.iteration + 1
    for edge in graph.edges.values():
        msg = variable_to_factor_message(graph, edge.variable_id, edge.factor_id)
        edge.var_to_factor.stage(Message(msg, stamp))
    graph.commit_var_to_factor()
    scales = {}
    for factor in graph.factors.values():
        if factor.model.robust is not None and factor.model.robust.kind != "none":
            scales[factor.id] = _robust_pass_scale(graph, factor)
    for edge in graph.edges.values():
        msg = factor_to_variable_message(
            graph, edge.factor_id, edge.variable_id, damping,
            k_r=scales.get(edge.factor_id, 1.0),
        )
        edge.factor_to_var.stage(Message(msg, stamp))
    graph.commit_factor_to_var()
    graph.iteration = stamp
    return 2 * len(graph.edges)


def random_step(
    graph: FactorGraph, rng: np.random.Generator, damping: DampingConfig | None = None
) -> int:
    """One uniformly random (edge, direction) message, committed immediately."""
    if not graph.edges:
        raise EmptyGraph("random schedule needs at least one edge")
    edge_ids = list(graph.edges)
    edge = graph.edges[edge_ids[int(rng.integers(len(edge_ids)))]]
    stamp = graph.iteration + 1
    if int(rng.integers(2)) == 0:
        msg = variable_to_factor_message(graph, edge.variable_id, edge.factor_id)
        edge.var_to_factor.stage(Message(msg, stamp))
        edge.var_to_factor.commit()
    else:
        msg = factor_to_variable_message(graph, edge.factor_id, edge.variable_id, damping)
        edge.factor_to_var.stage(Message(msg, stamp))
        edge.factor_to_var.commit()
    graph.iteration = stamp
    return 1


def chain_order(graph: FactorGraph) -> Tuple[List[int], List[int]]:
    """Variables and binary factors of a chain graph in path order.

    Raises NotAChain unless the binary factors form exactly one simple path
    covering every variable. Unary factors are permitted anywhere; anything
    of arity three or more is rejected.
    """
    binary = [f for f in graph.factors.values() if f.arity == 2]
    if any(f.arity > 2 for f in graph.factors.values()):
        raise NotAChain("a factor touches more than two variables")
    adjacency: dict = {vid: [] for vid in graph.variables}
    for f in binary:
        a, b = f.variable_ids
        adjacency[a].append((f.id, b))
        adjacency[b].append((f.id, a))
    if any(len(nbrs) > 2 for nbrs in adjacency.values()):
        raise NotAChain("a variable joins more than two pairwise factors")

    n = len(graph.variables)
    if n == 0:
        raise NotAChain("graph has no variables")
    if n == 1:
        return list(graph.variables), []
    if len(binary) != n - 1:
        raise NotAChain(f"{len(binary)} pairwise factors cannot chain {n} variables")

    endpoints = sorted(v for v, nbrs in adjacency.items() if len(nbrs) == 1)
    if len(endpoints) != 2:
        raise NotAChain("chain must have exactly two endpoint variables")

    variables = [endpoints[0]]
    factors: List[int] = []
    prev_factor = None
    while len(variables) < n:
        steps = [
            (fid, nxt)
            for fid, nxt in adjacency[variables[-1]]
            if fid != prev_factor
        ]
        if len(steps) != 1:
            raise NotAChain("chain walk is ambiguous or broken")
        fid, nxt = steps[0]
        factors.append(fid)
        variables.append(nxt)
        prev_factor = fid
    if len(set(variables)) != n:
        raise NotAChain("binary factors do not cover every variable exactly once")
    return variables, factors


def floodfill_sweep(graph: FactorGraph, damping: DampingConfig | None = None) -> int:
    """Sequential bidirectional sweep over a chain; beliefs are final after it.

    Unary factors fire their (constant) message at the start of the sweep.
    On a pure chain of n variables the sweep passes exactly 4 (n - 1)
    messages: 2 (n - 1) per direction.
    """

    def send_v2f(vid, fid):
        edge = graph.edge_between(vid, fid)
        edge.var_to_factor.stage(Message(variable_to_factor_message(graph, vid, fid), stamp))
        edge.var_to_factor.commit()

    def send_f2v(fid, vid):
        edge = graph.edge_between(vid, fid)
        edge.factor_to_var.stage(
            Message(factor_to_variable_message(graph, fid, vid, damping), stamp)
        )
        edge.factor_to_var.commit()

    variables, factors = chain_order(graph)
    stamp = graph.iteration + 1
    sent = 0
    for f in graph.factors.values():
        if f.arity == 1:
            send_f2v(f.id, f.variable_ids[0])
            sent += 1
    for i in range(len(factors)):
        send_v2f(variables[i], factors[i])
        send_f2v(factors[i], variables[i + 1])
        sent += 2
    for i in range(len(factors) - 1, -1, -1):
        send_v2f(variables[i + 1], factors[i])
        send_f2v(factors[i], variables[i])
        sent += 2
    graph.iteration = stamp
    return sent


def run_until(
    graph: FactorGraph,
    kind: ScheduleKind,
    max_iters: int = 5000,
    tol: float = 1e-8,
    damping: DampingConfig | None = None,
    seed: Optional[int] = None,
    rng: Optional[np.random.Generator] = None,
    relin: RelinearizePolicy = RelinearizePolicy.AT_CONSTRUCTION,
    relin_every: int = 1,
    on_iteration: Optional[Callable[[FactorGraph, int, int, float], None]] = None,
) -> ConvergenceReport:
    """Step the chosen schedule until the residual drops to tol.

    One iteration is one sync step, one full floodfill sweep, or one random
    message. The callback, when given, fires after every iteration with
    (graph, iteration, messages_sent, residual).
    """
    if max_iters < 1:
        raise ValueError("max_iters must be >= 1")
    if kind == ScheduleKind.RANDOM and rng is None:
        rng = np.random.default_rng(seed)

    start = time.perf_counter()
    messages = 0
    residual = float("inf")
    converged = False
    iterations = 0
    for iterations in range(1, max_iters + 1):
        if relin == RelinearizePolicy.EVERY_K_SYNC and iterations % max(relin_every, 1) == 0:
            for fid in graph.factors:
                relinearize(graph, fid)
        elif relin == RelinearizePolicy.EVERY_MESSAGE:
            for fid in graph.factors:
                relinearize(graph, fid)
        if kind == ScheduleKind.SYNC:
            messages += sync_step(graph, damping)
        elif kind == ScheduleKind.RANDOM:
            messages += random_step(graph, rng, damping)
        elif kind == ScheduleKind.FLOODFILL:
            messages += floodfill_sweep(graph, damping)
        else:
            raise ValueError(f"unknown schedule kind {kind!r}")
        residual = message_residual(graph)
        if on_iteration is not None:
            on_iteration(graph, iterations, messages, residual)
        if residual <= tol:
            converged = True
            break
        # one undamped floodfill sweep over a linear chain is leaf-to-leaf
        # tree elimination: every message is already at its fixed point, so
        # the sweep completes the run without a confirming second pass
        if (
            kind == ScheduleKind.FLOODFILL
            and (damping is None or damping.beta == 0.0)
            and all(f.model.is_linear for f in graph.factors.values())
        ):
            converged = True
            break
    elapsed = time.perf_counter() - start
    return ConvergenceReport(
        iterations=iterations,
        messages_sent=messages,
        max_message_residual=residual,
        converged=converged,
        wall_notes=f"{kind.value} schedule, {elapsed:.3f}s wall",
    )
