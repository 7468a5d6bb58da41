"""Factor-graph data model: variables, factors, edges, mailboxes.

Nodes store structure only; all message state lives on the edges, each of
which carries one double-buffered mailbox per direction. A schedule stages
messages into mailboxes and commits them either all at once (synchronous
semantics) or immediately (sequential semantics); readers only ever see
committed payloads. Each commit records the change against the previous
committed message, which is what convergence monitoring polls.

Factors cache their linearization. For the linear models shipped here the
cache is computed once at construction (x0 = 0) and never changes; nonlinear
models are refreshed by the message-passing layer per the relinearization
policy.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Tuple

import numpy as np

from .errors import DimensionMismatch, GbpError, UnknownEdge, UnknownVariable
from .gaussians import GaussianInfo, mean_or_zero


@dataclass
class Message:
    payload: GaussianInfo
    iteration_stamp: int = 0


class Mailbox:
    """Double-buffered slot for one message direction on one edge.

    committed is what readers see; staged is the pending write. commit()
    promotes staged and records the infinity-norm change between the last
    two committed payloads (eta delta plus lam delta), which message_residual
    maximizes over the graph.
    """

    __slots__ = ("committed", "staged", "last_delta")

    def __init__(self, dim: int):
        self.committed = Message(GaussianInfo.zero(dim))
        self.staged: Message | None = None
        self.last_delta = 0.0

    def stage(self, msg: Message):
        self.staged = msg

    def commit(self) -> bool:
        if self.staged is None:
            return False
        old = self.committed.payload
        new = self.staged.payload
        d_eta = float(np.abs(new.eta - old.eta).max())
        d_lam = float(np.abs(new.lam - old.lam).max())
        self.last_delta = d_eta + d_lam
        self.committed = self.staged
        self.staged = None
        return True


@dataclass
class VariableNode:
    id: int
    dim: int
    label: str = ""
    edges: List[int] = field(default_factory=list)


@dataclass
class FactorNode:
    id: int
    model: object
    variable_ids: List[int]
    edges: List[int]
    linearization: GaussianInfo
    x0: np.ndarray
    # cumulative block offsets into the stacked state, len arity + 1
    offsets: Tuple[int, ...] = (0,)
    # diagnostic from the last message pass: ("gaussian", 1.0) or ("scaled", k_r)
    robust_state: Tuple[str, float] = ("gaussian", 1.0)

    @property
    def arity(self) -> int:
        return len(self.variable_ids)


@dataclass
class Edge:
    id: int
    variable_id: int
    factor_id: int
    var_to_factor: Mailbox
    factor_to_var: Mailbox


class FactorGraph:
    """Mutable container for the whole graph; growth-only, ids stable.

    iteration counts schedule steps (the unit depends on the schedule);
    version counts structural or model changes and is what cached batch
    solves key on.
    """

    def __init__(self):
        self.variables: Dict[int, VariableNode] = {}
        self.factors: Dict[int, FactorNode] = {}
        self.edges: Dict[int, Edge] = {}
        self.iteration = 0
        self.version = 0
        self._next_variable = 0
        self._next_factor = 0
        self._next_edge = 0
        # (variable_id, factor_id) -> edge id
        self._edge_index: Dict[Tuple[int, int], int] = {}

    # ------------------------------------------------------ construction

    def add_variable(self, dim: int, label: str = "") -> int:
        if dim < 1:
            raise DimensionMismatch(f"variable dim must be >= 1, got {dim}")
        vid = self._next_variable
        self._next_variable += 1
        self.variables[vid] = VariableNode(id=vid, dim=int(dim), label=label)
        self.version += 1
        return vid

    def add_factor(self, model, variable_ids) -> int:
        variable_ids = list(variable_ids)
        if len(set(variable_ids)) != len(variable_ids):
            raise DimensionMismatch("a factor cannot connect the same variable twice")
        for vid in variable_ids:
            if vid not in self.variables:
                raise UnknownVariable(f"variable {vid} not in graph")
        total = sum(self.variables[v].dim for v in variable_ids)
        if total != model.x_dim:
            raise DimensionMismatch(
                f"model expects state dim {model.x_dim}, variables give {total}"
            )
        fid = self._next_factor
        self._next_factor += 1
        x0 = np.zeros(model.x_dim)
        edge_ids = []
        for vid in variable_ids:
            eid = self._next_edge
            self._next_edge += 1
            dim = self.variables[vid].dim
            edge = Edge(eid, vid, fid, Mailbox(dim), Mailbox(dim))
            self.edges[eid] = edge
            self.variables[vid].edges.append(eid)
            self._edge_index[(vid, fid)] = eid
            edge_ids.append(eid)
        offsets = [0]
        for vid in variable_ids:
            offsets.append(offsets[-1] + self.variables[vid].dim)
        self.factors[fid] = FactorNode(
            id=fid,
            model=model,
            variable_ids=variable_ids,
            edges=edge_ids,
            linearization=model.linearize(x0),
            x0=x0,
            offsets=tuple(offsets),
        )
        self.version += 1
        return fid

    # ------------------------------------------------------------ lookup

    def edge_between(self, variable_id: int, factor_id: int) -> Edge:
        eid = self._edge_index.get((variable_id, factor_id))
        if eid is None:
            raise UnknownEdge(f"no edge between variable {variable_id} and factor {factor_id}")
        return self.edges[eid]

    def block_dims(self, factor: FactorNode) -> List[int]:
        return [self.variables[v].dim for v in factor.variable_ids]

    # ----------------------------------------------------------- beliefs

    def belief(self, variable_id: int) -> GaussianInfo:
        """Product of all committed factor-to-variable messages at a variable."""
        var = self.variables.get(variable_id)
        if var is None:
            raise UnknownVariable(f"variable {variable_id} not in graph")
        eta = np.zeros(var.dim)
        lam = np.zeros((var.dim, var.dim))
        for eid in var.edges:
            payload = self.edges[eid].factor_to_var.committed.payload
            eta += payload.eta
            lam += payload.lam
        return GaussianInfo.trusted(eta, lam)

    def factor_incoming_state(self, factor_id: int) -> Tuple[np.ndarray, bool]:
        """Stacked x_s from committed variable-to-factor message means.

        Blocks with zero-information messages fall back to the zero vector.
        The flag reports whether any block carried information at all.
        """
        factor = self.factors[factor_id]
        parts = []
        informative = False
        for eid in factor.edges:
            payload = self.edges[eid].var_to_factor.committed.payload
            if payload.is_zero:
                parts.append(np.zeros(payload.dim))
            else:
                parts.append(mean_or_zero(payload))
                informative = True
        return np.concatenate(parts), informative

    def factor_energy(self, factor_id: int) -> float:
        """Least-squares energy (z - h)^T lam (z - h) at the incoming means."""
        if factor_id not in self.factors:
            raise GbpError(f"factor {factor_id} not in graph")
        factor = self.factors[factor_id]
        x_s, _ = self.factor_incoming_state(factor_id)
        r = factor.model.residual(x_s)
        return float(r @ factor.model.lam_meas @ r)

    # ------------------------------------------------------------ commit

    def commit_var_to_factor(self):
        for edge in self.edges.values():
            edge.var_to_factor.commit()

    def commit_factor_to_var(self):
        for edge in self.edges.values():
            edge.factor_to_var.commit()

    def max_commit_delta(self) -> float:
        """Max over all mailboxes of the change between their last two commits."""
        best = 0.0
        for edge in self.edges.values():
            if edge.var_to_factor.last_delta > best:
                best = edge.var_to_factor.last_delta
            if edge.factor_to_var.last_delta > best:
                best = edge.factor_to_var.last_delta
        return best
