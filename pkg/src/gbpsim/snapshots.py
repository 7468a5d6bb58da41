"""Snapshot documents: the JSON surface shared by the CLI and live service.

A snapshot is a plain dict (version 1) with the full marginal state of a
graph plus run metrics, and optionally ground truth, per-factor robust
classification, and a batch-solution overlay. Serialization uses Python's
shortest round-trip float repr, so every value survives a write/read cycle
bit exactly (well beyond 15 significant digits).
"""

from __future__ import annotations

import json
from typing import Dict, Optional

import numpy as np

from .batch import BatchSolution
from .errors import SchemaError
from .gaussians import moments_or_relaxed
from .graph import FactorGraph

SCHEMA_VERSION = 1


def _vec(x) -> list:
    return [float(v) for v in np.asarray(x).ravel()]


def _mat(x) -> list:
    return [[float(v) for v in row] for row in np.asarray(x)]


def build_snapshot(
    graph: FactorGraph,
    seed: int,
    messages_sent: int = 0,
    max_residual: Optional[float] = None,
    gt: Optional[Dict[int, np.ndarray]] = None,
    classes: Optional[dict] = None,
    batch: Optional[BatchSolution] = None,
    mean_err_vs_batch: Optional[float] = None,
    cov_ratio_census: Optional[float] = None,
) -> dict:
    """Assemble a schema-version-1 snapshot of the graph's current state.

    Beliefs are converted with moments_or_relaxed, so a half-built graph
    (singular beliefs) still snapshots cleanly with large finite variances.
    """
    variables = []
    for vid, var in graph.variables.items():
        mu, sigma = moments_or_relaxed(graph.belief(vid))
        entry = {
            "id": vid,
            "label": var.label,
            "mean": _vec(mu),
            "cov": _mat(sigma),
        }
        if gt is not None and vid in gt:
            entry["gt"] = _vec(gt[vid])
        variables.append(entry)

    factors = []
    for fid, factor in graph.factors.items():
        entry = {
            "id": fid,
            "var_ids": list(factor.variable_ids),
            "kind": factor.model.kind,
        }
        if classes is not None and fid in classes:
            c = classes[fid]
            entry["robust_class"] = c.label
            entry["m_est"] = float(c.m_est)
            entry["m_gt"] = float(c.m_gt)
        factors.append(entry)

    metrics = {
        "messages_sent": int(messages_sent),
        "max_residual": float(
            graph.max_commit_delta() if max_residual is None else max_residual
        ),
    }
    if mean_err_vs_batch is not None:
        metrics["mean_err_vs_batch"] = float(mean_err_vs_batch)
    if cov_ratio_census is not None:
        metrics["cov_ratio_census"] = float(cov_ratio_census)

    doc = {
        "schema_version": SCHEMA_VERSION,
        "iteration": int(graph.iteration),
        "seed": int(seed),
        "variables": variables,
        "factors": factors,
        "metrics": metrics,
    }
    if batch is not None:
        doc["batch"] = [
            {
                "id": vid,
                "mean": _vec(m.mu),
                "cov": _mat(m.sigma),
            }
            for vid, m in batch.per_variable.items()
        ]
    return doc


def _require(cond: bool, msg: str):
    if not cond:
        raise SchemaError(msg)


def validate_snapshot(doc: dict):
    """Raise SchemaError unless doc is a well-formed version-1 snapshot."""
    _require(isinstance(doc, dict), "snapshot must be an object")
    for key in ("schema_version", "iteration", "seed", "variables", "factors", "metrics"):
        _require(key in doc, f"snapshot missing key {key!r}")
    _require(
        doc["schema_version"] == SCHEMA_VERSION,
        f"unsupported schema_version {doc['schema_version']!r}",
    )
    _require(isinstance(doc["iteration"], int), "iteration must be an integer")
    _require(isinstance(doc["seed"], int), "seed must be an integer")

    _require(isinstance(doc["variables"], list), "variables must be a list")
    seen_ids = set()
    for entry in doc["variables"]:
        _require(isinstance(entry, dict), "variable entry must be an object")
        for key in ("id", "label", "mean", "cov"):
            _require(key in entry, f"variable entry missing {key!r}")
        d = len(entry["mean"])
        _require(d >= 1, "variable mean must be non-empty")
        _require(
            len(entry["cov"]) == d and all(len(row) == d for row in entry["cov"]),
            f"variable {entry['id']}: cov must be {d}x{d}",
        )
        _require(
            all(isinstance(v, (int, float)) for v in entry["mean"]),
            f"variable {entry['id']}: non-numeric mean",
        )
        if "gt" in entry:
            _require(
                len(entry["gt"]) == d, f"variable {entry['id']}: gt dim mismatch"
            )
        seen_ids.add(entry["id"])

    _require(isinstance(doc["factors"], list), "factors must be a list")
    for entry in doc["factors"]:
        for key in ("id", "var_ids", "kind"):
            _require(key in entry, f"factor entry missing {key!r}")
        for vid in entry["var_ids"]:
            _require(
                vid in seen_ids,
                f"factor {entry['id']} references unknown variable {vid}",
            )
        if "robust_class" in entry:
            _require(
                entry["robust_class"] in ("grey", "white", "red", "yellow"),
                f"factor {entry['id']}: bad robust_class {entry['robust_class']!r}",
            )
            _require(
                "m_est" in entry and "m_gt" in entry,
                f"factor {entry['id']}: robust_class without distances",
            )

    metrics = doc["metrics"]
    _require(isinstance(metrics, dict), "metrics must be an object")
    for key in ("messages_sent", "max_residual"):
        _require(key in metrics, f"metrics missing {key!r}")
        _require(
            isinstance(metrics[key], (int, float)), f"metrics {key} must be numeric"
        )

    if "batch" in doc:
        _require(isinstance(doc["batch"], list), "batch overlay must be a list")
        for entry in doc["batch"]:
            for key in ("id", "mean", "cov"):
                _require(key in entry, f"batch entry missing {key!r}")
            _require(
                entry["id"] in seen_ids,
                f"batch entry references unknown variable {entry['id']}",
            )


def write_snapshot(doc: dict, path):
    validate_snapshot(doc)
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(doc, handle)
        handle.write("\n")


def read_snapshot(path) -> dict:
    with open(path, "r", encoding="utf-8") as handle:
        doc = json.load(handle)
    validate_snapshot(doc)
    return doc
