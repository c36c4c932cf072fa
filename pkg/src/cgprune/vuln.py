"""Vulnerability-propagation client analysis over (pruned) call graphs.

Marks seeded random dependency methods as vulnerable, then measures which of
them application code can reach, and how fast the reachability query runs.
"""

from __future__ import annotations

import json
import time
from collections import deque
from dataclasses import dataclass
from typing import Collection, Sequence

import numpy as np

from .errors import UsageError
from .graph import CallGraph, Scope


@dataclass(frozen=True)
class VulnConfig:
    k: int = 100
    seed: int = 0
    warmup_runs: int = 3
    measured_runs: int = 3

    def __post_init__(self) -> None:
        if self.k < 1:
            raise UsageError(f"k must be positive, got {self.k}")
        if self.warmup_runs < 0:
            raise UsageError("warmup_runs must be non-negative")
        if self.measured_runs < 1:
            raise UsageError("measured_runs must be positive")


def mark_vulnerable(graph: CallGraph, config: VulnConfig) -> frozenset[str]:
    """Seeded uniform k-subset of the dependency-scope nodes."""
    candidates = sorted(graph.nodes_in_scope(Scope.DEPENDENCY))
    if len(candidates) < config.k:
        raise UsageError(
            f"need {config.k} dependency-scope nodes, graph has {len(candidates)}"
        )
    rng = np.random.default_rng(config.seed)
    chosen = rng.choice(len(candidates), size=config.k, replace=False)
    return frozenset(candidates[i] for i in chosen)


def reachability(graph: CallGraph, vulns: Collection[str]) -> tuple[int, float]:
    """BFS from every application node; counts (app, vuln) reachable pairs
    and the fraction of vulnerable nodes reached by at least one of them."""
    vuln_set = frozenset(vulns)
    unknown = vuln_set - set(graph.nodes)
    if unknown:
        raise UsageError(f"vulnerable nodes not in graph: {sorted(unknown)[:3]}")
    succ = graph.successors
    pairs = 0
    reached: set[str] = set()
    for app in graph.nodes_in_scope(Scope.APPLICATION):
        visited = {app}
        queue = deque((app,))
        while queue:
            u = queue.popleft()
            for v in succ.get(u, ()):
                if v not in visited:
                    visited.add(v)
                    queue.append(v)
        hit = vuln_set & visited
        pairs += len(hit)
        reached |= hit
    fraction = len(reached) / len(vuln_set) if vuln_set else 0.0
    return pairs, fraction


def cg_size_stats(graph: CallGraph) -> tuple[int, int]:
    """(edge count, count of nodes with at least one incident edge)."""
    active: set[str] = set()
    for e in graph.edges:
        active.add(e.source)
        active.add(e.target)
    return graph.n_edges, len(active)


@dataclass(frozen=True)
class VulnReport:
    program_id: str
    tau: float | None
    edges: int
    active_nodes: int
    reachable_paths: int
    reachable_node_fraction: float
    time_ms_mean: float
    time_ms_std: float

    def to_json_dict(self) -> dict:
        return {
            "program": self.program_id,
            "tau": self.tau,
            "edges": self.edges,
            "active_nodes": self.active_nodes,
            "reachable_paths": self.reachable_paths,
            "reachable_node_fraction": self.reachable_node_fraction,
            "time_ms_mean": self.time_ms_mean,
            "time_ms_std": self.time_ms_std,
        }


def timed_analysis(
    graph: CallGraph, vulns: Collection[str], config: VulnConfig, tau: float | None = None
) -> VulnReport:
    """Warm up, then time the reachability query over several recorded runs."""
    for _ in range(config.warmup_runs):
        reachability(graph, vulns)
    samples_ms: list[float] = []
    paths, fraction = 0, 0.0
    for _ in range(config.measured_runs):
        start = time.perf_counter()
        paths, fraction = reachability(graph, vulns)
        samples_ms.append((time.perf_counter() - start) * 1000.0)
    mean = sum(samples_ms) / len(samples_ms)
    std = (sum((s - mean) ** 2 for s in samples_ms) / len(samples_ms)) ** 0.5
    edges, active = cg_size_stats(graph)
    return VulnReport(
        program_id=graph.program_id,
        tau=tau,
        edges=edges,
        active_nodes=active,
        reachable_paths=paths,
        reachable_node_fraction=fraction,
        time_ms_mean=mean,
        time_ms_std=std,
    )


def vuln_reports_json(reports: Sequence[VulnReport], label: str) -> dict:
    return {"config": label, "programs": [r.to_json_dict() for r in reports]}


def vuln_summary_row(label: str, reports: Sequence[VulnReport]) -> dict:
    """Corpus means for one configuration, one row of the summary table."""
    n = len(reports)
    if n == 0:
        raise UsageError("cannot summarize an empty report list")
    return {
        "config": label,
        "edges": sum(r.edges for r in reports) / n,
        "active_nodes": sum(r.active_nodes for r in reports) / n,
        "reachable_paths": sum(r.reachable_paths for r in reports) / n,
        "reachable_node_fraction": sum(r.reachable_node_fraction for r in reports) / n,
        "time_ms_mean": sum(r.time_ms_mean for r in reports) / n,
        "time_ms_std": sum(r.time_ms_std for r in reports) / n,
    }


def vuln_summary_csv(rows: Sequence[dict]) -> str:
    header = (
        "config,edges,active_nodes,reachable_paths,"
        "reachable_node_fraction,time_ms_mean,time_ms_std"
    )
    lines = [header]
    for row in rows:
        lines.append(
            f"{row['config']},{row['edges']!r},{row['active_nodes']!r},"
            f"{row['reachable_paths']!r},{row['reachable_node_fraction']!r},"
            f"{row['time_ms_mean']!r},{row['time_ms_std']!r}"
        )
    return "\n".join(lines) + "\n"
