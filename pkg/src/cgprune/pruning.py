"""Apply a trained classifier to a static call graph under a confidence threshold."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping, Sequence

import numpy as np

from .errors import UsageError
from .graph import PRUNE, RETAIN, CallEdge, CallGraph

logger = logging.getLogger(__name__)

MODE_PROSE = "prose"
MODE_EQ_LITERAL = "eq-literal"
DECISION_MODES = (MODE_PROSE, MODE_EQ_LITERAL)

EdgeKey = tuple[str, str, int]


def decide(p_retain: float, tau: float, mode: str = MODE_PROSE) -> int:
    """Retain/prune decision for one edge.

    Default mode prunes only when the prune-class probability exceeds tau, so
    a higher tau is more conservative. The eq-literal mode instead retains only
    when p_retain exceeds tau. Ties retain the edge in both modes.
    """
    if not 0.0 <= p_retain <= 1.0:
        raise UsageError(f"p_retain must be in [0, 1], got {p_retain}")
    if not 0.5 <= tau <= 1.0:
        raise UsageError(f"tau must be in [0.5, 1.0], got {tau}")
    if mode == MODE_PROSE:
        return PRUNE if (1.0 - p_retain) > tau else RETAIN
    if mode == MODE_EQ_LITERAL:
        return RETAIN if p_retain > tau else PRUNE
    raise UsageError(f"unknown decision mode {mode!r}, expected one of {DECISION_MODES}")


@dataclass(frozen=True)
class PruneConfig:
    tau: float
    model_ref: str = ""
    mode: str = MODE_PROSE

    def __post_init__(self) -> None:
        if not 0.5 <= self.tau <= 1.0:
            raise UsageError(f"tau must be in [0.5, 1.0], got {self.tau}")
        if self.mode not in DECISION_MODES:
            raise UsageError(f"unknown decision mode {self.mode!r}")


@dataclass(frozen=True)
class PrunedGraph:
    """A base graph, the edges the classifier kept, and the probability map.

    Edges without features are retained fail-safe and listed in
    `missing_feature_edges`.
    """

    base: CallGraph
    kept_edges: tuple[CallEdge, ...]
    p_retain: Mapping[EdgeKey, float]
    tau: float
    model_ref: str = ""
    mode: str = MODE_PROSE
    missing_feature_edges: tuple[EdgeKey, ...] = ()

    def __post_init__(self) -> None:
        base_keys = self.base.edge_keys
        for e in self.kept_edges:
            if e.key() not in base_keys:
                raise UsageError(f"kept edge {e.key()!r} is not in the base graph")

    @property
    def program_id(self) -> str:
        return self.base.program_id

    @property
    def n_kept(self) -> int:
        return len(self.kept_edges)

    @property
    def n_pruned(self) -> int:
        return self.base.n_edges - self.n_kept

    @cached_property
    def kept_pair_set(self) -> frozenset[tuple[str, str]]:
        return frozenset(e.pair() for e in self.kept_edges)

    def to_call_graph(self) -> CallGraph:
        """Node set and kind are identical to the base; edges are the kept set."""
        return self.base.with_edges(self.kept_edges)

    def to_json_dict(self) -> dict:
        doc = self.to_call_graph().to_json_dict()
        doc["pruning"] = {
            "tau": self.tau,
            "model": self.model_ref,
            "kept": self.n_kept,
            "pruned": self.n_pruned,
        }
        return doc


def _predict_edges(
    graph: CallGraph, model, features: Mapping[EdgeKey, np.ndarray]
) -> tuple[dict[EdgeKey, float], tuple[EdgeKey, ...]]:
    """One batched model evaluation over all edges that have features."""
    keyed: list[EdgeKey] = []
    rows: list[np.ndarray] = []
    missing: list[EdgeKey] = []
    for e in graph.edges:
        vec = features.get(e.key())
        if vec is None:
            missing.append(e.key())
        else:
            keyed.append(e.key())
            rows.append(vec)
    probs: dict[EdgeKey, float] = {}
    if rows:
        p = model.predict_batch(np.stack(rows))
        probs = {k: float(v) for k, v in zip(keyed, p)}
    if missing:
        logger.warning(
            "program %s: %d edge(s) lack features and are retained fail-safe",
            graph.program_id,
            len(missing),
        )
    return probs, tuple(missing)


def _kept_from_probs(
    graph: CallGraph,
    probs: Mapping[EdgeKey, float],
    missing: frozenset[EdgeKey],
    tau: float,
    mode: str,
) -> tuple[CallEdge, ...]:
    kept = []
    for e in graph.edges:
        key = e.key()
        if key in missing or decide(probs[key], tau, mode) == RETAIN:
            kept.append(e)
    return tuple(kept)


def prune_graph(
    graph: CallGraph,
    model,
    features: Mapping[EdgeKey, np.ndarray],
    tau: float,
    *,
    mode: str = MODE_PROSE,
    model_ref: str = "",
) -> PrunedGraph:
    config = PruneConfig(tau=tau, model_ref=model_ref, mode=mode)
    probs, missing = _predict_edges(graph, model, features)
    kept = _kept_from_probs(graph, probs, frozenset(missing), config.tau, config.mode)
    return PrunedGraph(
        base=graph,
        kept_edges=kept,
        p_retain=probs,
        tau=config.tau,
        model_ref=config.model_ref,
        mode=config.mode,
        missing_feature_edges=missing,
    )


def threshold_sweep(
    graph: CallGraph,
    model,
    features: Mapping[EdgeKey, np.ndarray],
    taus: Sequence[float],
    *,
    mode: str = MODE_PROSE,
    model_ref: str = "",
) -> list[tuple[float, PrunedGraph]]:
    """Prune at each threshold, evaluating the model once per edge.

    Thresholds must be sorted ascending; the kept-edge sets are then nested.
    """
    if list(taus) != sorted(taus):
        raise UsageError("thresholds must be sorted ascending")
    if not taus:
        return []
    PruneConfig(tau=taus[0], mode=mode)
    PruneConfig(tau=taus[-1], mode=mode)
    probs, missing = _predict_edges(graph, model, features)
    missing_set = frozenset(missing)
    out = []
    for tau in taus:
        kept = _kept_from_probs(graph, probs, missing_set, tau, mode)
        out.append(
            (
                tau,
                PrunedGraph(
                    base=graph,
                    kept_edges=kept,
                    p_retain=probs,
                    tau=tau,
                    model_ref=model_ref,
                    mode=mode,
                    missing_feature_edges=missing,
                ),
            )
        )
    return out


def dump_pruned_graph(pruned: PrunedGraph) -> str:
    return json.dumps(pruned.to_json_dict(), indent=1, sort_keys=False)


def probability_csv(pruned: PrunedGraph) -> str:
    lines = ["source,target,offset,p_retain"]
    for e in pruned.base.edges:
        key = e.key()
        if key in pruned.p_retain:
            lines.append(f"{e.source},{e.target},{e.offset},{pruned.p_retain[key]!r}")
    return "\n".join(lines) + "\n"
