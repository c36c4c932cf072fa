"""Call-graph data model: ingestion, stdlib filtering, oracle labeling, sampling.

Graphs are immutable after construction; every operation returns a new value,
so all of them are safe to run concurrently over different programs.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import DegenerateDatasetError, FormatError, IntegrityError, UsageError

logger = logging.getLogger(__name__)

DEFAULT_STDLIB_PREFIXES = ("java/", "javax/", "sun/", "com/sun/", "jdk/")
DEFAULT_SAMPLE_CAP = 20_000

RETAIN = 1
PRUNE = 0


class Scope(str, Enum):
    APPLICATION = "application"
    DEPENDENCY = "dependency"


class GraphKind(str, Enum):
    STATIC_0CFA = "static_0cfa"
    STATIC_1CFA = "static_1cfa"
    DYNAMIC = "dynamic"


@dataclass(frozen=True)
class MethodId:
    """A method node: URI of the form pkg/subpkg/Class.method(descriptor)."""

    uri: str
    scope: Scope = Scope.DEPENDENCY


@dataclass(frozen=True, order=True)
class CallEdge:
    source: str
    target: str
    offset: int

    def key(self) -> tuple[str, str, int]:
        return (self.source, self.target, self.offset)

    def pair(self) -> tuple[str, str]:
        return (self.source, self.target)


@dataclass(frozen=True)
class CallGraph:
    """Directed multigraph of method nodes and call-site edges.

    `nodes` maps uri -> Scope; `edges` is unique on (source, target, offset).
    `duplicate_count` records edges collapsed at ingestion.
    """

    program_id: str
    kind: GraphKind
    nodes: Mapping[str, Scope]
    edges: tuple[CallEdge, ...]
    generation_time_s: float | None = None
    duplicate_count: int = 0

    def __post_init__(self) -> None:
        if not self.program_id:
            raise IntegrityError("call graph has an empty program id")
        seen: set[tuple[str, str, int]] = set()
        for e in self.edges:
            if e.source not in self.nodes:
                raise IntegrityError(
                    f"edge ({e.source!r} -> {e.target!r}) references unknown source node"
                )
            if e.target not in self.nodes:
                raise IntegrityError(
                    f"edge ({e.source!r} -> {e.target!r}) references unknown target node"
                )
            if e.offset < 0:
                raise IntegrityError(f"edge {e.key()!r} has a negative offset")
            if e.key() in seen:
                raise IntegrityError(f"duplicate edge {e.key()!r}")
            seen.add(e.key())
        if self.generation_time_s is not None and self.generation_time_s < 0:
            raise IntegrityError("generation_time_s must be non-negative")

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @cached_property
    def pair_set(self) -> frozenset[tuple[str, str]]:
        return frozenset(e.pair() for e in self.edges)

    @cached_property
    def edge_keys(self) -> frozenset[tuple[str, str, int]]:
        return frozenset(e.key() for e in self.edges)

    @cached_property
    def successors(self) -> dict[str, tuple[str, ...]]:
        """Distinct successor uris per node (pair-level adjacency)."""
        adj: dict[str, list[str]] = {}
        seen: set[tuple[str, str]] = set()
        for e in self.edges:
            if e.pair() in seen:
                continue
            seen.add(e.pair())
            adj.setdefault(e.source, []).append(e.target)
        return {u: tuple(vs) for u, vs in adj.items()}

    def nodes_in_scope(self, scope: Scope) -> tuple[str, ...]:
        return tuple(u for u, s in self.nodes.items() if s is scope)

    def with_edges(self, edges: Iterable[CallEdge]) -> "CallGraph":
        """Same nodes and metadata, different edge set (must be a subset)."""
        return CallGraph(
            program_id=self.program_id,
            kind=self.kind,
            nodes=self.nodes,
            edges=tuple(edges),
            generation_time_s=self.generation_time_s,
        )

    def to_json_dict(self) -> dict:
        doc: dict = {"program": self.program_id, "kind": self.kind.value}
        if self.generation_time_s is not None:
            doc["generation_time_s"] = self.generation_time_s
        doc["nodes"] = [
            {"uri": uri, "scope": self.nodes[uri].value} for uri in sorted(self.nodes)
        ]
        doc["edges"] = [
            {"source": e.source, "target": e.target, "offset": e.offset}
            for e in sorted(self.edges)
        ]
        return doc


def _require(record: Mapping, key: str, what: str) -> object:
    if key not in record:
        raise FormatError(f"{what} is missing required field {key!r}: {record!r}")
    return record[key]


def load_call_graph(data: bytes | str) -> CallGraph:
    """Parse a call-graph JSON document.

    Duplicate (source, target, offset) triples are collapsed into one edge and
    counted; an edge naming an undeclared node is an integrity error.
    """
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise FormatError(f"call-graph document is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise FormatError("call-graph document must be a JSON object")

    program_id = _require(doc, "program", "call-graph document")
    kind_raw = _require(doc, "kind", "call-graph document")
    try:
        kind = GraphKind(kind_raw)
    except ValueError:
        raise FormatError(f"unknown call-graph kind {kind_raw!r}") from None
    gen_time = doc.get("generation_time_s")
    if gen_time is not None and not isinstance(gen_time, (int, float)):
        raise FormatError(f"generation_time_s must be a number, got {gen_time!r}")

    nodes: dict[str, Scope] = {}
    for i, rec in enumerate(doc.get("nodes", [])):
        if not isinstance(rec, dict):
            raise FormatError(f"node #{i} is not an object: {rec!r}")
        uri = _require(rec, "uri", f"node #{i}")
        if not isinstance(uri, str) or not uri:
            raise FormatError(f"node #{i} has an invalid uri: {uri!r}")
        if uri in nodes:
            raise IntegrityError(f"node uri declared twice: {uri!r}")
        scope_raw = rec.get("scope", Scope.DEPENDENCY.value)
        try:
            nodes[uri] = Scope(scope_raw)
        except ValueError:
            raise FormatError(f"node {uri!r} has unknown scope {scope_raw!r}") from None

    edges: list[CallEdge] = []
    seen: set[tuple[str, str, int]] = set()
    duplicates = 0
    for i, rec in enumerate(doc.get("edges", [])):
        if not isinstance(rec, dict):
            raise FormatError(f"edge #{i} is not an object: {rec!r}")
        source = _require(rec, "source", f"edge #{i}")
        target = _require(rec, "target", f"edge #{i}")
        offset = _require(rec, "offset", f"edge #{i}")
        if not isinstance(offset, int) or isinstance(offset, bool) or offset < 0:
            raise FormatError(f"edge #{i} has an invalid offset: {offset!r}")
        key = (source, target, offset)
        if key in seen:
            duplicates += 1
            continue
        seen.add(key)
        edges.append(CallEdge(source=source, target=target, offset=offset))

    if duplicates:
        logger.warning(
            "program %s: collapsed %d duplicate edge(s)", program_id, duplicates
        )
    return CallGraph(
        program_id=program_id,
        kind=kind,
        nodes=nodes,
        edges=tuple(edges),
        generation_time_s=float(gen_time) if gen_time is not None else None,
        duplicate_count=duplicates,
    )


def dump_call_graph(graph: CallGraph) -> str:
    return json.dumps(graph.to_json_dict(), indent=1, sort_keys=False)


def filter_stdlib_edges(
    graph: CallGraph, prefixes: Sequence[str] = DEFAULT_STDLIB_PREFIXES
) -> CallGraph:
    """Drop every edge whose source or target uri starts with any prefix.

    Nodes are preserved (V' = V); an empty prefix list is a no-op.
    """
    if not prefixes:
        return graph
    prefix_tuple = tuple(prefixes)

    def touches_stdlib(e: CallEdge) -> bool:
        return e.source.startswith(prefix_tuple) or e.target.startswith(prefix_tuple)

    return graph.with_edges(e for e in graph.edges if not touches_stdlib(e))


@dataclass(frozen=True)
class LabeledEdge:
    """A static edge tagged retain (1) / prune (0) by the dynamic oracle."""

    edge: CallEdge
    label: int
    program_id: str

    def __post_init__(self) -> None:
        if self.label not in (RETAIN, PRUNE):
            raise UsageError(f"label must be 0 or 1, got {self.label!r}")


def label_edges(static_g: CallGraph, dynamic_g: CallGraph) -> list[LabeledEdge]:
    """Label each static edge retain iff its (source, target) pair occurs in
    the dynamic graph. Matching is offset-insensitive."""
    if static_g.program_id != dynamic_g.program_id:
        raise UsageError(
            f"program mismatch: static={static_g.program_id!r} "
            f"dynamic={dynamic_g.program_id!r}"
        )
    if dynamic_g.kind is not GraphKind.DYNAMIC:
        raise UsageError(f"oracle graph has kind {dynamic_g.kind.value!r}, expected dynamic")
    dynamic_pairs = dynamic_g.pair_set
    return [
        LabeledEdge(
            edge=e,
            label=RETAIN if e.pair() in dynamic_pairs else PRUNE,
            program_id=static_g.program_id,
        )
        for e in static_g.edges
    ]


def sample_large_program(
    edges: Sequence[LabeledEdge], cap: int = DEFAULT_SAMPLE_CAP, seed: int = 0
) -> list[LabeledEdge]:
    """Cap a program's edge list, keeping every retain-labeled edge.

    Below the cap this is the identity. Above it, all retain edges survive and
    a seeded uniform subset of prune edges fills up to max(cap, #retain).
    Input order is preserved.
    """
    if cap <= 0:
        raise UsageError(f"sampling cap must be positive, got {cap}")
    if len(edges) <= cap:
        return list(edges)
    prune_positions = [i for i, le in enumerate(edges) if le.label == PRUNE]
    n_retain = len(edges) - len(prune_positions)
    budget = max(cap, n_retain) - n_retain
    rng = np.random.default_rng(seed)
    chosen = rng.choice(len(prune_positions), size=budget, replace=False)
    keep = set(prune_positions[i] for i in chosen)
    return [
        le
        for i, le in enumerate(edges)
        if le.label == RETAIN or i in keep
    ]


def pr_ratio(edges: Sequence[LabeledEdge]) -> float:
    """#prune-labeled / #retain-labeled; the dataset imbalance statistic."""
    n_retain = sum(1 for le in edges if le.label == RETAIN)
    if n_retain == 0:
        raise DegenerateDatasetError("no retain-labeled edges; P/R ratio undefined")
    return (len(edges) - n_retain) / n_retain


def write_labeled_edges(edges: Iterable[LabeledEdge]) -> str:
    """Serialize to JSON Lines (source, target, offset, label, program)."""
    lines = []
    for le in edges:
        lines.append(
            json.dumps(
                {
                    "source": le.edge.source,
                    "target": le.edge.target,
                    "offset": le.edge.offset,
                    "label": le.label,
                    "program": le.program_id,
                },
                sort_keys=False,
            )
        )
    return "\n".join(lines) + ("\n" if lines else "")


def read_labeled_edges(data: bytes | str) -> list[LabeledEdge]:
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    out: list[LabeledEdge] = []
    for lineno, line in enumerate(data.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise FormatError(f"labeled-edge line {lineno} is not valid JSON: {exc}") from exc
        label = rec.get("label")
        if label not in (RETAIN, PRUNE):
            raise FormatError(f"labeled-edge line {lineno} has invalid label {label!r}")
        out.append(
            LabeledEdge(
                edge=CallEdge(rec["source"], rec["target"], rec["offset"]),
                label=label,
                program_id=rec["program"],
            )
        )
    return out


@dataclass(frozen=True)
class DatasetManifest:
    """Train/test split plus per-program edge counts for one dataset."""

    name: str
    train_programs: tuple[str, ...]
    test_programs: tuple[str, ...]
    edge_counts: Mapping[str, Mapping[str, int]] = field(default_factory=dict)
    pr_ratio: float = 0.0

    def __post_init__(self) -> None:
        overlap = set(self.train_programs) & set(self.test_programs)
        if overlap:
            raise IntegrityError(
                f"train/test program sets overlap: {sorted(overlap)}"
            )
        if self.pr_ratio < 0:
            raise IntegrityError("pr_ratio must be non-negative")

    def to_json_dict(self) -> dict:
        return {
            "name": self.name,
            "train_programs": list(self.train_programs),
            "test_programs": list(self.test_programs),
            "edge_counts": {p: dict(c) for p, c in sorted(self.edge_counts.items())},
            "pr_ratio": self.pr_ratio,
        }

    @classmethod
    def from_json_dict(cls, doc: Mapping) -> "DatasetManifest":
        return cls(
            name=doc["name"],
            train_programs=tuple(doc["train_programs"]),
            test_programs=tuple(doc["test_programs"]),
            edge_counts=doc.get("edge_counts", {}),
            pr_ratio=doc.get("pr_ratio", 0.0),
        )
