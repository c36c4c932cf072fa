"""Per-edge feature vectors: structural, signature-hashed, semantic, combined.

Semantic vectors are produced by an external embedder and re-enter through
`load_semantic_embeddings`; everything else is computed here.
"""

from __future__ import annotations

import json
import math
import re
from collections import Counter, deque
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import networkx as nx
import numpy as np

from .errors import FormatError, UsageError
from .graph import CallEdge, CallGraph, Scope

STRUCT_DIM = 11
DEFAULT_SIGNATURE_DIM = 768

EdgeKey = tuple[str, str, int]

_FNV64_OFFSET = 0xCBF29CE484222325
_FNV64_PRIME = 0x100000001B3
_U64_MASK = 0xFFFFFFFFFFFFFFFF

_DELIMITERS = re.compile(r"[/.();,$\s]+")
_CAMEL = re.compile(r"[A-Z]+(?![a-z])|[A-Z][a-z0-9]*|[a-z0-9]+")
_CALLEE_SALT = "#tgt"


def fnv1a64(text: str) -> int:
    """FNV-1a 64-bit hash over UTF-8 bytes; fixed so all runs agree bit-exactly."""
    h = _FNV64_OFFSET
    for byte in text.encode("utf-8"):
        h ^= byte
        h = (h * _FNV64_PRIME) & _U64_MASK
    return h


def tokenize_uri(uri: str) -> list[str]:
    """Split a method uri on path/signature delimiters, then on camelCase."""
    tokens: list[str] = []
    for chunk in _DELIMITERS.split(uri):
        if chunk:
            tokens.extend(_CAMEL.findall(chunk))
    return tokens


def signature_feature(edge: CallEdge, dim: int = DEFAULT_SIGNATURE_DIM) -> np.ndarray:
    """Hashed bag-of-tokens over the two uris, callee tokens salted, L2-normalized."""
    if dim <= 0:
        raise UsageError(f"signature dimension must be positive, got {dim}")
    vec = np.zeros(dim, dtype=np.float64)
    for token in tokenize_uri(edge.source):
        vec[fnv1a64(token) % dim] += 1.0
    for token in tokenize_uri(edge.target):
        vec[fnv1a64(token + _CALLEE_SALT) % dim] += 1.0
    norm = float(np.linalg.norm(vec))
    if norm > 0.0:
        vec /= norm
    return vec


@dataclass(frozen=True)
class SemanticPrompt:
    text: str


def build_semantic_prompt(caller_src: str, callee_src: str) -> SemanticPrompt:
    """Text handed to the external embedder; uris stand in when source is missing."""
    return SemanticPrompt(text=f"[CLS]{caller_src}[SEP]{callee_src}[EOS]")


def load_semantic_embeddings(data: bytes | str) -> dict[EdgeKey, np.ndarray]:
    """Parse embedding JSONL into a map keyed by (source, target, offset).

    All vectors must share one length and be finite.
    """
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    out: dict[EdgeKey, np.ndarray] = {}
    width: int | None = None
    for lineno, line in enumerate(data.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise FormatError(f"embedding line {lineno} is not valid JSON: {exc}") from exc
        try:
            key = (rec["source"], rec["target"], rec["offset"])
            raw = rec["vector"]
        except KeyError as exc:
            raise FormatError(f"embedding line {lineno} is missing field {exc}") from None
        vec = np.asarray(raw, dtype=np.float64)
        if vec.ndim != 1:
            raise FormatError(f"embedding line {lineno} vector is not one-dimensional")
        if width is None:
            width = vec.shape[0]
        elif vec.shape[0] != width:
            raise FormatError(
                f"embedding line {lineno} has length {vec.shape[0]}, expected {width}"
            )
        if not np.isfinite(vec).all():
            raise FormatError(f"embedding line {lineno} contains non-finite entries")
        out[key] = vec
    return out


def combine(f_struct: np.ndarray, f_sem: np.ndarray) -> np.ndarray:
    """Concatenate f_struct and f_sem; entries are copied bit-exactly."""
    return np.concatenate([np.asarray(f_struct, dtype=np.float64),
                           np.asarray(f_sem, dtype=np.float64)])


def default_entry_nodes(graph: CallGraph) -> frozenset[str]:
    """Application-scope nodes, the default BFS roots for the depth feature."""
    return frozenset(graph.nodes_in_scope(Scope.APPLICATION))


class GraphIndex:
    """Per-graph lookup tables; extraction afterwards is O(1) per edge.

    `extract_ops` counts per-edge extraction calls and `build_edge_visits`
    counts edge touches during construction, for complexity assertions.
    """

    def __init__(self, graph: CallGraph, entry_nodes: Iterable[str] | None = None):
        self.graph = graph
        self.entry_nodes = (
            default_entry_nodes(graph) if entry_nodes is None else frozenset(entry_nodes)
        )
        unknown = self.entry_nodes - set(graph.nodes)
        if unknown:
            raise UsageError(f"entry nodes not in graph: {sorted(unknown)[:3]}")
        self.extract_ops = 0
        self.build_edge_visits = 0

        self.out_degree: Counter[str] = Counter()
        self.in_degree: Counter[str] = Counter()
        self.fanout: Counter[tuple[str, int]] = Counter()
        pair_offsets: dict[tuple[str, str], set[int]] = {}
        for e in graph.edges:
            self.build_edge_visits += 1
            self.out_degree[e.source] += 1
            self.in_degree[e.target] += 1
            self.fanout[(e.source, e.offset)] += 1
            pair_offsets.setdefault(e.pair(), set()).add(e.offset)
        self.pair_offset_count = {p: len(o) for p, o in pair_offsets.items()}

        self.depth = self._bfs_depths()
        self.reach_count = self._reach_counts()
        self.log_nodes = math.log1p(graph.n_nodes)
        self.log_edges = math.log1p(graph.n_edges)

    def _bfs_depths(self) -> dict[str, int]:
        depth = {u: -1 for u in self.graph.nodes}
        queue: deque[str] = deque()
        for u in self.entry_nodes:
            depth[u] = 0
            queue.append(u)
        succ = self.graph.successors
        while queue:
            u = queue.popleft()
            for v in succ.get(u, ()):
                self.build_edge_visits += 1
                if depth[v] == -1:
                    depth[v] = depth[u] + 1
                    queue.append(v)
        return depth

    def _reach_counts(self) -> dict[str, int]:
        """Nodes reachable by >= 1 step, exact via condensation + bitsets."""
        g = nx.DiGraph()
        g.add_nodes_from(self.graph.nodes)
        g.add_edges_from(self.graph.pair_set)
        self.build_edge_visits += len(self.graph.pair_set)
        cond = nx.condensation(g)
        node_bit = {u: 1 << i for i, u in enumerate(self.graph.nodes)}
        comp_of = cond.graph["mapping"]
        closure: dict[int, int] = {}
        for comp in reversed(list(nx.topological_sort(cond))):
            bits = 0
            for succ in cond.successors(comp):
                bits |= closure[succ]
            for member in cond.nodes[comp]["members"]:
                bits |= node_bit[member]
            closure[comp] = bits
        pair_set = self.graph.pair_set
        counts: dict[str, int] = {}
        for u in self.graph.nodes:
            comp = comp_of[u]
            on_cycle = len(cond.nodes[comp]["members"]) > 1 or (u, u) in pair_set
            counts[u] = closure[comp].bit_count() - (0 if on_cycle else 1)
        return counts

    def features_for(self, edge: CallEdge) -> np.ndarray:
        self.extract_ops += 1
        n_edges = self.graph.n_edges
        target_in = self.in_degree[edge.target]
        return np.array(
            [
                self.out_degree[edge.source],
                self.in_degree[edge.source],
                target_in,
                self.out_degree[edge.target],
                self.fanout[(edge.source, edge.offset)],
                self.pair_offset_count[edge.pair()],
                self.depth[edge.target],
                self.reach_count[edge.target],
                self.log_nodes,
                self.log_edges,
                target_in / n_edges if n_edges else 0.0,
            ],
            dtype=np.float64,
        )


def extract_structural(
    graph: CallGraph,
    edge: CallEdge,
    entry_nodes: Iterable[str] | None = None,
    *,
    index: GraphIndex | None = None,
) -> np.ndarray:
    """The 11 structural features of one edge, in fixed order.

    Pass a prebuilt `index` when extracting many edges of the same graph.
    """
    if edge.key() not in graph.edge_keys:
        raise UsageError(f"edge {edge.key()!r} is not in graph {graph.program_id!r}")
    if index is None:
        index = GraphIndex(graph, entry_nodes)
    return index.features_for(edge)


def structural_matrix(
    graph: CallGraph,
    edges: Sequence[CallEdge] | None = None,
    entry_nodes: Iterable[str] | None = None,
    *,
    index: GraphIndex | None = None,
) -> np.ndarray:
    if index is None:
        index = GraphIndex(graph, entry_nodes)
    rows = graph.edges if edges is None else edges
    if not rows:
        return np.zeros((0, STRUCT_DIM), dtype=np.float64)
    return np.stack([extract_structural(graph, e, index=index) for e in rows])


FEATURE_FAMILIES = ("struct", "sig", "sem", "comb")


@dataclass(frozen=True)
class FeatureSet:
    """Feature matrix for one graph's edges, row i describing edge_keys[i]."""

    family: str
    edge_keys: tuple[EdgeKey, ...]
    matrix: np.ndarray
    fallback_edges: tuple[EdgeKey, ...] = ()

    def as_map(self) -> dict[EdgeKey, np.ndarray]:
        return {k: self.matrix[i] for i, k in enumerate(self.edge_keys)}


def edge_feature_matrix(
    graph: CallGraph,
    family: str,
    *,
    semantic_vectors: Mapping[EdgeKey, np.ndarray] | None = None,
    signature_dim: int = DEFAULT_SIGNATURE_DIM,
    entry_nodes: Iterable[str] | None = None,
) -> FeatureSet:
    """Assemble the per-edge matrix for one feature family.

    Families needing a semantic vector fall back to the signature feature for
    edges without one; those edges are listed in `fallback_edges`.
    """
    if family not in FEATURE_FAMILIES:
        raise UsageError(f"unknown feature family {family!r}, expected one of {FEATURE_FAMILIES}")
    sem = semantic_vectors or {}
    if sem:
        widths = {v.shape[0] for v in sem.values()}
        if len(widths) > 1:
            raise FormatError(f"semantic vectors have mixed lengths: {sorted(widths)}")
        signature_dim = widths.pop()

    keys = tuple(e.key() for e in graph.edges)
    fallbacks: list[EdgeKey] = []
    if family == "sig":
        rows = [signature_feature(e, signature_dim) for e in graph.edges]
    elif family == "struct":
        index = GraphIndex(graph, entry_nodes)
        rows = [index.features_for(e) for e in graph.edges]
    else:
        index = GraphIndex(graph, entry_nodes) if family == "comb" else None
        rows = []
        for e in graph.edges:
            vec = sem.get(e.key())
            if vec is None:
                fallbacks.append(e.key())
                vec = signature_feature(e, signature_dim)
            if family == "comb":
                vec = combine(index.features_for(e), vec)
            rows.append(vec)
    matrix = (
        np.stack(rows) if rows else np.zeros((0, 1), dtype=np.float64)
    )
    return FeatureSet(
        family=family, edge_keys=keys, matrix=matrix, fallback_edges=tuple(fallbacks)
    )


def write_feature_csv(feature_set: FeatureSet) -> str:
    """Debug/interchange dump: edge key columns then feature columns."""
    width = feature_set.matrix.shape[1] if feature_set.matrix.size else 0
    header = ["source", "target", "offset"] + [f"f{i}" for i in range(width)]
    lines = [",".join(header)]
    for key, row in zip(feature_set.edge_keys, feature_set.matrix):
        lines.append(
            ",".join([key[0], key[1], str(key[2])] + [repr(float(x)) for x in row])
        )
    return "\n".join(lines) + "\n"


def read_feature_csv(data: str, family: str = "struct") -> FeatureSet:
    lines = [ln for ln in data.splitlines() if ln.strip()]
    if not lines:
        raise FormatError("feature CSV is empty (header row is mandatory)")
    header = lines[0].split(",")
    if header[:3] != ["source", "target", "offset"]:
        raise FormatError(f"feature CSV has unexpected header: {header[:3]}")
    width = len(header) - 3
    keys: list[EdgeKey] = []
    rows: list[list[float]] = []
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != len(header):
            raise FormatError(f"feature CSV line {lineno} has {len(parts)} columns")
        keys.append((parts[0], parts[1], int(parts[2])))
        rows.append([float(x) for x in parts[3:]])
    matrix = np.asarray(rows, dtype=np.float64) if rows else np.zeros((0, width))
    return FeatureSet(family=family, edge_keys=tuple(keys), matrix=matrix)
