"""Seeded synthetic corpus: static call graphs with planted dynamic subgraphs.

Each program is built from call sites: every site has one structurally-true
target plus extra false candidates, mimicking imprecise static dispatch. False
targets favor a pool of equally-popular "hub" methods (plus a thin uniform
tail), so target in-degree carries learnable signal; `hub_count` and
`tail_weight` control how much the true and false edges overlap.
`signal_strength` is the probability an edge's label follows its structural
role; the remainder is relabeled from the class prior, which keeps the
prune/retain ratio near `imbalance` at every signal level.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, asdict

import numpy as np

from .errors import UsageError
from .graph import CallEdge, CallGraph, GraphKind, Scope

STDLIB_URIS = (
    "java/util/ArrayList.add(Ljava/lang/Object;)Z",
    "java/io/PrintStream.println(Ljava/lang/String;)V",
    "jdk/internal/misc/Unsafe.getReference(Ljava/lang/Object;J)Ljava/lang/Object;",
)


@dataclass(frozen=True)
class SynthConfig:
    programs: int = 8
    test_programs: int = 2
    app_nodes: int = 10
    dep_nodes: int = 150
    sites_per_app: int = 5
    dep_caller_fraction: float = 0.6
    dep_site_prob: float = 0.7
    hub_count: int = 12
    tail_weight: float = 0.05
    true_target_floor: float = 0.1
    imbalance: float = 7.6
    signal_strength: float = 1.0
    missed_edge_rate: float = 0.05
    stdlib_edges: bool = True
    seed: int = 0
    name: str = "synth"

    def __post_init__(self) -> None:
        if self.imbalance < 1.0:
            raise UsageError(f"imbalance must be >= 1, got {self.imbalance}")
        if not 0.0 <= self.signal_strength <= 1.0:
            raise UsageError("signal_strength must be in [0, 1]")
        if not 0.0 <= self.missed_edge_rate:
            raise UsageError("missed_edge_rate must be non-negative")
        if self.programs < 1:
            raise UsageError("programs must be positive")
        if not 0 <= self.test_programs < self.programs:
            raise UsageError("test_programs must leave at least one training program")
        if self.app_nodes < 1 or self.dep_nodes < 2:
            raise UsageError("need at least one application and two dependency nodes")
        if not 0.0 <= self.true_target_floor < 1.0:
            raise UsageError("true_target_floor must be in [0, 1)")
        if not 1 <= self.hub_count <= self.dep_nodes:
            raise UsageError("hub_count must be in [1, dep_nodes]")
        if self.tail_weight < 0:
            raise UsageError("tail_weight must be non-negative")


def _app_uri(i: int) -> str:
    return f"app/core/App{i}.handleRequest{i}(Ljava/lang/String;)V"

def _dep_uri(i: int) -> str:
    return f"lib/util/Util{i}.applyTransform{i}(I)V"


def generate_program(
    config: SynthConfig, program_id: str, rng: np.random.Generator
) -> tuple[CallGraph, CallGraph]:
    """One (static, dynamic) graph pair with planted labels."""
    apps = [_app_uri(i) for i in range(config.app_nodes)]
    deps = [_dep_uri(i) for i in range(config.dep_nodes)]
    nodes: dict[str, Scope] = {u: Scope.APPLICATION for u in apps}
    nodes.update({u: Scope.DEPENDENCY for u in deps})

    # two-tier popularity: hubs share the bulk of the false-edge mass equally
    # (so a caller's distinct targets rarely collide), a thin tail overlaps the
    # in-degree range of true targets
    popularity = np.full(config.dep_nodes, config.tail_weight)
    popularity[: config.hub_count] = 1.0
    popularity /= popularity.sum()

    # (caller, n_sites) for every node that makes calls
    callers: list[tuple[str, int]] = [(a, config.sites_per_app) for a in apps]
    n_dep_callers = int(config.dep_caller_fraction * config.dep_nodes)
    for j in range(n_dep_callers):
        if rng.random() < config.dep_site_prob:
            callers.append((deps[j], 1 + int(rng.random() < 0.5)))

    frac, whole = math.modf(config.imbalance)
    # true targets skip the most-popular prefix: real calls rarely hit the
    # mega-popular sinks that imprecise dispatch favors
    true_floor = int(config.true_target_floor * config.dep_nodes)
    true_edges: list[CallEdge] = []
    false_edges: list[CallEdge] = []
    used_targets: dict[str, set[str]] = {}
    for caller, n_sites in callers:
        used = used_targets.setdefault(caller, {caller})
        offset = 0
        for _ in range(n_sites):
            true_target = deps[int(rng.integers(true_floor, config.dep_nodes))]
            if true_target in used:
                continue
            used.add(true_target)
            true_edges.append(CallEdge(caller, true_target, offset))
            n_false = int(whole) + (1 if rng.random() < frac else 0)
            placed = 0
            for _attempt in range(20 * n_false):
                if placed == n_false:
                    break
                cand = deps[int(rng.choice(config.dep_nodes, p=popularity))]
                if cand not in used:
                    used.add(cand)
                    false_edges.append(CallEdge(caller, cand, offset))
                    placed += 1
            if placed < n_false:
                # popularity draws keep colliding; fill from the unused pool
                fresh = [d for d in deps if d not in used]
                for cand in fresh[: n_false - placed]:
                    used.add(cand)
                    false_edges.append(CallEdge(caller, cand, offset))
            offset += 1

    # label = structural role with prob signal_strength, else drawn from the prior
    n_true, n_false = len(true_edges), len(false_edges)
    prior = n_true / (n_true + n_false)
    retained_pairs: set[tuple[str, str]] = set()
    static_edges = []
    for edge, role_true in [(e, True) for e in true_edges] + [(e, False) for e in false_edges]:
        static_edges.append(edge)
        if rng.random() < config.signal_strength:
            label_retain = role_true
        else:
            label_retain = rng.random() < prior
        if label_retain:
            retained_pairs.add(edge.pair())

    if config.stdlib_edges:
        for uri in STDLIB_URIS:
            nodes[uri] = Scope.DEPENDENCY
        for i, app in enumerate(apps):
            static_edges.append(
                CallEdge(app, STDLIB_URIS[i % len(STDLIB_URIS)], 1000 + i)
            )

    # dynamic-only pairs the static analysis "missed"; they depress recall
    dynamic_pairs = sorted(retained_pairs)
    n_missed = round(config.missed_edge_rate * len(retained_pairs))
    static_pairs = {e.pair() for e in static_edges}
    added = 0
    while added < n_missed:
        u = deps[int(rng.integers(config.dep_nodes))]
        v = deps[int(rng.integers(config.dep_nodes))]
        if u != v and (u, v) not in static_pairs and (u, v) not in retained_pairs:
            retained_pairs.add((u, v))
            dynamic_pairs.append((u, v))
            added += 1

    static = CallGraph(
        program_id=program_id,
        kind=GraphKind.STATIC_0CFA,
        nodes=nodes,
        edges=tuple(static_edges),
        generation_time_s=round(0.8 + 0.004 * len(static_edges), 3),
    )
    dyn_nodes = {u: nodes[u] for pair in dynamic_pairs for u in pair}
    dynamic = CallGraph(
        program_id=program_id,
        kind=GraphKind.DYNAMIC,
        nodes=dyn_nodes,
        edges=tuple(CallEdge(u, v, 0) for u, v in dynamic_pairs),
    )
    return static, dynamic


@dataclass(frozen=True)
class SynthCorpus:
    config: SynthConfig
    programs: dict[str, tuple[CallGraph, CallGraph]]
    train_programs: tuple[str, ...]
    test_programs: tuple[str, ...]

    def manifest_dict(self) -> dict:
        return {
            "name": self.config.name,
            "train": list(self.train_programs),
            "test": list(self.test_programs),
            "programs": sorted(self.programs),
            "generator": asdict(self.config),
        }


def generate_corpus(config: SynthConfig) -> SynthCorpus:
    """Deterministic corpus; program i gets its own child seed."""
    programs: dict[str, tuple[CallGraph, CallGraph]] = {}
    ids = [f"{config.name}{i:03d}" for i in range(config.programs)]
    for i, pid in enumerate(ids):
        rng = np.random.default_rng((config.seed, i))
        programs[pid] = generate_program(config, pid, rng)
    n_train = config.programs - config.test_programs
    return SynthCorpus(
        config=config,
        programs=programs,
        train_programs=tuple(ids[:n_train]),
        test_programs=tuple(ids[n_train:]),
    )
