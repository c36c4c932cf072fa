"""Precision/recall/F-beta scoring, macro averaging, grid and runtime reports.

Edge sets are compared as (source, target) pairs, offset-insensitive, with the
dynamic call graph as ground truth.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Collection, Mapping, Sequence

from .errors import UsageError
from .graph import CallGraph
from .pruning import PrunedGraph

Pair = tuple[str, str]

DEGENERATE_EMPTY_STATIC = "empty_static"
DEGENERATE_EMPTY_DYNAMIC = "empty_dynamic"


def precision_recall(
    static_pairs: Collection[Pair], dynamic_pairs: Collection[Pair]
) -> tuple[float, float]:
    """Precision |S∩D|/|S| and recall |S∩D|/|D|; empty sets score 1.0."""
    s = set(static_pairs)
    d = set(dynamic_pairs)
    overlap = len(s & d)
    p = overlap / len(s) if s else 1.0
    r = overlap / len(d) if d else 1.0
    return p, r


def f_beta(p: float, r: float, beta: float) -> float:
    """(1+b^2)pr / (b^2 p + r); zero when the denominator vanishes."""
    if beta <= 0:
        raise UsageError(f"beta must be positive, got {beta}")
    den = beta * beta * p + r
    if den == 0.0:
        return 0.0
    return (1.0 + beta * beta) * p * r / den


@dataclass(frozen=True)
class ProgramScore:
    program_id: str
    precision: float
    recall: float
    f1: float
    f2: float
    n_static: int
    n_dynamic: int
    n_overlap: int
    degenerate: tuple[str, ...] = ()

    def to_json_dict(self) -> dict:
        return {
            "program": self.program_id,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "f2": self.f2,
            "n_static": self.n_static,
            "n_dynamic": self.n_dynamic,
            "n_overlap": self.n_overlap,
            "degenerate": list(self.degenerate),
        }


def score_pair_sets(
    program_id: str, static_pairs: Collection[Pair], dynamic_pairs: Collection[Pair]
) -> ProgramScore:
    s = set(static_pairs)
    d = set(dynamic_pairs)
    p, r = precision_recall(s, d)
    flags = []
    if not s:
        flags.append(DEGENERATE_EMPTY_STATIC)
    if not d:
        flags.append(DEGENERATE_EMPTY_DYNAMIC)
    return ProgramScore(
        program_id=program_id,
        precision=p,
        recall=r,
        f1=f_beta(p, r, 1.0),
        f2=f_beta(p, r, 2.0),
        n_static=len(s),
        n_dynamic=len(d),
        n_overlap=len(s & d),
        degenerate=tuple(flags),
    )


def evaluate_program(
    pruned: PrunedGraph | CallGraph, dynamic_g: CallGraph
) -> ProgramScore:
    """Score one (pruned) static graph against its dynamic oracle."""
    if isinstance(pruned, PrunedGraph):
        program_id = pruned.program_id
        pairs: Collection[Pair] = pruned.kept_pair_set
    else:
        program_id = pruned.program_id
        pairs = pruned.pair_set
    if program_id != dynamic_g.program_id:
        raise UsageError(
            f"program mismatch: static={program_id!r} dynamic={dynamic_g.program_id!r}"
        )
    return score_pair_sets(program_id, pairs, dynamic_g.pair_set)


@dataclass(frozen=True)
class EvalReport:
    """Per-program scores and their unweighted macro means.

    F-scores are averaged as per-program values, not recomputed from the
    macro precision/recall.
    """

    scores: tuple[ProgramScore, ...]
    macro_precision: float
    macro_recall: float
    macro_f1: float
    macro_f2: float
    config: Mapping[str, object] = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        return {
            "config": dict(self.config),
            "macro": {
                "precision": self.macro_precision,
                "recall": self.macro_recall,
                "f1": self.macro_f1,
                "f2": self.macro_f2,
            },
            "programs": [s.to_json_dict() for s in self.scores],
        }

    def to_csv(self) -> str:
        lines = ["program,precision,recall,f1,f2,n_static,n_dynamic,n_overlap,degenerate"]
        for s in self.scores:
            lines.append(
                f"{s.program_id},{s.precision!r},{s.recall!r},{s.f1!r},{s.f2!r},"
                f"{s.n_static},{s.n_dynamic},{s.n_overlap},{'|'.join(s.degenerate)}"
            )
        lines.append(
            f"macro,{self.macro_precision!r},{self.macro_recall!r},"
            f"{self.macro_f1!r},{self.macro_f2!r},,,,"
        )
        return "\n".join(lines) + "\n"


def macro_average(
    scores: Sequence[ProgramScore], config: Mapping[str, object] | None = None
) -> EvalReport:
    if not scores:
        raise UsageError("macro average over an empty score list")
    n = len(scores)
    return EvalReport(
        scores=tuple(scores),
        macro_precision=sum(s.precision for s in scores) / n,
        macro_recall=sum(s.recall for s in scores) / n,
        macro_f1=sum(s.f1 for s in scores) / n,
        macro_f2=sum(s.f2 for s in scores) / n,
        config=dict(config or {}),
    )


@dataclass(frozen=True)
class GridCell:
    w_retain: float
    tau: float
    report: EvalReport


def grid_rows(cells: Sequence[GridCell]) -> list[tuple[float, float, float, float, float, float]]:
    return [
        (c.w_retain, c.tau, c.report.macro_precision, c.report.macro_recall,
         c.report.macro_f1, c.report.macro_f2)
        for c in cells
    ]


def grid_csv(cells: Sequence[GridCell]) -> str:
    lines = ["w1,tau,P,R,F1,F2"]
    for w1, tau, p, r, f1, f2 in grid_rows(cells):
        lines.append(f"{w1!r},{tau!r},{p!r},{r!r},{f1!r},{f2!r}")
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class ProgramTiming:
    program_id: str
    generation_s: float
    feature_s: float
    inference_s: float

    def __post_init__(self) -> None:
        for name in ("generation_s", "feature_s", "inference_s"):
            if getattr(self, name) < 0:
                raise UsageError(f"{name} must be non-negative")

    @property
    def total_s(self) -> float:
        return self.generation_s + self.feature_s + self.inference_s


def _mean_std(values: Sequence[float]) -> tuple[float, float]:
    n = len(values)
    mean = sum(values) / n
    var = sum((v - mean) ** 2 for v in values) / n
    return mean, math.sqrt(var)


def format_mean_std(mean: float, std: float, digits: int = 1) -> str:
    return f"{mean:.{digits}f}±{std:.{digits}f}"


@dataclass(frozen=True)
class RuntimeReport:
    timings: tuple[ProgramTiming, ...]
    mean: Mapping[str, float]
    std: Mapping[str, float]

    _COLUMNS = ("gen_s", "feat_s", "infer_s", "total_s")

    def summary(self) -> dict[str, str]:
        return {c: format_mean_std(self.mean[c], self.std[c]) for c in self._COLUMNS}

    def to_csv(self) -> str:
        lines = ["program,gen_s,feat_s,infer_s,total_s"]
        for t in self.timings:
            lines.append(
                f"{t.program_id},{t.generation_s!r},{t.feature_s!r},"
                f"{t.inference_s!r},{t.total_s!r}"
            )
        lines.append(
            "mean," + ",".join(repr(self.mean[c]) for c in self._COLUMNS)
        )
        lines.append(
            "std," + ",".join(repr(self.std[c]) for c in self._COLUMNS)
        )
        return "\n".join(lines) + "\n"


def runtime_report(timings: Sequence[ProgramTiming]) -> RuntimeReport:
    """Corpus means and population standard deviations per timing column."""
    if not timings:
        raise UsageError("runtime report over an empty timing list")
    columns = {
        "gen_s": [t.generation_s for t in timings],
        "feat_s": [t.feature_s for t in timings],
        "infer_s": [t.inference_s for t in timings],
        "total_s": [t.total_s for t in timings],
    }
    stats = {name: _mean_std(vals) for name, vals in columns.items()}
    return RuntimeReport(
        timings=tuple(timings),
        mean={name: m for name, (m, _) in stats.items()},
        std={name: s for name, (_, s) in stats.items()},
    )


def dump_eval_report(report: EvalReport) -> str:
    return json.dumps(report.to_json_dict(), indent=1, sort_keys=False)
