"""Experiment configuration: YAML file, overridable by CLI flags (flags win)."""

from __future__ import annotations

import copy
from pathlib import Path
from typing import Any, Mapping

import yaml

from .errors import UsageError
from .graph import DEFAULT_SAMPLE_CAP, DEFAULT_STDLIB_PREFIXES

DEFAULTS: dict[str, Any] = {
    "seed": 0,
    "jobs": 1,
    "sample_cap": DEFAULT_SAMPLE_CAP,
    "stdlib_prefixes": list(DEFAULT_STDLIB_PREFIXES),
    "feature": {
        "family": "struct",
        "sig_dim": 768,
        "embeddings": None,
    },
    "train": {
        "w_retain": 0.5,
        "learning_rate": 1e-5,
        "epochs": 2,
        "warmup_steps": 100,
        "dropout_rate": 0.25,
        "beta1": 0.9,
        "beta2": 0.999,
        "eps": 1e-8,
        "weight_decay": 0.01,
        "batch_size": 128,
        "hidden_dim": 0,
    },
    "prune": {
        "tau": 0.95,
        "mode": "prose",
    },
    "sweep": {
        "w1_grid": [0.6, 0.7, 0.8, 0.9, 0.95, 0.99],
        "tau_grid": [0.6, 0.7, 0.8, 0.9, 0.95],
    },
    "vuln": {
        "k": 100,
        "warmup_runs": 3,
        "measured_runs": 3,
    },
    "synth": {
        "programs": 8,
        "test_programs": 2,
        "app_nodes": 10,
        "dep_nodes": 150,
        "sites_per_app": 5,
        "dep_caller_fraction": 0.6,
        "dep_site_prob": 0.7,
        "hub_count": 12,
        "tail_weight": 0.05,
        "true_target_floor": 0.1,
        "imbalance": 7.6,
        "signal_strength": 1.0,
        "missed_edge_rate": 0.05,
        "stdlib_edges": True,
        "name": "synth",
    },
}


def _deep_merge(base: dict, override: Mapping) -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, Mapping) and isinstance(out.get(key), dict):
            out[key] = _deep_merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def load_config(path: str | Path | None) -> dict:
    """Defaults merged with the YAML config file, when one is given."""
    merged = copy.deepcopy(DEFAULTS)
    if path is None:
        return merged
    path = Path(path)
    if not path.exists():
        raise UsageError(f"config file not found: {path}")
    try:
        loaded = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise UsageError(f"config file {path} is not valid YAML: {exc}") from exc
    if loaded is None:
        return merged
    if not isinstance(loaded, dict):
        raise UsageError(f"config file {path} must hold a mapping at the top level")
    return _deep_merge(merged, loaded)


def apply_overrides(config: dict, overrides: Mapping[str, Any]) -> dict:
    """Apply dotted-path flag overrides (e.g. {'train.w_retain': 0.9})."""
    out = copy.deepcopy(config)
    for dotted, value in overrides.items():
        if value is None:
            continue
        node = out
        *parents, leaf = dotted.split(".")
        for part in parents:
            node = node.setdefault(part, {})
        node[leaf] = value
    return out


def parse_grid(text: str) -> list[float]:
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise UsageError(f"bad grid {text!r}: {exc}") from exc
    if not values:
        raise UsageError("grid must not be empty")
    return values
