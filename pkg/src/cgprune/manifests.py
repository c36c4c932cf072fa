"""Run manifests: every pipeline stage records its config and input lineage.

A stage's config hash covers (stage name, config, input hashes), so chained
artifacts can be checked for staleness: if stage B consumed artifact A, and A
claims it was built from input X with hash h, then h must still match X's
current manifest whenever B also reads X directly.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

from .errors import IntegrityError, StalenessError
from .ioutil import read_json, write_json

MANIFEST_NAME = "run_manifest.json"
TOOL_VERSION = "0.1.0"


def config_hash(payload: object) -> str:
    canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class RunManifest:
    stage: str
    config: Mapping[str, object]
    inputs: Mapping[str, str] = field(default_factory=dict)  # label -> config hash
    seed: int | None = None
    tool_version: str = TOOL_VERSION

    @property
    def config_hash(self) -> str:
        return config_hash(
            {
                "stage": self.stage,
                "config": self.config,
                "inputs": dict(self.inputs),
                "seed": self.seed,
                "tool_version": self.tool_version,
            }
        )

    def to_json_dict(self) -> dict:
        return {
            "stage": self.stage,
            "tool_version": self.tool_version,
            "seed": self.seed,
            "config": dict(self.config),
            "inputs": dict(self.inputs),
            "config_hash": self.config_hash,
        }


def write_run_manifest(
    out_dir: Path | str,
    stage: str,
    config: Mapping[str, object],
    inputs: Mapping[str, str] | None = None,
    seed: int | None = None,
) -> RunManifest:
    manifest = RunManifest(stage=stage, config=config, inputs=dict(inputs or {}), seed=seed)
    write_json(Path(out_dir) / MANIFEST_NAME, manifest.to_json_dict())
    return manifest


def read_run_manifest(artifact_dir: Path | str) -> RunManifest:
    path = Path(artifact_dir) / MANIFEST_NAME
    if not path.exists():
        raise IntegrityError(f"no {MANIFEST_NAME} in {artifact_dir}")
    doc = read_json(path)
    manifest = RunManifest(
        stage=doc["stage"],
        config=doc["config"],
        inputs=doc.get("inputs", {}),
        seed=doc.get("seed"),
        tool_version=doc.get("tool_version", TOOL_VERSION),
    )
    if manifest.config_hash != doc.get("config_hash"):
        raise IntegrityError(
            f"manifest in {artifact_dir} was tampered with "
            f"(recorded hash {doc.get('config_hash')!r} does not match contents)"
        )
    return manifest


def check_lineage(
    consumer_label: str, upstream: RunManifest, direct: RunManifest, direct_label: str
) -> None:
    """Verify that `upstream` was built from the `direct` artifact we now see."""
    recorded = upstream.inputs.get(direct_label)
    if recorded is None:
        return
    if recorded != direct.config_hash:
        raise StalenessError(
            f"{consumer_label}: the {upstream.stage!r} artifact was built from a "
            f"different {direct_label!r} (hash {recorded[:12]}… vs current "
            f"{direct.config_hash[:12]}…); regenerate the downstream stage"
        )
