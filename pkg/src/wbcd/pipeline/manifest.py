"""Dataset manifest: per-episode inventory, normalization stats, training defaults.

Training itself is out of scope; the manifest freezes everything a training
job needs to reproduce a run — episode checksums, normalization statistics,
and the hyperparameter defaults — in one schema-versioned JSON file.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import List, Optional

from .archive import read_episode
from .stats import EmptyDataset, compute_norm_stats

MANIFEST_SCHEMA = "wbcd-dataset-manifest/1"
ARCHIVE_SUFFIX = ".wbep"

# Training defaults recorded as metadata for downstream consumers.
TRAINING_DEFAULTS = {
    "learning_rate": 1e-5,
    "chunk_size": 30,
    "hidden_dim": 512,
    "feedforward_dim": 3200,
    "batch_size": 4,
    "epochs": 8000,
    "kl_weight": 10,
}

# A complete collection run for one task is one hundred demonstrations.
EXPECTED_EPISODE_COUNT = 100


class ChecksumMismatch(ValueError):
    """An archive's bytes no longer match the checksum in the manifest."""


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            digest.update(block)
    return digest.hexdigest()


def find_archives(dataset_dir) -> List[Path]:
    return sorted(Path(dataset_dir).glob(f"*{ARCHIVE_SUFFIX}"))


def export_manifest(
    dataset_dir,
    out_path=None,
    *,
    expected_episode_count: int = EXPECTED_EPISODE_COUNT,
    training: Optional[dict] = None,
) -> Path:
    """Scan a dataset directory and write its manifest; returns the path."""
    dataset = Path(dataset_dir)
    paths = find_archives(dataset)
    if not paths:
        raise EmptyDataset(f"no {ARCHIVE_SUFFIX} archives in {dataset}")

    entries: List[dict] = []

    def episodes():
        for p in paths:
            episode = read_episode(p)
            entries.append(
                {
                    "path": p.name,
                    "steps": episode.steps,
                    "task": episode.meta.task,
                    "operator_mode": episode.meta.operator_mode,
                    "config_hash": episode.meta.config_hash,
                    "sha256": _sha256(p),
                }
            )
            yield episode

    stats = compute_norm_stats(episodes())
    manifest = {
        "schema": MANIFEST_SCHEMA,
        "episode_count": len(entries),
        "expected_episode_count": expected_episode_count,
        "complete": len(entries) >= expected_episode_count,
        "total_steps": sum(e["steps"] for e in entries),
        "episodes": entries,
        "norm_stats": stats.as_dict(),
        "training": dict(TRAINING_DEFAULTS if training is None else training),
    }
    out = Path(out_path) if out_path is not None else dataset / "manifest.json"
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return out


def validate_manifest(manifest_path, dataset_dir=None) -> dict:
    """Re-hash every listed archive; raises ChecksumMismatch on any change."""
    mpath = Path(manifest_path)
    manifest = json.loads(mpath.read_text())
    if manifest.get("schema") != MANIFEST_SCHEMA:
        raise ValueError(f"unsupported manifest schema {manifest.get('schema')!r}")
    base = Path(dataset_dir) if dataset_dir is not None else mpath.parent
    for entry in manifest.get("episodes", []):
        path = base / entry["path"]
        if not path.exists():
            raise ChecksumMismatch(f"archive missing: {path}")
        actual = _sha256(path)
        if actual != entry["sha256"]:
            raise ChecksumMismatch(f"{path}: sha256 {actual} != manifest {entry['sha256']}")
    return manifest
