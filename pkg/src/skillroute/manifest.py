"""Per-stage completion markers so an interrupted run can resume."""
from __future__ import annotations

import json
import os
from pathlib import Path
from typing import Optional

from .errors import ConfigError

MANIFEST_NAME = "manifest.json"
OUTPUT_DIRS = ("profiles", "assignments", "transcripts", "answers", "stats")


class RunManifest:
    """``manifest.json`` in a run directory.

    ``config_hash`` pins the preprocessing configuration; opening a manifest
    with a different hash refuses to resume.  Each stage may also record its
    own hash (inference does, since routing flags change between runs).
    """

    def __init__(self, out_dir, config_hash: str, data: Optional[dict] = None):
        self.out_dir = Path(out_dir)
        self.config_hash = config_hash
        self.data = data or {"run_id": config_hash[:12], "config_hash": config_hash, "stages": {}}

    @property
    def path(self) -> Path:
        return self.out_dir / MANIFEST_NAME

    @classmethod
    def open(cls, out_dir, config_hash: str) -> "RunManifest":
        out_dir = Path(out_dir)
        for sub in OUTPUT_DIRS:
            (out_dir / sub).mkdir(parents=True, exist_ok=True)
        path = out_dir / MANIFEST_NAME
        if path.exists():
            data = json.loads(path.read_text("utf-8"))
            if data.get("config_hash") != config_hash:
                raise ConfigError(
                    f"{path}: config hash mismatch; this directory was produced with a different "
                    "model pool or keyword settings. Use a fresh output directory.")
            return cls(out_dir, config_hash, data)
        manifest = cls(out_dir, config_hash)
        manifest.save()
        return manifest

    @classmethod
    def load(cls, out_dir) -> Optional["RunManifest"]:
        path = Path(out_dir) / MANIFEST_NAME
        if not path.exists():
            return None
        data = json.loads(path.read_text("utf-8"))
        return cls(out_dir, data["config_hash"], data)

    def is_done(self, stage: str, stage_hash: Optional[str] = None) -> bool:
        entry = self.data["stages"].get(stage)
        if not entry or not entry.get("done"):
            return False
        if stage_hash is not None and entry.get("hash") != stage_hash:
            return False
        return all((self.out_dir / a).exists() for a in entry.get("artifacts", []))

    def mark_done(self, stage: str, artifacts=(), stage_hash: Optional[str] = None) -> None:
        entry = {"done": True, "artifacts": [str(a) for a in artifacts]}
        if stage_hash is not None:
            entry["hash"] = stage_hash
        self.data["stages"][stage] = entry
        self.save()

    def save(self) -> None:
        tmp = self.path.with_suffix(".json.tmp")
        tmp.write_text(json.dumps(self.data, indent=2, sort_keys=True) + "\n", "utf-8")
        os.replace(tmp, self.path)
