"""Atomic file output and run manifests."""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from pathlib import Path

import pandas as pd


def atomic_write_text(path, text: str) -> Path:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def write_csv(path, frame: pd.DataFrame) -> Path:
    """Write ``frame`` without its index; floats keep full round-trip precision."""
    return atomic_write_text(path, frame.to_csv(index=False, lineterminator="\n"))


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(out_dir, command: str, config: dict, inputs: dict, outputs: list) -> Path:
    """Record the configuration, input digests and output digests of a run."""
    out_dir = Path(out_dir)
    manifest = {
        "command": command,
        "config": config,
        "inputs": {name: {"path": str(p), "sha256": file_digest(p)} for name, p in sorted(inputs.items())},
        "outputs": {Path(p).name: file_digest(p) for p in sorted(outputs, key=lambda p: Path(p).name)},
    }
    return atomic_write_text(out_dir / "manifest.json", json.dumps(manifest, indent=2, sort_keys=True) + "\n")
