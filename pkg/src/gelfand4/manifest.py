"""Deterministic CSV/JSON emission and run manifests.

CSV float cells use ``repr``, the shortest decimal that round-trips in
binary64, so re-running an identical config reproduces the bytes
exactly.  Manifests carry wall time and are therefore the one emitted
file excluded from byte-for-byte comparisons.
"""

from __future__ import annotations

import csv
import dataclasses
import enum
import hashlib
import json
import subprocess
from pathlib import Path

import numpy as np

from . import __version__


def fmt_cell(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    if x is None:
        return ""
    return str(x)


def write_csv(path: Path, header, rows) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt_cell(x) for x in row])
    return path


def to_jsonable(obj):
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: to_jsonable(getattr(obj, f.name))
                for f in dataclasses.fields(obj)}
    if isinstance(obj, enum.Enum):
        return obj.value
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return [to_jsonable(x) for x in obj.tolist()]
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(x) for x in obj]
    if isinstance(obj, Path):
        return str(obj)
    if isinstance(obj, float) and not np.isfinite(obj):
        return repr(obj)
    return obj


def write_json(path: Path, obj) -> Path:
    path = Path(path)
    with open(path, "w") as fh:
        json.dump(to_jsonable(obj), fh, indent=2, sort_keys=True, allow_nan=True)
        fh.write("\n")
    return path


def sha256_path(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def version_string() -> str:
    """git-describe when available, otherwise the package version."""
    here = Path(__file__).resolve().parent
    try:
        out = subprocess.run(
            ["git", "-C", str(here), "describe", "--always", "--dirty", "--tags"],
            capture_output=True, text=True, timeout=5)
        if out.returncode == 0 and out.stdout.strip():
            return f"{__version__}+g{out.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return __version__


@dataclasses.dataclass
class RunManifest:
    """What one CLI run did: config echo, outcomes, file checksums."""

    command: str
    config: dict
    version: str
    wall_time_s: float = 0.0
    operations: list = dataclasses.field(default_factory=list)
    outputs: list = dataclasses.field(default_factory=list)
    passed: bool = True

    def record(self, name: str, ok: bool, detail="", required: bool = True):
        self.operations.append({
            "name": name,
            "status": "ok" if ok else "failed",
            "required": required,
            "detail": detail,
        })
        if required and not ok:
            self.passed = False

    def attach(self, path: Path):
        path = Path(path)
        self.outputs.append({
            "path": str(path),
            "sha256": sha256_path(path),
            "bytes": path.stat().st_size,
        })

    def write(self, path: Path) -> Path:
        return write_json(path, self)
