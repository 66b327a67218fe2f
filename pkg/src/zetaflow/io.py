"""Canonical CSV/JSON output and run manifests."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import __version__


def format_value(v) -> str:
    """17 significant digits for floats; integers and strings verbatim."""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return format(v, ".17g")
    if v is None:
        return ""
    return str(v)


def csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_value(v) for v in row])
    return buf.getvalue()


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": float(obj.real), "im": float(obj.imag)}
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def json_text(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"


def sha256_text(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()


@dataclass
class RunManifest:
    subcommand: str
    config_hash: str
    version: str = __version__
    wall_time: float = 0.0
    tolerances: dict = field(default_factory=dict)
    outputs: list = field(default_factory=list)
    seed: int | None = None
    workers: int = 1
    status: str = "ok"

    def to_dict(self) -> dict:
        return {
            "subcommand": self.subcommand,
            "config_hash": self.config_hash,
            "version": self.version,
            "wall_time": self.wall_time,
            "tolerances": self.tolerances,
            "outputs": self.outputs,
            "seed": self.seed,
            "workers": self.workers,
            "status": self.status,
        }


class OutputDir:
    """Writes artifacts into one directory and records them for the manifest."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.path.mkdir(parents=True, exist_ok=True)
        self.records: list[dict] = []

    def _write(self, name: str, text: str, kind: str):
        (self.path / name).write_text(text)
        self.records.append({"file": name, "kind": kind, "sha256": sha256_text(text)})

    def csv(self, name: str, header: Sequence[str], rows: Iterable[Sequence]) -> str:
        text = csv_text(header, rows)
        self._write(name, text, "csv")
        return text

    def json(self, name: str, obj) -> str:
        text = json_text(obj)
        self._write(name, text, "json")
        return text

    def manifest(self, manifest: RunManifest):
        manifest.outputs = list(self.records)
        (self.path / "manifest.json").write_text(json_text(manifest.to_dict()))
