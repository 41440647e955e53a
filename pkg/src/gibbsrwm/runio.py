"""Deterministic CSV/JSON output with atomic writes and run manifests.

Floats are serialized with the shortest round-trip decimal representation
and a fixed column order, so a rerun with the same config and seed yields
byte-identical files.
"""

from __future__ import annotations

import datetime
import json
import os
import tempfile
from dataclasses import dataclass

import numpy as np

from . import __version__
from .config import config_hash


def fmt(value) -> str:
    """Shortest exact decimal for floats; plain text for ints/bools/strings."""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _atomic_write(path: str, data: str):
    dirname = os.path.dirname(os.path.abspath(path))
    os.makedirs(dirname, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=dirname, prefix=".tmp_", text=True)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(path: str, header: list[str], rows) -> str:
    lines = [",".join(header)]
    for row in rows:
        if len(row) != len(header):
            raise ValueError(f"row width {len(row)} != header width {len(header)}")
        lines.append(",".join(fmt(v) for v in row))
    _atomic_write(path, "\n".join(lines) + "\n")
    return path


def read_csv(path: str) -> tuple[list[str], list[list[str]]]:
    with open(path, encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    header = lines[0].split(",")
    return header, [ln.split(",") for ln in lines[1:]]


def write_json(path: str, obj) -> str:
    _atomic_write(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")
    return path


def write_estimates_csv(path: str, raw_config: dict, named_estimates) -> str:
    """Fixed-schema estimator rows: estimator, value, std_error, n_samples, config_hash."""
    h = config_hash(raw_config)
    rows = [[name, est.value, est.std_error, est.n_samples, h]
            for name, est in named_estimates]
    return write_csv(path, ["estimator", "value", "std_error", "n_samples",
                            "config_hash"], rows)


def _utc_now() -> str:
    return (datetime.datetime.now(datetime.timezone.utc)
            .replace(microsecond=0).isoformat().replace("+00:00", "Z"))


@dataclass
class ManifestWriter:
    """Collects output file names and writes the reproducibility manifest."""

    out_dir: str
    raw_config: dict
    seed: int

    def __post_init__(self):
        self.started = _utc_now()
        self.files: list[str] = []
        self.wall_time: float | None = None

    def path(self, name: str) -> str:
        return os.path.join(self.out_dir, name)

    def register(self, path: str) -> str:
        self.files.append(os.path.basename(path))
        return path

    def write(self, extra: dict | None = None) -> str:
        manifest = {
            "config": self.raw_config,
            "config_hash": config_hash(self.raw_config),
            "seed": self.seed,
            "code_version": __version__,
            "started_utc": self.started,
            "finished_utc": _utc_now(),
            "outputs": sorted(self.files),
        }
        if self.wall_time is not None:
            manifest["wall_time_s"] = self.wall_time
        if extra:
            manifest.update(extra)
        return write_json(self.path("manifest.json"), manifest)
