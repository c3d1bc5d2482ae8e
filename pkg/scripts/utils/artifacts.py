"""
Run artifacts: CSV series, JSON documents and the run manifest.

Every file is written to a temporary sibling and renamed into place; the
manifest, listing each file with its size and checksum, is written last, so
a directory with a manifest is a complete run.
"""

import csv
import hashlib
import io
import json
import logging
import os
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Iterable, Optional, Sequence

from pydantic import BaseModel

from . import __version__
from .dynamics import Observables, SpinorField

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"
OBSERVABLE_COLUMNS = ["t", "norm", "x_mean", "p_mean", "sigma_ph", "transmission", "reality_residual"]


def format_number(value: Optional[float]) -> str:
    """Shortest round-trip repr; locale-independent."""
    if value is None:
        return "nan"
    return repr(float(value))


def canonical_json(payload: Any) -> str:
    return json.dumps(payload, sort_keys=True, separators=(",", ":"))


def config_hash(payload: Any) -> str:
    return hashlib.sha256(canonical_json(payload).encode("utf-8")).hexdigest()


def sha256_file(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def ensure_directory(path: Path) -> Path:
    path.mkdir(parents=True, exist_ok=True)
    return path


def atomic_write(path: Path, text: str) -> None:
    tmp = path.with_name(f".{path.name}.tmp")
    try:
        with open(tmp, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        os.replace(tmp, path)
    finally:
        if tmp.exists():
            tmp.unlink()


def observable_rows(series: Iterable[Observables]) -> list[list[str]]:
    return [
        [
            format_number(obs.t),
            format_number(obs.norm),
            format_number(obs.x_mean),
            format_number(obs.p_mean),
            format_number(obs.sigma_ph),
            format_number(obs.transmission),
            format_number(obs.reality_residual),
        ]
        for obs in series
    ]


def snapshot_header(n_comp: int) -> list[str]:
    header = ["t", "x", "rho"]
    for c in range(1, n_comp + 1):
        header += [f"re{c}", f"im{c}"]
    return header


def snapshot_rows(snapshots: Sequence[tuple[float, SpinorField]]) -> list[list[str]]:
    rows = []
    for t, state in snapshots:
        density = state.density()
        for j, x in enumerate(state.grid.x):
            row = [format_number(t), format_number(x), format_number(density[j])]
            for amplitude in state.amplitudes[:, j]:
                row += [format_number(amplitude.real), format_number(amplitude.imag)]
            rows.append(row)
    return rows


class FileEntry(BaseModel):
    path: str
    size: int
    sha256: str


class RunManifest(BaseModel):
    tool_version: str
    config_hash: str
    started_at: str
    finished_at: str
    files: list[FileEntry]


class ArtifactWriter:
    """Writes the files of one run into its own directory and records them."""

    def __init__(self, directory: Path, config_payload: Any):
        self.directory = ensure_directory(Path(directory))
        # a manifest marks a complete run; an earlier one no longer describes this directory
        (self.directory / MANIFEST_NAME).unlink(missing_ok=True)
        self.config_payload = config_payload
        self.started_at = datetime.now(timezone.utc).isoformat()
        self._written: list[Path] = []

    def _record(self, name: str, text: str) -> Path:
        path = self.directory / name
        atomic_write(path, text)
        self._written.append(path)
        logger.debug(f"Wrote {path}")
        return path

    def write_json(self, name: str, payload: Any) -> Path:
        return self._record(name, json.dumps(payload, indent=2, sort_keys=True) + "\n")

    def write_model(self, name: str, model: BaseModel) -> Path:
        return self._record(name, model.model_dump_json(indent=2) + "\n")

    def write_csv(self, name: str, header: list[str], rows: Iterable[list[str]]) -> Path:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
        return self._record(name, buffer.getvalue())

    def finalize(self) -> RunManifest:
        manifest = RunManifest(
            tool_version=__version__,
            config_hash=config_hash(self.config_payload),
            started_at=self.started_at,
            finished_at=datetime.now(timezone.utc).isoformat(),
            files=[
                FileEntry(path=p.name, size=p.stat().st_size, sha256=sha256_file(p))
                for p in sorted(self._written)
            ],
        )
        atomic_write(self.directory / MANIFEST_NAME, manifest.model_dump_json(indent=2) + "\n")
        return manifest
