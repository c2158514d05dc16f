"""Append-only result store for search runs.

Layout:

    <root>/<input-hash>/manifest.json
    <root>/<input-hash>/best.sass
    <root>/<input-hash>/<seed>/candidate.sass
    <root>/<input-hash>/<seed>/history.jsonl
    <root>/<input-hash>/<seed>/verdict.json

All writes are write-temp-then-rename, so a crash never leaves a torn
file.  Manifest entries accumulate across runs; the best pointer advances
only to a strictly faster candidate that passed its tests.
"""
from __future__ import annotations

import hashlib
import json
import os
import tempfile
from pathlib import Path

from .sasstext import normalize_newlines


def input_hash(text: str) -> str:
    return hashlib.sha256(normalize_newlines(text).encode()).hexdigest()


def _atomic_write(path: Path, data: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


class ResultStore:
    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def run_dir(self, digest: str) -> Path:
        return self.root / digest[:16]

    def write_chain(
        self,
        digest: str,
        seed: int,
        candidate_text: str,
        history_jsonl: str,
        verdict: dict,
    ) -> Path:
        chain = self.run_dir(digest) / str(seed)
        _atomic_write(chain / "candidate.sass", candidate_text)
        _atomic_write(chain / "history.jsonl", history_jsonl)
        _atomic_write(chain / "verdict.json", json.dumps(verdict, sort_keys=True, indent=2) + "\n")
        return chain

    def update_manifest(
        self,
        digest: str,
        *,
        baseline: float,
        unit: str,
        entries: list[dict],
    ) -> dict:
        """Merge this run's chain entries into the manifest and advance the
        best pointer if a strictly faster passing candidate appeared."""
        run_dir = self.run_dir(digest)
        manifest_path = run_dir / "manifest.json"
        manifest = {
            "input_sha256": digest,
            "unit": unit,
            "baseline": baseline,
            "entries": [],
            "best": None,
        }
        if manifest_path.exists():
            manifest = json.loads(manifest_path.read_text())

        by_seed = {e["seed"]: e for e in manifest.get("entries", [])}
        for entry in entries:
            by_seed[entry["seed"]] = entry
        manifest["entries"] = [by_seed[s] for s in sorted(by_seed)]
        manifest["unit"] = unit
        manifest["baseline"] = baseline

        passing = sorted(
            (e for e in manifest["entries"] if e.get("passed")),
            key=lambda e: (e["time"], e["seed"]),
        )
        current = manifest.get("best")
        challenger = passing[0] if passing else None
        if challenger is not None and (current is None or challenger["time"] < current["time"]):
            candidate = run_dir / str(challenger["seed"]) / "candidate.sass"
            if candidate.exists():
                _atomic_write(run_dir / "best.sass", candidate.read_text())
                manifest["best"] = {
                    "seed": challenger["seed"],
                    "time": challenger["time"],
                    "path": "best.sass",
                }

        _atomic_write(manifest_path, json.dumps(manifest, sort_keys=True, indent=2) + "\n")
        return manifest
