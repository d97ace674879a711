"""Append-only results store: one JSON record per line.

Line-delimited records are append-safe and diffable; a truncated or
corrupt trailing line (interrupted writer) is dropped on read with a
warning, so the matrix runner re-runs that cell.
"""

from __future__ import annotations

import json
import warnings
from pathlib import Path

from segbench.training.results import RunResult


class ResultsStore:
    def __init__(self, path: str | Path):
        self.path = Path(path)

    def append(self, result: RunResult) -> None:
        self.path.parent.mkdir(parents=True, exist_ok=True)
        line = json.dumps(result.to_record(), sort_keys=True)
        with open(self.path, "a+b") as fh:
            # a truncated final line (interrupted writer) must not swallow
            # the new record
            fh.seek(0, 2)
            if fh.tell() > 0:
                fh.seek(-1, 2)
                if fh.read(1) != b"\n":
                    fh.write(b"\n")
            fh.write(line.encode() + b"\n")
            fh.flush()

    def load_records(self) -> list[dict]:
        if not self.path.exists():
            return []
        records = []
        with open(self.path) as fh:
            for lineno, line in enumerate(fh, start=1):
                stripped = line.strip()
                if not stripped:
                    continue
                if not line.endswith("\n"):
                    warnings.warn(
                        f"{self.path}:{lineno}: dropping truncated record", stacklevel=2
                    )
                    continue
                try:
                    records.append(json.loads(stripped))
                except json.JSONDecodeError:
                    warnings.warn(
                        f"{self.path}:{lineno}: dropping corrupt record", stacklevel=2
                    )
        return records

    def load_results(self) -> list[RunResult]:
        return [RunResult.from_record(r) for r in self.load_records()]

    def completed_keys(self) -> set[tuple[str, int]]:
        return {(r["fingerprint"], r["seed"]) for r in self.load_records()}

    def has(self, fingerprint: str, seed: int) -> bool:
        return (fingerprint, seed) in self.completed_keys()
