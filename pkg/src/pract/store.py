"""Flat-file persistence: JSONL record stores and a versioned principle store."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Iterable

from .core import (
    PrincipleSet,
    Reflection,
    Trajectory,
    deserialize_principles,
    deserialize_reflection,
    deserialize_trajectory,
    serialize_principles,
    serialize_reflection,
    serialize_trajectory,
)


def write_trajectories(path: str | Path, ts: Iterable[Trajectory]) -> None:
    _write_lines(path, (serialize_trajectory(t) for t in ts))


def read_trajectories(path: str | Path) -> list[Trajectory]:
    return [deserialize_trajectory(line) for line in _read_lines(path)]


def write_reflections(path: str | Path, rs: Iterable[Reflection]) -> None:
    _write_lines(path, (serialize_reflection(r) for r in rs))


def read_reflections(path: str | Path) -> list[Reflection]:
    return [deserialize_reflection(line) for line in _read_lines(path)]


def write_jsonl(path: str | Path, records: Iterable[dict[str, Any]]) -> None:
    _write_lines(path, (json.dumps(r, ensure_ascii=False, sort_keys=True) for r in records))


def _write_lines(path: str | Path, lines: Iterable[str]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="\n") as f:
        for line in lines:
            f.write(line + "\n")


def _read_lines(path: str | Path) -> list[str]:
    return [ln for ln in Path(path).read_text(encoding="utf-8").splitlines() if ln.strip()]


class PrincipleStore:
    """One file per version: ``<root>/v0003.json``."""

    def __init__(self, root: str | Path):
        self.root = Path(root)

    def path(self, version: int) -> Path:
        return self.root / f"v{version:04d}.json"

    def save(self, p: PrincipleSet) -> Path:
        self.root.mkdir(parents=True, exist_ok=True)
        path = self.path(p.version)
        path.write_text(serialize_principles(p), encoding="utf-8")
        return path

    def load(self, version: int) -> PrincipleSet:
        return deserialize_principles(self.path(version).read_text(encoding="utf-8"))

    def versions(self) -> list[int]:
        return sorted(int(p.stem[1:]) for p in self.root.glob("v*.json"))

    def latest(self) -> PrincipleSet:
        return self.load(self.versions()[-1])

    def lineage(self, version: int) -> list[int]:
        """Versions from ``version`` back to its root; raises if the chain is not strictly decreasing."""
        chain = [version]
        p = self.load(version)
        while p.parent_version is not None:
            if p.parent_version >= chain[-1]:
                raise ValueError(f"version chain not strictly increasing at v{chain[-1]}")
            chain.append(p.parent_version)
            p = self.load(p.parent_version)
        return chain


def load_principles(path: str | Path) -> PrincipleSet:
    return deserialize_principles(Path(path).read_text(encoding="utf-8"))
