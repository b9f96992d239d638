"""Shipped scripted scenarios (suite, seed principles, role scripts, run config)."""

from __future__ import annotations

from importlib import resources
from pathlib import Path


def scenario_dir(name: str) -> Path:
    path = Path(str(resources.files("pract") / "scenarios" / name))
    if not (path / "config.json").is_file():
        raise KeyError(f"no scenario {name!r}")
    return path
