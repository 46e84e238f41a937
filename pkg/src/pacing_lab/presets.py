"""Bundled scenario presets, one per experiment row of the lab.

Every preset runs its test controller against the variable-step baseline on
the shared high-gain plant (heavy traffic, small budget). Constants live in
the JSON files, not here.
"""

from __future__ import annotations

from importlib import resources
from pathlib import Path

PRESET_NAMES = ("bhc_standard", "aof", "alu", "rsdm", "ssdm")


def preset_path(name: str) -> Path:
    """Filesystem path of a bundled preset; accepts a `_vs_baseline` suffix alias."""
    base = name[: -len("_vs_baseline")] if name.endswith("_vs_baseline") else name
    if base not in PRESET_NAMES:
        raise KeyError(f"unknown preset {name!r}; available: {', '.join(PRESET_NAMES)}")
    return Path(str(resources.files("pacing_lab") / "presets" / f"{base}.json"))
