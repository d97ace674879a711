"""Encoder identity metadata and the model registry.

The registry is a plain-text YAML file shipped as package data; each entry
lists the geometry of one encoder family per variant plus how its weight
archive is named and key-mapped. Toy entries have no archive and are
randomly initialized.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path

import yaml

REGISTRY_ENV_VAR = "SEGBENCH_REGISTRY"


@dataclass(frozen=True)
class EncoderSpec:
    name: str
    depth: int
    width: int
    heads: int
    native_patch: int
    native_grid: int
    variant: str
    checkpoint_ref: str | None
    has_class_token: bool = True
    name_map: str = "native"

    def __post_init__(self):
        if self.width % self.heads != 0:
            raise ValueError(f"width {self.width} not divisible by heads {self.heads}")
        if self.native_patch <= 0:
            raise ValueError("native_patch must be positive")
        if self.native_grid <= 0:
            raise ValueError("native_grid must be positive")
        if self.variant not in ("B", "L"):
            raise ValueError(f"unknown variant {self.variant!r}; expected 'B' or 'L'")


def registry_path() -> Path:
    """Location of the registry file (overridable via SEGBENCH_REGISTRY)."""
    override = os.environ.get(REGISTRY_ENV_VAR)
    if override:
        return Path(override)
    return Path(__file__).parent / "registry.yaml"


def load_registry(path: Path | None = None) -> dict:
    with open(path or registry_path()) as fh:
        return yaml.safe_load(fh)


def registered_models(path: Path | None = None) -> list[str]:
    return sorted(load_registry(path))


def get_encoder_spec(name: str, variant: str = "B", path: Path | None = None) -> EncoderSpec:
    """Resolve one (model, variant) registry entry into an EncoderSpec."""
    registry = load_registry(path)
    if name not in registry:
        raise KeyError(f"unknown encoder {name!r}; registered: {', '.join(sorted(registry))}")
    entry = registry[name]
    if variant not in entry["variants"]:
        raise KeyError(f"encoder {name!r} has no variant {variant!r}")
    geom = entry["variants"][variant]
    checkpoints = entry.get("checkpoints") or {}
    return EncoderSpec(
        name=name,
        depth=geom["depth"],
        width=geom["width"],
        heads=geom["heads"],
        native_patch=geom.get("native_patch", entry.get("native_patch")),
        native_grid=geom.get("native_grid", entry.get("native_grid")),
        variant=variant,
        checkpoint_ref=checkpoints.get(variant),
        has_class_token=entry.get("has_class_token", True),
        name_map=entry.get("name_map", "native"),
    )
