"""Bundled example corpora."""

from __future__ import annotations

from importlib import resources
from pathlib import Path

from .frontend import SmaliProgram, load_program
from .oracle import TRUTH_FILE, GroundTruth

EXAMPLE_CLASS = "Lu/Bjg;"
EXAMPLE_METHOD = "Bjg"


def data_dir(name: str) -> Path:
    return Path(str(resources.files("smalideob") / "data" / name))


def example_dir() -> Path:
    """Directory holding the three-class example app and its ground truth."""
    return data_dir("example")


def load_example() -> tuple[SmaliProgram, GroundTruth]:
    root = example_dir()
    return load_program([root]), GroundTruth.read(root / TRUTH_FILE)
