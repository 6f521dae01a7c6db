"""Shipped example specifications and bounds."""

from importlib import resources
from pathlib import Path


def path(name: str) -> Path:
    return Path(str(resources.files(__name__).joinpath(name)))


def read(name: str) -> str:
    return path(name).read_text(encoding="utf-8")
