"""Reading specification, bounds and refinement files from disk."""

from __future__ import annotations

from pathlib import Path
from typing import Optional

from .lang.bounds import Bounds, parse_bounds
from .lang.diagnostics import SpecError
from .lang.parser import parse_refinement, parse_system
from .lang.typecheck import TypedSystem, typecheck
from .semantics.system import System


def _read(path) -> str:
    return Path(path).read_text(encoding="utf-8")


def load_bounds(path) -> Bounds:
    try:
        return parse_bounds(_read(path)).with_file(str(path))
    except SpecError as exc:
        raise exc.with_file(str(path)) from None


def load_typed(spec_path, bounds_path=None, explosion_limit: Optional[int] = None) -> TypedSystem:
    bounds = load_bounds(bounds_path) if bounds_path is not None else Bounds()
    try:
        spec = parse_system(_read(spec_path))
        return typecheck(spec, bounds, file=str(spec_path), explosion_limit=explosion_limit)
    except SpecError as exc:
        raise exc.with_file(str(spec_path)) from None


def load_system(spec_path, bounds_path=None, explosion_limit: Optional[int] = None) -> System:
    return System(load_typed(spec_path, bounds_path, explosion_limit))


def load_refinement(path, abstract: System, concrete: System):
    try:
        return parse_refinement(_read(path), abstract.spec, concrete.spec)
    except SpecError as exc:
        raise exc.with_file(str(path)) from None
