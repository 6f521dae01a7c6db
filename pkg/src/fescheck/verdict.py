"""Verdicts and witnesses shared by all checkers."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .values import format_value

PASS, FAIL, FAULT, SKIPPED = "pass", "fail", "fault", "skipped"


@dataclass
class Witness:
    """A concrete counterexample step: a state, an instance, a next state.

    States are ``{variable: value}`` dicts so a witness can be replayed
    against a freshly loaded system.  ``abstract`` holds the glued
    abstract state for refinement verdicts.
    """

    state: dict
    instance: Optional[object] = None  # EventInstance
    next: Optional[dict] = None
    abstract: Optional[dict] = None
    abstract_next: Optional[dict] = None
    note: str = ""

    def to_json(self) -> dict:
        out: dict = {"state": _fmt_state(self.state)}
        if self.instance is not None:
            out["instance"] = str(self.instance)
        if self.next is not None:
            out["next"] = _fmt_state(self.next)
        if self.abstract is not None:
            out["abstract"] = _fmt_state(self.abstract)
        if self.abstract_next is not None:
            out["abstract_next"] = _fmt_state(self.abstract_next)
        if self.note:
            out["note"] = self.note
        return out


@dataclass
class Verdict:
    id: str
    status: str
    mode: str
    message: str = ""
    witness: Optional[Witness] = None
    lasso: Optional[object] = None  # liveness.Lasso
    details: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.status in (PASS, SKIPPED)

    def to_json(self) -> dict:
        out: dict = {"id": self.id, "status": self.status, "mode": self.mode}
        if self.message:
            out["message"] = self.message
        if self.witness is not None:
            out["witness"] = self.witness.to_json()
        if self.lasso is not None:
            out["lasso"] = self.lasso.to_json()
        if self.details:
            out["details"] = self.details
        return out


def _fmt_state(d: dict) -> dict:
    return {k: format_value(v) for k, v in d.items()}


def exit_code(verdicts: list) -> int:
    """0 if nothing failed, 1 on failures, 2 when any check faulted."""
    if any(v.status == FAULT for v in verdicts):
        return 2
    if any(v.status == FAIL for v in verdicts):
        return 1
    return 0
