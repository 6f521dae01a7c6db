"""Reports: the JSON and text renderings of a command's outcome."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__
from .verdict import FAIL, FAULT, Verdict, exit_code

SCHEMA = 1


def digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


@dataclass
class Report:
    command: str
    inputs: dict  # role -> path
    flags: dict = field(default_factory=dict)
    verdicts: list = field(default_factory=list)
    warnings: list = field(default_factory=list)
    artifacts: dict = field(default_factory=dict)
    errors: list = field(default_factory=list)  # usage or load errors

    @property
    def exit_code(self) -> int:
        if self.errors:
            return 2
        return exit_code(self.verdicts)

    def summary(self) -> dict:
        out: dict = {}
        for v in self.verdicts:
            out[v.status] = out.get(v.status, 0) + 1
        return out

    def to_json(self) -> dict:
        return {
            "tool": "fescheck",
            "version": __version__,
            "schema": SCHEMA,
            "command": self.command,
            "inputs": {role: {"path": str(p), "sha256": digest(p)}
                       for role, p in self.inputs.items() if p is not None},
            "flags": self.flags,
            "verdicts": [v.to_json() for v in self.verdicts],
            "summary": self.summary(),
            "warnings": self.warnings,
            "errors": self.errors,
            "artifacts": self.artifacts,
            "exit_code": self.exit_code,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n"

    def to_text(self) -> str:
        lines = [f"fescheck {__version__} {self.command}"]
        for role, p in self.inputs.items():
            if p is not None:
                lines.append(f"  {role}: {p}")
        for v in self.verdicts:
            lines.extend(_verdict_lines(v))
        for key, val in sorted(self.artifacts.items()):
            if key == "trace":
                lines.extend(_trace_lines(val))
            else:
                lines.append(f"{key}: {val}")
        for w in self.warnings:
            lines.append(f"warning: {w}")
        for e in self.errors:
            lines.append(f"error: {e}")
        counts = ", ".join(f"{n} {k}" for k, n in sorted(self.summary().items()))
        if counts:
            lines.append(counts)
        lines.append(f"exit {self.exit_code}")
        return "\n".join(lines) + "\n"


def _state_line(d: dict) -> str:
    return ", ".join(f"{k} = {v}" for k, v in d.items())


def _verdict_lines(v: Verdict) -> list:
    lines = [f"{v.status.upper():8}{v.id} [{v.mode}] {v.message}".rstrip()]
    if v.status not in (FAIL, FAULT):
        return lines
    if v.witness is not None:
        w = v.witness.to_json()
        for key in ("state", "abstract", "instance", "next", "abstract_next", "note"):
            if key in w:
                val = _state_line(w[key]) if isinstance(w[key], dict) else w[key]
                lines.append(f"        {key}: {val}")
    if v.lasso is not None:
        lj = v.lasso.to_json()
        for name in ("stem", "cycle"):
            lines.append(f"        {name}:")
            for p in lj[name]:
                lines.append(f"          {_state_line(p['state'])}")
                lines.append(f"            -> {p['step']}")
    return lines


def _trace_lines(t: dict) -> list:
    lines = [f"trace: {t['mode']} mode, {t['scheduler']} scheduler, seed {t['seed']}"]
    for i, p in enumerate(t["positions"]):
        lines.append(f"  {i:4} {p['step']}")
    lines.append(f"  final: {_state_line(t['final'])}")
    for v in t["violations"]:
        lines.append(f"  violation: {v['kind']} at {v['position']}: {v['instance']}")
    return lines
