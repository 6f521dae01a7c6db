from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Diagnostic:
    line: int
    col: int
    message: str
    severity: str = "error"
    file: str = "<input>"

    def __str__(self) -> str:
        return f"{self.file}:{self.line}:{self.col}: {self.severity}: {self.message}"


class SpecError(Exception):
    """Raised when a source text cannot be turned into a checked model.

    Carries every diagnostic collected so far; callers print them with
    ``str(d)`` in ``file:line:col: severity: message`` form.
    """

    def __init__(self, diagnostics: list[Diagnostic]):
        self.diagnostics = list(diagnostics)
        super().__init__("\n".join(str(d) for d in self.diagnostics))

    def with_file(self, file: str) -> "SpecError":
        return SpecError(
            [d if d.file != "<input>" else Diagnostic(d.line, d.col, d.message, d.severity, file)
             for d in self.diagnostics]
        )


def error_at(pos, message: str) -> Diagnostic:
    line, col = pos if pos else (0, 0)
    return Diagnostic(line, col, message)


def warning_at(pos, message: str) -> Diagnostic:
    line, col = pos if pos else (0, 0)
    return Diagnostic(line, col, message, "warning")
