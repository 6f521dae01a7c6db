"""Pretty-printer producing text that parses back to the same tree.

Compound expressions are fully parenthesised so that no precedence
knowledge is needed to read the output back.
"""

from __future__ import annotations

from . import ast as A
from ..values import Rat


def _num(v: Rat) -> str:
    if v.denominator == 1:
        return str(v.numerator)
    # the parser only produces finite decimals
    for digits in range(1, 61):
        scaled = v * 10**digits
        if scaled.denominator == 1:
            whole, frac = divmod(scaled.numerator, 10**digits)
            return f"{whole}.{frac:0{digits}d}"
    return f"({v.numerator} / {v.denominator})"


def _binders(bs) -> str:
    return ", ".join(f"{b.name} \\in {pretty(b.domain)}" for b in bs)


def pretty(e: A.Expr) -> str:
    if isinstance(e, A.BoolLit):
        return "true" if e.value else "false"
    if isinstance(e, A.NumLit):
        return _num(e.value)
    if isinstance(e, A.Name):
        return e.id + ("'" if e.primed else "")
    if isinstance(e, A.Unary):
        op = "~" if e.op == "not" else "-"
        return f"({op}{pretty(e.operand)})"
    if isinstance(e, A.Binary):
        return f"({pretty(e.left)} {A.BINARY_OPS[e.op]} {pretty(e.right)})"
    if isinstance(e, A.Pair):
        return f"({pretty(e.left)} |-> {pretty(e.right)})"
    if isinstance(e, A.SetDisplay):
        return "{" + ", ".join(pretty(x) for x in e.elems) + "}"
    if isinstance(e, A.Comprehension):
        cond = "" if e.cond is None else f" | {pretty(e.cond)}"
        head = "SUM" if e.kind == "sum" else ""
        return f"{head}{{{pretty(e.expr)} : {_binders(e.binders)}{cond}}}"
    if isinstance(e, A.Quant):
        return f"({e.kind} {_binders(e.binders)} : {pretty(e.body)})"
    if isinstance(e, A.Apply):
        fn = pretty(e.fn)
        if not isinstance(e.fn, A.Name):
            fn = f"({fn})"
        return f"{fn}({', '.join(pretty(a) for a in e.args)})"
    if isinstance(e, A.FunSpace):
        return f"[{pretty(e.dom)} -> {pretty(e.ran)}]"
    if isinstance(e, A.Builtin):
        return f"{e.name}({pretty(e.arg)})"
    raise TypeError(f"not an expression: {e!r}")


def _decls(ds) -> str:
    return ", ".join(f"{d.name}: {d.type}" for d in ds)


def pretty_system(s: A.SystemSpec) -> str:
    out = [f"system {s.name}"]
    if s.sets:
        parts = []
        for d in s.sets:
            parts.append(d.name if d.atoms is None else f"{d.name} = {{{', '.join(d.atoms)}}}")
        out.append("  sets " + ", ".join(parts))
    if s.constants:
        out.append("  constants " + _decls(s.constants))
    out.append("  assumption " + pretty(s.assumption))
    if s.variables:
        out.append("  variables " + _decls(s.variables))
    out.append("  invariant " + pretty(s.invariant))
    out.append("  initial " + pretty(s.initial))
    for e in s.events:
        params = f"({_decls(e.params)})" if e.params else ""
        out.append(f"  event {e.name}{params} =")
        out.append("    " + pretty(e.ba))
        out.append("  fairness " + pretty(e.fairness))
        for clause in ("permission", "prohibition", "right"):
            pred = getattr(e, clause)
            if pred is not None:
                out.append(f"  {clause} {pretty(pred)}")
        if e.obligation is not None:
            out.append(f"  obligation {e.obligation.mode} {pretty(e.obligation.pred)}")
    out.append("end")
    return "\n".join(out) + "\n"


def pretty_refinement(r: A.RefinementSpec) -> str:
    out = [f"refinement {r.name}", f"  abstract {r.abstract}", f"  concrete {r.concrete}",
           "  gluing " + pretty(r.gluing)]
    if r.refines:
        out.append("  refines " + ", ".join(f"{c} -> {a}" for c, a in r.refines))
    if r.right_witnesses:
        pairs = [f"{a} -> {c}" for a, cs in r.right_witnesses for c in cs]
        out.append("  rightwitness " + ", ".join(pairs))
    out.append("end")
    return "\n".join(out) + "\n"
