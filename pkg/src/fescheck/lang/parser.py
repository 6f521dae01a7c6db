"""Recursive-descent parser for ``.fes`` sources.

Every failure surfaces as :class:`SpecError`; no other exception escapes
the public entry points for any input string.
"""

from __future__ import annotations

from typing import Optional

from . import ast as A
from . import types as T
from .diagnostics import Diagnostic, SpecError, error_at
from .lexer import Token, tokenize

CMP_OPS = {
    "=": "eq", "/=": "neq", "#": "neq", "<": "lt", "<=": "le", ">": "gt", ">=": "ge",
    "\\in": "in", "\\notin": "notin", "\\subseteq": "subseteq",
}
SETOPS = {"\\union": "union", "\\inter": "inter", "\\setminus": "setminus"}
SYSTEM_CLAUSES = ("sets", "constants", "assumption", "variables", "invariant", "initial")
EVENT_CLAUSES = ("fairness", "permission", "prohibition", "right", "obligation")
NON_ACTION = "primed variable in non-action context"


class Parser:
    def __init__(self, text: str):
        self.toks: list[Token] = tokenize(text)
        self.i = 0

    # token helpers -----------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def at(self, text: str) -> bool:
        t = self.tok
        return t.kind in ("sym", "kw") and t.text == text

    def advance(self) -> Token:
        t = self.tok
        if t.kind != "eof":
            self.i += 1
        return t

    def accept(self, text: str) -> Optional[Token]:
        if self.at(text):
            return self.advance()
        return None

    def expect(self, text: str) -> Token:
        if not self.at(text):
            self.fail(f"expected '{text}' but found {self.describe(self.tok)}")
        return self.advance()

    def ident(self) -> Token:
        if self.tok.kind != "ident":
            self.fail(f"expected identifier but found {self.describe(self.tok)}")
        return self.advance()

    def fail(self, message: str, tok: Token | None = None):
        t = tok or self.tok
        raise SpecError([Diagnostic(t.line, t.col, message)])

    @staticmethod
    def describe(t: Token) -> str:
        if t.kind == "eof":
            return "end of input"
        if t.kind == "primed":
            return f"'{t.text}''"
        return f"'{t.text}'"

    # expressions --------------------------------------------------------

    def expr(self) -> A.Expr:
        if self.at("forall") or self.at("exists"):
            return self.quant()
        return self.equiv()

    def quant(self) -> A.Expr:
        t = self.advance()
        binders = self.binders()
        self.expect(":")
        body = self.expr()
        return A.Quant(t.text, binders, body, pos=t.pos)

    def binders(self) -> tuple:
        out = [self.binder()]
        while self.accept(","):
            out.append(self.binder())
        return tuple(out)

    def binder(self) -> A.Binder:
        name = self.ident()
        self.expect("\\in")
        dom = self.maplet()
        return A.Binder(name.text, dom, pos=name.pos)

    def equiv(self) -> A.Expr:
        left = self.implies()
        while self.at("<=>"):
            t = self.advance()
            left = A.Binary("equiv", left, self.implies(), pos=t.pos)
        return left

    def implies(self) -> A.Expr:
        left = self.disj()
        if self.at("=>"):
            t = self.advance()
            return A.Binary("implies", left, self.implies_rhs(), pos=t.pos)
        return left

    def implies_rhs(self) -> A.Expr:
        if self.at("forall") or self.at("exists"):
            return self.quant()
        return self.implies()

    def disj(self) -> A.Expr:
        left = self.conj()
        while self.at("\\/"):
            t = self.advance()
            left = A.Binary("or", left, self.conj(), pos=t.pos)
        return left

    def conj(self) -> A.Expr:
        left = self.negation()
        while self.at("/\\"):
            t = self.advance()
            left = A.Binary("and", left, self.negation(), pos=t.pos)
        return left

    def negation(self) -> A.Expr:
        if self.at("~"):
            t = self.advance()
            return A.Unary("not", self.negation(), pos=t.pos)
        if self.at("forall") or self.at("exists"):
            return self.quant()
        return self.comparison()

    def comparison(self) -> A.Expr:
        left = self.maplet()
        t = self.tok
        if t.kind == "sym" and t.text in CMP_OPS:
            self.advance()
            right = self.maplet()
            return A.Binary(CMP_OPS[t.text], left, right, pos=t.pos)
        return left

    def maplet(self) -> A.Expr:
        left = self.setop()
        if self.at("|->"):
            t = self.advance()
            return A.Pair(left, self.maplet(), pos=t.pos)
        return left

    def setop(self) -> A.Expr:
        left = self.times()
        while self.tok.kind == "sym" and self.tok.text in SETOPS:
            t = self.advance()
            left = A.Binary(SETOPS[t.text], left, self.times(), pos=t.pos)
        return left

    def times(self) -> A.Expr:
        left = self.override()
        while self.at("\\times"):
            t = self.advance()
            left = A.Binary("times", left, self.override(), pos=t.pos)
        return left

    def override(self) -> A.Expr:
        left = self.additive()
        while self.at("(+)"):
            t = self.advance()
            left = A.Binary("override", left, self.additive(), pos=t.pos)
        return left

    def additive(self) -> A.Expr:
        left = self.multiplicative()
        while self.at("+") or self.at("-"):
            t = self.advance()
            op = "add" if t.text == "+" else "sub"
            left = A.Binary(op, left, self.multiplicative(), pos=t.pos)
        return left

    def multiplicative(self) -> A.Expr:
        left = self.unary()
        while self.at("*") or self.at("/"):
            t = self.advance()
            op = "mul" if t.text == "*" else "div"
            left = A.Binary(op, left, self.unary(), pos=t.pos)
        return left

    def unary(self) -> A.Expr:
        if self.at("-"):
            t = self.advance()
            return A.Unary("neg", self.unary(), pos=t.pos)
        if self.at("~"):
            t = self.advance()
            return A.Unary("not", self.unary(), pos=t.pos)
        if self.at("forall") or self.at("exists"):
            return self.quant()
        return self.postfix()

    def postfix(self) -> A.Expr:
        e = self.primary()
        while self.at("("):
            t = self.advance()
            args = [self.expr()]
            while self.accept(","):
                args.append(self.expr())
            self.expect(")")
            e = A.Apply(e, tuple(args), pos=t.pos)
        return e

    def primary(self) -> A.Expr:
        t = self.tok
        if t.kind == "number":
            self.advance()
            return A.NumLit(t.value, pos=t.pos)
        if t.kind == "ident":
            self.advance()
            return A.Name(t.text, False, pos=t.pos)
        if t.kind == "primed":
            self.advance()
            return A.Name(t.text, True, pos=t.pos)
        if t.kind == "kw":
            if t.text in ("true", "false"):
                self.advance()
                return A.BoolLit(t.text == "true", pos=t.pos)
            if t.text in ("RAT", "NAT", "BOOL"):
                self.advance()
                return A.Name(t.text, False, pos=t.pos)
            if t.text in ("dom", "ran", "card"):
                self.advance()
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return A.Builtin(t.text, arg, pos=t.pos)
            if t.text == "SUM":
                self.advance()
                self.expect("{")
                body = self.expr()
                self.expect(":")
                return self.comprehension_tail("sum", body, t)
        if t.kind == "sym":
            if t.text == "(":
                self.advance()
                first = self.expr()
                if self.accept(","):
                    second = self.expr()
                    self.expect(")")
                    return A.Pair(first, second, pos=t.pos)
                self.expect(")")
                return first
            if t.text == "{":
                self.advance()
                if self.accept("}"):
                    return A.SetDisplay((), pos=t.pos)
                first = self.expr()
                if self.accept(":"):
                    return self.comprehension_tail("set", first, t)
                elems = [first]
                while self.accept(","):
                    elems.append(self.expr())
                self.expect("}")
                return A.SetDisplay(tuple(elems), pos=t.pos)
            if t.text == "[":
                self.advance()
                dom = self.setop()
                self.expect("->")
                ran = self.setop()
                self.expect("]")
                return A.FunSpace(dom, ran, pos=t.pos)
        self.fail(f"unexpected {self.describe(t)} in expression")

    def comprehension_tail(self, kind: str, body: A.Expr, start: Token) -> A.Expr:
        binders = self.binders()
        cond = None
        if self.accept("|"):
            cond = self.expr()
        self.expect("}")
        return A.Comprehension(kind, body, binders, cond, pos=start.pos)

    # types ---------------------------------------------------------------

    def type_expr(self) -> T.Type:
        t = self.type_atom()
        while self.accept("*"):
            t = T.PairT(t, self.type_atom())
        return t

    def type_atom(self) -> T.Type:
        t = self.tok
        if self.accept("BOOL"):
            return T.BOOL
        if self.accept("RAT"):
            return T.RAT
        if self.accept("NAT"):
            return T.NAT
        if self.accept("SET"):
            self.expect("of")
            return T.SetT(self.type_atom())
        if self.accept("MAP"):
            key = self.type_atom()
            self.expect("to")
            return T.MapT(key, self.type_atom())
        if self.accept("("):
            inner = self.type_expr()
            self.expect(")")
            return inner
        if t.kind == "ident":
            self.advance()
            return T.AtomT(t.text)
        self.fail(f"expected a type but found {self.describe(t)}")

    # declarations ----------------------------------------------------------

    def decls(self) -> list[A.Decl]:
        out = [self.decl()]
        while True:
            if self.at(","):
                self.advance()
                out.append(self.decl())
            elif self.tok.kind == "ident" and self.peek().text == ":":
                out.append(self.decl())
            else:
                return out

    def decl(self) -> A.Decl:
        name = self.ident()
        self.expect(":")
        return A.Decl(name.text, self.type_expr(), pos=name.pos)

    def set_decls(self) -> list[A.SetDecl]:
        out = [self.set_decl()]
        while self.accept(",") or self.tok.kind == "ident":
            out.append(self.set_decl())
        return out

    def set_decl(self) -> A.SetDecl:
        name = self.ident()
        atoms = None
        if self.accept("="):
            self.expect("{")
            items = []
            if not self.at("}"):
                items.append(self.ident().text)
                while self.accept(","):
                    items.append(self.ident().text)
            self.expect("}")
            atoms = tuple(items)
        return A.SetDecl(name.text, atoms, pos=name.pos)

    def system(self) -> A.SystemSpec:
        start = self.expect("system")
        name = self.ident().text
        fields: dict = {}
        events: list[A.EventDecl] = []
        while not self.at("end"):
            t = self.tok
            if t.kind == "kw" and t.text in SYSTEM_CLAUSES:
                if t.text in fields:
                    self.fail(f"duplicate '{t.text}' clause")
                self.advance()
                if t.text == "sets":
                    fields["sets"] = tuple(self.set_decls())
                elif t.text in ("constants", "variables"):
                    fields[t.text] = tuple(self.decls())
                else:
                    fields[t.text] = self.expr()
            elif self.at("event"):
                events.append(self.event())
            else:
                self.fail(f"unexpected {self.describe(t)} in system '{name}'")
        self.expect("end")
        return A.SystemSpec(name, events=tuple(events), pos=start.pos, **fields)

    def event(self) -> A.EventDecl:
        start = self.expect("event")
        name = self.ident().text
        params: list[A.Decl] = []
        if self.accept("("):
            if not self.at(")"):
                params = self.decls()
            self.expect(")")
        self.expect("=")
        ba = self.expr()
        clauses: dict = {}
        while self.tok.kind == "kw" and self.tok.text in EVENT_CLAUSES:
            t = self.advance()
            if t.text in clauses:
                self.fail(f"duplicate '{t.text}' clause in event '{name}'", t)
            if t.text == "obligation":
                mode = self.tok
                if mode.kind != "ident" or mode.text not in ("strict", "weak"):
                    self.fail("expected 'strict' or 'weak' after 'obligation'")
                self.advance()
                clauses["obligation"] = A.Obligation(self.expr(), mode.text)
            else:
                clauses[t.text] = self.expr()
        return A.EventDecl(name, tuple(params), ba, pos=start.pos, **clauses)

    def arrow_entries(self) -> list[tuple]:
        out = []
        while self.tok.kind == "ident":
            left = self.advance()
            self.expect("->")
            right = self.ident()
            out.append((left, right))
            self.accept(",")
        return out

    def refinement(self) -> A.RefinementSpec:
        start = self.expect("refinement")
        name = self.ident().text
        seen: dict = {}
        refines: list[tuple] = []
        witnesses: dict = {}
        while not self.at("end"):
            t = self.tok
            if t.kind != "kw" or t.text not in ("abstract", "concrete", "gluing", "refines", "rightwitness"):
                self.fail(f"unexpected {self.describe(t)} in refinement '{name}'")
            if t.text in seen:
                self.fail(f"duplicate '{t.text}' clause")
            self.advance()
            if t.text in ("abstract", "concrete"):
                seen[t.text] = self.ident().text
            elif t.text == "gluing":
                seen[t.text] = self.expr()
            elif t.text == "refines":
                seen[t.text] = True
                for left, right in self.arrow_entries():
                    if any(c == left.text for c, _ in refines):
                        raise SpecError([error_at(left.pos, f"event '{left.text}' refines twice")])
                    refines.append((left.text, right.text))
            else:
                seen[t.text] = True
                for left, right in self.arrow_entries():
                    witnesses.setdefault(left.text, []).append(right.text)
        self.expect("end")
        for key in ("abstract", "concrete"):
            if key not in seen:
                self.fail(f"refinement '{name}' lacks an '{key}' clause", start)
        return A.RefinementSpec(
            name,
            seen["abstract"],
            seen["concrete"],
            seen.get("gluing", A.BoolLit(True)),
            tuple(refines),
            tuple((k, tuple(v)) for k, v in witnesses.items()),
            pos=start.pos,
        )

    def units(self) -> list:
        out = []
        while self.tok.kind != "eof":
            if self.at("system"):
                out.append(self.system())
            elif self.at("refinement"):
                out.append(self.refinement())
            else:
                self.fail(f"expected 'system' or 'refinement' but found {self.describe(self.tok)}")
        return out


def _guard(fn, *args):
    try:
        return fn(*args)
    except SpecError:
        raise
    except RecursionError:
        raise SpecError([Diagnostic(0, 0, "input nested too deeply")]) from None


def parse_expr(text: str) -> A.Expr:
    def run():
        p = Parser(text)
        e = p.expr()
        if p.tok.kind != "eof":
            p.fail(f"unexpected {p.describe(p.tok)} after expression")
        return e

    return _guard(run)


def parse_type(text: str) -> T.Type:
    def run():
        p = Parser(text)
        t = p.type_expr()
        if p.tok.kind != "eof":
            p.fail(f"unexpected {p.describe(p.tok)} after type")
        return t

    return _guard(run)


def parse_units(text: str) -> list:
    """All systems and refinements of a source file, structurally checked."""

    def run():
        units = Parser(text).units()
        diags: list[Diagnostic] = []
        for u in units:
            if isinstance(u, A.SystemSpec):
                diags += check_system_structure(u)
            else:
                diags += _primes_in(u.gluing)
        if diags:
            raise SpecError(diags)
        return units

    return _guard(run)


def parse_system(text: str) -> A.SystemSpec:
    units = parse_units(text)
    systems = [u for u in units if isinstance(u, A.SystemSpec)]
    if len(systems) != 1:
        raise SpecError([Diagnostic(1, 1, f"expected exactly one system, found {len(systems)}")])
    return systems[0]


def parse_refinement(text: str, abstract: A.SystemSpec | None = None,
                     concrete: A.SystemSpec | None = None) -> A.RefinementSpec:
    units = parse_units(text)
    refs = [u for u in units if isinstance(u, A.RefinementSpec)]
    if len(refs) != 1:
        raise SpecError([Diagnostic(1, 1, f"expected exactly one refinement, found {len(refs)}")])
    ref = refs[0]
    if abstract is not None and concrete is not None:
        diags = check_refinement_structure(ref, abstract, concrete)
        if diags:
            raise SpecError(diags)
    return ref


# structural checks -------------------------------------------------------------


def _primes_in(e: A.Expr) -> list[Diagnostic]:
    return [error_at(n.pos, f"{NON_ACTION}: {n.id}'")
            for n in A.walk(e) if isinstance(n, A.Name) and n.primed]


def _dups(items, what: str) -> list[Diagnostic]:
    seen: set = set()
    out = []
    for name, pos in items:
        if name in seen:
            out.append(error_at(pos, f"duplicate {what} '{name}'"))
        seen.add(name)
    return out


def check_system_structure(s: A.SystemSpec) -> list[Diagnostic]:
    diags: list[Diagnostic] = []
    diags += _dups([(d.name, d.pos) for d in s.sets], "set")
    diags += _dups([(a, d.pos) for d in s.sets for a in (d.atoms or ())], "atom")
    diags += _dups([(d.name, d.pos) for d in s.constants], "constant")
    diags += _dups([(d.name, d.pos) for d in s.variables], "variable")
    diags += _dups([(e.name, e.pos) for e in s.events], "event")
    for e in s.events:
        diags += _dups([(p.name, p.pos) for p in e.params], f"parameter of event '{e.name}'")
    for pred in (s.assumption, s.invariant, s.initial):
        diags += _primes_in(pred)
    for e in s.events:
        for pred in (e.fairness, e.permission, e.prohibition, e.right):
            if pred is not None:
                diags += _primes_in(pred)
        if e.obligation is not None:
            diags += _primes_in(e.obligation.pred)
    return diags


def check_refinement_structure(ref: A.RefinementSpec, abstract: A.SystemSpec,
                               concrete: A.SystemSpec) -> list[Diagnostic]:
    diags: list[Diagnostic] = []
    pos = ref.pos
    if ref.abstract != abstract.name:
        diags.append(error_at(pos, f"abstract system is '{abstract.name}', refinement names '{ref.abstract}'"))
    if ref.concrete != concrete.name:
        diags.append(error_at(pos, f"concrete system is '{concrete.name}', refinement names '{ref.concrete}'"))
    shared = sorted(set(abstract.var_names) & set(concrete.var_names))
    if shared:
        diags.append(error_at(pos, "abstract and concrete variables must be disjoint; shared: "
                              + ", ".join(shared)))
    abs_events = {e.name: e for e in abstract.events}
    conc_events = {e.name: e for e in concrete.events}
    for c, a in ref.refines:
        if c not in conc_events:
            diags.append(error_at(pos, f"unknown concrete event '{c}' in refines map"))
            continue
        if a not in abs_events:
            diags.append(error_at(pos, f"unknown abstract event '{a}' in refines map"))
            continue
        if not _has_prefix(conc_events[c], abs_events[a]):
            diags.append(error_at(conc_events[c].pos,
                                  f"event '{c}' must start with the parameters of '{a}' "
                                  f"({_sig(abs_events[a])})"))
    for a, cs in ref.right_witnesses:
        if a not in abs_events:
            diags.append(error_at(pos, f"unknown abstract event '{a}' in rightwitness map"))
            continue
        for c in cs:
            if c not in conc_events:
                diags.append(error_at(pos, f"unknown concrete event '{c}' in rightwitness map"))
            elif not _has_prefix(conc_events[c], abs_events[a]):
                diags.append(error_at(conc_events[c].pos,
                                      f"witness event '{c}' must start with the parameters of '{a}'"))
    return diags


def _has_prefix(er: A.EventDecl, ea: A.EventDecl) -> bool:
    if len(er.params) < len(ea.params):
        return False
    return all(p.name == q.name and T.unify(p.type, q.type) == q.type
               for p, q in zip(er.params, ea.params))


def _sig(e: A.EventDecl) -> str:
    return ", ".join(f"{p.name}: {p.type}" for p in e.params)
