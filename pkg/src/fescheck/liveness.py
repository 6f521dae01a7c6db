"""Leads-to checking under weak fairness, with lasso counterexamples.

A run is an infinite path of the graph; its position n is the pair of
state n and the edge taken from it.  ``F ~> G`` fails when some fair run
has a position satisfying F with no position at or after it satisfying
G.  Such a run eventually stays inside the subgraph of edges falsifying
G, so the check looks for a strongly connected component of that
subgraph which can be entered through an F-edge and which satisfies
every fairness instance (some member state falsifies its fairness
predicate, or some internal edge carries the instance).
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Optional

from .explorer import TransitionGraph
from .semantics.system import EventInstance, System
from .values import EvalFault
from .verdict import FAIL, FAULT, PASS, Verdict

ANY = object()  # wildcard argument in an event atom


# --- graphs ----------------------------------------------------------------


@dataclass
class LivenessGraph:
    """Plain graph view: ``edges[k] = (src, label, dst)``, label None = stutter.

    ``fair`` lists ``(instance, fair_at)`` with ``fair_at[node]`` the truth
    of that instance's fairness predicate.  ``states`` are the objects
    handed to state predicates (system states, or anything in tests).
    """

    n: int
    init: list
    edges: list
    fair: list = field(default_factory=list)
    states: Optional[list] = None

    def __post_init__(self):
        self.out = [[] for _ in range(self.n)]
        for k, (u, _, _) in enumerate(self.edges):
            self.out[u].append(k)

    def state(self, i: int):
        return i if self.states is None else self.states[i]


def liveness_graph(graph: TransitionGraph) -> LivenessGraph:
    """Frontier states become dead ends: no run may linger in them."""
    edges = [(e.src, e.label, e.dst) for e in graph.edges
             if not (e.label is None and e.src in graph.frontier)]
    fair = []
    for f in graph.fairness:
        fair.append((f.inst, [False if i in graph.frontier else bool(f.pred(s))
                              for i, s in enumerate(graph.states)]))
    return LivenessGraph(len(graph.states), list(graph.init), edges, fair, graph.states)


# --- step formulas ------------------------------------------------------------


class StepFormula:
    def holds(self, g: LivenessGraph, k: int) -> bool:
        raise NotImplementedError

    def table(self, g: LivenessGraph) -> list:
        return [self.holds(g, k) for k in range(len(g.edges))]

    def __and__(self, other):
        return And(self, other)

    def __or__(self, other):
        return Or(self, other)

    def __invert__(self):
        return Not(self)


@dataclass(eq=False)
class Const(StepFormula):
    value: bool

    def holds(self, g, k):
        return self.value

    def table(self, g):
        return [self.value] * len(g.edges)

    def __str__(self):
        return "true" if self.value else "false"


TRUE, FALSE = Const(True), Const(False)


@dataclass(eq=False)
class StatePred(StepFormula):
    """Predicate on the source state of a position."""

    fn: Callable
    name: str = "p"

    def holds(self, g, k):
        return bool(self.fn(g.state(g.edges[k][0])))

    def table(self, g):
        at = {}
        out = []
        for u, _, _ in g.edges:
            v = at.get(u)
            if v is None:
                v = at[u] = bool(self.fn(g.state(u)))
            out.append(v)
        return out

    def __str__(self):
        return self.name


@dataclass(eq=False)
class EventAtom(StepFormula):
    """True on non-stutter edges labeled ``event(args)``; ANY matches anything.

    Fewer args than the label matches by prefix (existential closure over
    the remaining parameters).
    """

    event: str
    args: tuple = ()

    def holds(self, g, k):
        label = g.edges[k][1]
        if label is None or label.event != self.event:
            return False
        if len(self.args) > len(label.args):
            return False
        return all(a is ANY or a == b for a, b in zip(self.args, label.args))

    def __str__(self):
        from .values import format_value
        shown = ["_" if a is ANY else format_value(a) for a in self.args]
        return f"{self.event}({', '.join(shown)}{', ...' if not self.args else ''})"


@dataclass(eq=False)
class EdgePred(StepFormula):
    """Predicate on ``(source state, label, target state)``."""

    fn: Callable
    name: str = "e"

    def holds(self, g, k):
        u, label, v = g.edges[k]
        return bool(self.fn(g.state(u), label, g.state(v)))

    def __str__(self):
        return self.name


@dataclass(eq=False)
class Not(StepFormula):
    a: StepFormula

    def holds(self, g, k):
        return not self.a.holds(g, k)

    def table(self, g):
        return [not x for x in self.a.table(g)]

    def __str__(self):
        return f"~({self.a})"


@dataclass(eq=False)
class And(StepFormula):
    a: StepFormula
    b: StepFormula

    def holds(self, g, k):
        return self.a.holds(g, k) and self.b.holds(g, k)

    def table(self, g):
        return [x and y for x, y in zip(self.a.table(g), self.b.table(g))]

    def __str__(self):
        return f"({self.a} /\\ {self.b})"


@dataclass(eq=False)
class Or(StepFormula):
    a: StepFormula
    b: StepFormula

    def holds(self, g, k):
        return self.a.holds(g, k) or self.b.holds(g, k)

    def table(self, g):
        return [x or y for x, y in zip(self.a.table(g), self.b.table(g))]

    def __str__(self):
        return f"({self.a} \\/ {self.b})"


def Implies(a: StepFormula, b: StepFormula) -> StepFormula:
    return Or(Not(a), b)


def any_of(parts: list) -> StepFormula:
    out: StepFormula = FALSE
    for p in parts:
        out = p if out is FALSE else Or(out, p)
    return out


# --- lassos ------------------------------------------------------------------


@dataclass
class Lasso:
    """Edge indices of a stem and a cycle; ``f_index`` is the F-position
    counted over ``stem + cycle``."""

    stem: list
    cycle: list
    f_index: int

    def positions(self) -> list:
        return self.stem + self.cycle


@dataclass
class LassoWitness:
    """Self-contained rendering of a lasso with full states."""

    stem: list  # [(state dict, label string)]
    cycle: list
    f_index: int

    def to_json(self) -> dict:
        from .verdict import _fmt_state

        def pos(p):
            return {"state": _fmt_state(p[0]), "step": p[1]}

        return {"stem": [pos(p) for p in self.stem], "cycle": [pos(p) for p in self.cycle],
                "f_position": self.f_index}


def render_lasso(g: LivenessGraph, lasso: Lasso, system: System) -> LassoWitness:
    def pos(k):
        u, label, _ = g.edges[k]
        return (system.state_dict(g.state(u)), "stutter" if label is None else str(label))

    return LassoWitness([pos(k) for k in lasso.stem], [pos(k) for k in lasso.cycle],
                        lasso.f_index)


def _acc(g: LivenessGraph, i: int, k: int) -> bool:
    inst, fair_at = g.fair[i]
    u, label, _ = g.edges[k]
    return (not fair_at[u]) or label == inst


def validate_lasso(g: LivenessGraph, F: StepFormula, G: StepFormula, lasso: Lasso) -> bool:
    """Replay a lasso directly: path shape, fairness, F reached, G avoided."""
    pos = lasso.positions()
    if not lasso.cycle or not 0 <= lasso.f_index < len(pos):
        return False
    if g.edges[pos[0]][0] not in g.init:
        return False
    for a, b in zip(pos, pos[1:]):
        if g.edges[a][2] != g.edges[b][0]:
            return False
    if g.edges[lasso.cycle[-1]][2] != g.edges[lasso.cycle[0]][0]:
        return False
    for i in range(len(g.fair)):
        if not any(_acc(g, i, k) for k in lasso.cycle):
            return False
    if not F.holds(g, pos[lasso.f_index]):
        return False
    tail = pos[lasso.f_index:] if lasso.f_index < len(lasso.stem) else lasso.cycle
    return not any(G.holds(g, k) for k in tail)


# --- the check ---------------------------------------------------------------


@dataclass
class LeadstoResult:
    passed: bool
    lasso: Optional[Lasso] = None


def _sccs(n: int, succ: list) -> list:
    """Tarjan, iterative; returns component id per node (-1 for none)."""
    index = [-1] * n
    low = [0] * n
    on = [False] * n
    comp = [-1] * n
    stack: list = []
    counter = 0
    ncomp = 0
    for root in range(n):
        if index[root] != -1:
            continue
        work = [(root, 0)]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on[root] = True
        while work:
            v, i = work[-1]
            if i < len(succ[v]):
                work[-1] = (v, i + 1)
                w = succ[v][i]
                if index[w] == -1:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on[w] = True
                    work.append((w, 0))
                elif on[w]:
                    low[v] = min(low[v], index[w])
            else:
                work.pop()
                if work:
                    u = work[-1][0]
                    low[u] = min(low[u], low[v])
                if low[v] == index[v]:
                    while True:
                        w = stack.pop()
                        on[w] = False
                        comp[w] = ncomp
                        if w == v:
                            break
                    ncomp += 1
    return comp


def _bfs_path(g: LivenessGraph, starts: list, allowed, goal) -> Optional[list]:
    """Shortest edge path from any start to a node satisfying ``goal``."""
    parent: dict = {s: None for s in starts}
    queue = deque(starts)
    while queue:
        u = queue.popleft()
        if goal(u):
            path = []
            while parent[u] is not None:
                k = parent[u]
                path.append(k)
                u = g.edges[k][0]
            return path[::-1]
        for k in g.out[u]:
            if not allowed(k):
                continue
            v = g.edges[k][2]
            if v not in parent:
                parent[v] = k
                queue.append(v)
    return None


def check_leadsto(g: LivenessGraph, F: StepFormula, G: StepFormula) -> LeadstoResult:
    m = len(g.edges)
    Ft = F.table(g)
    Gt = G.table(g)
    keep = [not x for x in Gt]
    succ = [[g.edges[k][2] for k in g.out[u] if keep[k]] for u in range(g.n)]
    comp = _sccs(g.n, succ)

    # fair components of the G-free subgraph
    ncomp = max(comp, default=-1) + 1
    internal = [False] * ncomp
    hit = [[False] * len(g.fair) for _ in range(ncomp)]
    for u in range(g.n):
        c = comp[u]
        for i, (_, fair_at) in enumerate(g.fair):
            if not fair_at[u]:
                hit[c][i] = True
    for k in range(m):
        if not keep[k]:
            continue
        u, label, v = g.edges[k]
        if comp[u] == comp[v]:
            c = comp[u]
            internal[c] = True
            for i, (inst, _) in enumerate(g.fair):
                if label == inst:
                    hit[c][i] = True
    fair_comp = [internal[c] and all(hit[c]) for c in range(ncomp)]

    # nodes that can reach a fair component inside the G-free subgraph
    pred: list = [[] for _ in range(g.n)]
    for k in range(m):
        if keep[k]:
            pred[g.edges[k][2]].append(g.edges[k][0])
    good = [fair_comp[comp[u]] for u in range(g.n)]
    queue = deque(u for u in range(g.n) if good[u])
    while queue:
        v = queue.popleft()
        for u in pred[v]:
            if not good[u]:
                good[u] = True
                queue.append(u)

    # reachable nodes in BFS order with parent edges
    parent: dict = {s: None for s in g.init}
    order = list(dict.fromkeys(g.init))
    queue = deque(order)
    while queue:
        u = queue.popleft()
        for k in g.out[u]:
            v = g.edges[k][2]
            if v not in parent:
                parent[v] = k
                order.append(v)
                queue.append(v)

    for u in order:
        for k in g.out[u]:
            if Ft[k] and keep[k] and good[g.edges[k][2]]:
                return LeadstoResult(False, _lasso(g, parent, k, keep, comp, fair_comp))
    return LeadstoResult(True)


def _lasso(g, parent, k, keep, comp, fair_comp) -> Lasso:
    stem = []
    u = g.edges[k][0]
    while parent[u] is not None:
        e = parent[u]
        stem.append(e)
        u = g.edges[e][0]
    stem.reverse()
    f_index = len(stem)
    stem.append(k)
    v = g.edges[k][2]
    path = _bfs_path(g, [v], lambda e: keep[e], lambda x: fair_comp[comp[x]])
    stem.extend(path)
    c = g.edges[stem[-1]][2]
    cid = comp[c]

    def inside(e):
        return keep[e] and comp[g.edges[e][0]] == cid and comp[g.edges[e][2]] == cid

    cycle: list = []
    cur = c
    for i, (inst, fair_at) in enumerate(g.fair):
        if any(_acc(g, i, e) for e in cycle):
            continue
        if not fair_at[cur]:
            continue
        # nearest state falsifying the predicate, or nearest edge carrying inst
        to_node = _bfs_path(g, [cur], inside, lambda x: not fair_at[x])
        best = None
        for e in range(len(g.edges)):
            if inside(e) and g.edges[e][1] == inst:
                p = _bfs_path(g, [cur], inside, lambda x, s=g.edges[e][0]: x == s)
                if p is not None and (best is None or len(p) + 1 < len(best)):
                    best = p + [e]
        if to_node is not None and (best is None or len(to_node) <= len(best)):
            best = to_node
        cycle.extend(best)
        cur = g.edges[cycle[-1]][2] if cycle else cur
    back = _bfs_path(g, [cur], inside, lambda x: x == c) if cur != c else []
    cycle.extend(back)
    if not cycle:
        first = next(e for e in g.out[c] if inside(e))
        cycle = [first] + _bfs_path(g, [g.edges[first][2]], inside, lambda x: x == c)
    return Lasso(stem, cycle, f_index)


# --- obligations ----------------------------------------------------------------


def obligation_formulas(system: System, inst: EventInstance, mode: str) -> tuple:
    obl = StatePred(lambda s: system.clause("obligation", s, inst), f"obl {inst}")
    occurs = EventAtom(inst.event, inst.args)
    G = occurs if mode == "strict" else Or(Not(obl), occurs)
    return obl, G


def check_obligation(system: System, graph: TransitionGraph, event: str,
                     lgraph: Optional[LivenessGraph] = None) -> Verdict:
    decl = system.events[event].decl
    mode = decl.obligation.mode
    vid = f"obligation-{mode}:{event}"
    try:
        g = lgraph or liveness_graph(graph)
        failed = 0
        first = None
        for inst in system.instances(event):
            F, G = obligation_formulas(system, inst, mode)
            res = check_leadsto(g, F, G)
            if not res.passed:
                failed += 1
                if first is None:
                    first = (inst, res.lasso)
    except EvalFault as exc:
        return Verdict(vid, FAULT, "reachable", f"evaluation faulted: {exc}")
    n = len(system.instances(event))
    details = {"instances": n, "violations": failed}
    if first is None:
        msg = f"every obligation instance is discharged on all fair runs ({n} instances)"
        if graph.frontier:
            msg += f"; {len(graph.frontier)} frontier states were not expanded"
        return Verdict(vid, PASS, "reachable", msg, details=details)
    inst, lasso = first
    return Verdict(vid, FAIL, "reachable",
                   f"a fair run keeps {inst} pending forever", lasso=render_lasso(g, lasso, system),
                   details=details)


def check_obligations(system: System, graph: TransitionGraph) -> list:
    events = [e for e in system.event_names if system.events[e].decl.obligation is not None]
    if not events:
        return []
    try:
        g = liveness_graph(graph)
    except EvalFault as exc:
        return [Verdict(f"obligation-{system.events[e].decl.obligation.mode}:{e}", FAULT,
                        "reachable", f"fairness evaluation faulted: {exc}") for e in events]
    return [check_obligation(system, graph, e, g) for e in events]
