"""Reachable transition graph with stutter loops and fairness registry.

States whose values leave the declared carriers (a rate of 3/2 when the
rational domain is {0..3}, say) are legal states of the system, but
expanding them would make the graph unbounded.  They are kept in the
graph as *frontier* states: transitions into them are checked, but they
are not expanded and only carry their stutter loop.  Safety checks do
not use them as source states and liveness checks treat them as dead
ends, so failures stay genuine while a pass comes with a warning naming
the number of frontier states.
"""

from __future__ import annotations

import json
import os
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Optional

from .semantics.system import EventInstance, System
from .values import EvalFault, format_value

DEFAULT_STATE_LIMIT = 200_000


def state_limit_from_env() -> int:
    return int(os.environ.get("FESCHECK_STATE_LIMIT", DEFAULT_STATE_LIMIT))


class StateLimitError(Exception):
    """The reachable graph exceeded the state limit; no partial result."""


class ExploreFault(EvalFault):
    def __init__(self, message: str, state: tuple, event: Optional[str] = None):
        super().__init__(message)
        self.state = state
        self.event = event


@dataclass
class FairnessInstance:
    inst: EventInstance
    pred: Callable[[tuple], bool]


@dataclass(frozen=True)
class Edge:
    src: int
    label: Optional[EventInstance]  # None is the stutter step
    dst: int

    @property
    def stutter(self) -> bool:
        return self.label is None


@dataclass
class TransitionGraph:
    system: System
    states: list
    index: dict
    init: list
    edges: list
    out: list  # state index -> list of edge indices
    frontier: set = field(default_factory=set)
    fairness: list = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.states)

    def successors_of(self, i: int) -> list:
        """Non-stutter ``(instance, target index)`` pairs of state ``i``."""
        return [(self.edges[k].label, self.edges[k].dst) for k in self.out[i]
                if self.edges[k].label is not None]

    def to_json(self) -> dict:
        sysm = self.system
        states = [{v: format_value(x) for v, x in zip(sysm.var_names, s)} for s in self.states]
        edges = []
        for e in self.edges:
            item = {"src": e.src, "dst": e.dst}
            if e.label is None:
                item["event"] = None
                item["args"] = []
            else:
                item["event"] = e.label.event
                item["args"] = [format_value(a) for a in e.label.args]
            edges.append(item)
        return {
            "system": sysm.name,
            "variables": list(sysm.var_names),
            "states": states,
            "init": list(self.init),
            "frontier": sorted(self.frontier),
            "edges": edges,
            "fairness": [str(f.inst) for f in self.fairness],
        }

    def to_dot(self, stutter: bool = False) -> str:
        sysm = self.system
        lines = [f'digraph "{sysm.name}" {{', "  node [shape=box, fontname=monospace];"]
        for i, s in enumerate(self.states):
            label = "\\n".join(f"{v} = {format_value(x)}" for v, x in zip(sysm.var_names, s))
            attrs = [f'label="{_esc(label)}"']
            if i in self.init:
                attrs.append("penwidth=2")
            if i in self.frontier:
                attrs.append("style=dashed")
            lines.append(f"  s{i} [{', '.join(attrs)}];")
        for e in self.edges:
            if e.label is None and not stutter:
                continue
            text = "stutter" if e.label is None else str(e.label)
            lines.append(f'  s{e.src} -> s{e.dst} [label="{_esc(text)}"];')
        lines.append("}")
        return "\n".join(lines) + "\n"


def _esc(s: str) -> str:
    return s.replace("\\n", "\x00").replace("\\", "\\\\").replace('"', '\\"').replace("\x00", "\\n")


def fairness_registry(system: System) -> list:
    out = []
    for inst in system.fair_instances():
        out.append(FairnessInstance(inst, lambda s, i=inst: system.clause("fairness", s, i)))
    return out


def build_graph(system: System, max_states: Optional[int] = None,
                events: Optional[list] = None, init: Optional[list] = None) -> TransitionGraph:
    """Breadth-first closure of the initial states.

    ``events`` restricts exploration to some events and ``init`` replaces
    the initial states; both exist for focused experiments and tests.
    """
    limit = state_limit_from_env() if max_states is None else max_states
    names = list(system.event_names) if events is None else list(events)
    starts = system.initial_states() if init is None else list(dict.fromkeys(init))
    states: list = []
    index: dict = {}
    edges: list = []
    out: list = []
    frontier: set = set()

    def add(s: tuple) -> int:
        i = index.get(s)
        if i is None:
            if len(states) >= limit:
                raise StateLimitError(f"more than {limit} reachable states")
            i = len(states)
            index[s] = i
            states.append(s)
            out.append([])
            queue.append(i)
        return i

    queue: deque = deque()
    init_ids = [add(s) for s in starts]
    while queue:
        i = queue.popleft()
        s = states[i]
        if system.in_carrier(s):
            for e in names:
                try:
                    steps = system.event_steps(s, e)
                except EvalFault as exc:
                    raise ExploreFault(f"while computing {e} steps from "
                                       f"{system.format_state(s)}: {exc}", s, e) from None
                for args, nexts in steps.items():
                    inst = EventInstance(e, args)
                    for t in nexts:
                        j = add(t)
                        out[i].append(len(edges))
                        edges.append(Edge(i, inst, j))
        else:
            frontier.add(i)
        out[i].append(len(edges))
        edges.append(Edge(i, None, i))
    return TransitionGraph(system, states, index, init_ids, edges, out, frontier,
                           fairness_registry(system))


def write_json(graph: TransitionGraph, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(graph.to_json(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def path_to(graph: TransitionGraph, target: int) -> Optional[list]:
    """Shortest list of non-stutter edge indices from an initial state."""
    parent: dict = {i: None for i in graph.init}
    queue = deque(graph.init)
    while queue:
        u = queue.popleft()
        if u == target:
            path = []
            while parent[u] is not None:
                k = parent[u]
                path.append(k)
                u = graph.edges[k].src
            return path[::-1]
        for k in graph.out[u]:
            v = graph.edges[k].dst
            if v not in parent:
                parent[v] = k
                queue.append(v)
    return None
