"""Command-line front end: check, refine, explore, simulate.

Exit codes: 0 when every verdict passed (or was skipped), 1 when some
verdict failed, 2 on faults, load errors and usage errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional

from .explorer import ExploreFault, StateLimitError, build_graph, state_limit_from_env
from .lang.diagnostics import SpecError
from .liveness import check_obligations
from .load import load_refinement, load_typed
from .monitor import FAIR, MONITORED, RANDOM, RAW, enforce_guards, simulate
from .refinement import RefinementContext, RefinementOptions, check_refinement
from .report import Report
from .safety import INVARIANT, REACHABLE, check_safety, planned_ids, skipped
from .semantics.system import System
from .values import EvalFault
from .verdict import FAULT, Verdict, Witness


class UsageError(Exception):
    pass


def _load(spec, bounds, enforce: bool = False) -> tuple:
    for p in (spec, bounds):
        if p is not None and not Path(p).is_file():
            raise UsageError(f"cannot read {p}")
    typed = load_typed(spec, bounds)
    if enforce:
        typed = enforce_guards(typed)
    return System(typed), [str(w) for w in typed.warnings]


def _graph(system: System, args) -> object:
    limit = args.max_states if args.max_states is not None else state_limit_from_env()
    return build_graph(system, max_states=limit)


def _graph_warnings(system: System, graph) -> list:
    out = []
    if not graph.init:
        out.append(f"{system.name}: no initial states under these bounds; "
                   f"reachable-state checks are vacuous")
    if graph.frontier:
        out.append(f"{system.name}: {len(graph.frontier)} reachable states lie outside the "
                   f"bounded carriers and were not expanded; liveness passes are relative "
                   f"to the bounds")
    return out


def _explore_fault(system: System, exc: ExploreFault) -> Verdict:
    return Verdict("explore", FAULT, REACHABLE, f"exploration faulted: {exc}",
                   Witness(system.state_dict(exc.state), note=exc.event or ""))


def _assumption_skips(system: System, mode: str) -> Optional[tuple]:
    if system.assumption_holds():
        return None
    ids = planned_ids(system)
    ids += [f"obligation-{system.events[e].decl.obligation.mode}:{e}"
            for e in system.event_names if system.events[e].decl.obligation is not None]
    reason = "the constant assumption is false under these bounds"
    return skipped(ids, mode, reason), [f"{system.name}: {reason}; every check is vacuous"]


def cmd_check(args) -> Report:
    report = Report("check", {"spec": args.spec, "bounds": args.bounds},
                    {"states": args.states, "enforce_guards": args.enforce_guards})
    system, report.warnings = _load(args.spec, args.bounds, args.enforce_guards)
    skips = _assumption_skips(system, args.states)
    if skips is not None:
        report.verdicts, extra = skips
        report.warnings += extra
        return report
    try:
        graph = _graph(system, args)
    except ExploreFault as exc:
        report.verdicts.append(_explore_fault(system, exc))
        return report
    report.warnings += _graph_warnings(system, graph)
    report.verdicts += check_safety(system, args.states, graph)
    report.verdicts += check_obligations(system, graph)
    return report


def cmd_refine(args) -> Report:
    abs_bounds = args.abs_bounds or args.bounds
    conc_bounds = args.conc_bounds or args.bounds
    report = Report("refine", {"abstract": args.abstract, "concrete": args.concrete,
                               "refinement": args.refinement, "abstract_bounds": abs_bounds,
                               "concrete_bounds": conc_bounds if conc_bounds != abs_bounds else None},
                    {"states": args.states, "strong_right": args.strong_right,
                     "weak_new_events": args.weak_new_events, "runs": args.runs,
                     "horizon": args.horizon, "seed": args.seed})
    a, wa = _load(args.abstract, abs_bounds)
    c, wc = _load(args.concrete, conc_bounds)
    report.warnings = wa + wc
    if not Path(args.refinement).is_file():
        raise UsageError(f"cannot read {args.refinement}")
    ref = load_refinement(args.refinement, a, c)
    for sysm in (a, c):
        skips = _assumption_skips(sysm, args.states)
        if skips is not None:
            verdicts, extra = skips
            for v in verdicts:
                v.id = f"{sysm.name}/{v.id}"
            report.verdicts += verdicts
            report.warnings += extra
    if report.verdicts:
        return report
    graphs = []
    for sysm in (a, c):
        try:
            graphs.append(_graph(sysm, args))
        except ExploreFault as exc:
            v = _explore_fault(sysm, exc)
            v.id = f"{sysm.name}/{v.id}"
            report.verdicts.append(v)
            return report
        report.warnings += _graph_warnings(sysm, graphs[-1])
    ctx = RefinementContext(a, c, ref, graphs[0], graphs[1])
    opts = RefinementOptions(args.states, args.strong_right, args.weak_new_events,
                             args.runs, args.horizon, args.seed)
    report.verdicts = check_refinement(ctx, opts)
    if ctx.glue_inv_violations:
        report.warnings.append("some concrete states have glued abstract states that violate "
                               "the abstract invariant")
    return report


def cmd_explore(args) -> Report:
    report = Report("explore", {"spec": args.spec, "bounds": args.bounds},
                    {"enforce_guards": args.enforce_guards})
    system, report.warnings = _load(args.spec, args.bounds, args.enforce_guards)
    try:
        graph = _graph(system, args)
    except ExploreFault as exc:
        report.verdicts.append(_explore_fault(system, exc))
        return report
    report.warnings += _graph_warnings(system, graph)
    report.artifacts = {
        "states": len(graph.states),
        "edges": sum(1 for e in graph.edges if e.label is not None),
        "initial": len(graph.init),
        "frontier": len(graph.frontier),
    }
    if args.graph:
        Path(args.graph).write_text(_dump(graph.to_json()), encoding="utf-8")
        report.artifacts["graph"] = args.graph
    if args.dot:
        Path(args.dot).write_text(graph.to_dot(stutter=args.stutter), encoding="utf-8")
        report.artifacts["dot"] = args.dot
    return report


def cmd_simulate(args) -> Report:
    if args.horizon <= 0:
        raise UsageError("--horizon must be positive")
    report = Report("simulate", {"spec": args.spec, "bounds": args.bounds},
                    {"mode": args.mode, "seed": args.seed, "horizon": args.horizon,
                     "scheduler": args.scheduler})
    system, report.warnings = _load(args.spec, args.bounds)
    trace = simulate(system, args.mode, args.seed, args.horizon, args.scheduler)
    report.artifacts = {"trace": trace.to_json()}
    return report


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fescheck", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, states=True):
        sp.add_argument("--bounds", help="bounds file")
        sp.add_argument("--format", choices=("text", "json"), default="text")
        sp.add_argument("--json", metavar="OUT", help="also write the JSON report here")
        sp.add_argument("--max-states", type=int, help="state cap (env FESCHECK_STATE_LIMIT)")
        sp.add_argument("--jobs", type=int, default=1, help="worker cap (checks run in one thread)")
        if states:
            sp.add_argument("--states", choices=(REACHABLE, INVARIANT), default=REACHABLE,
                            help="quantify over reachable states or all invariant states")

    sp = sub.add_parser("check", help="well-formedness, policy and obligation checks")
    sp.add_argument("spec")
    sp.add_argument("--enforce-guards", action="store_true",
                    help="conjoin permission and negated prohibition to every event")
    common(sp)
    sp.set_defaults(func=cmd_check)

    sp = sub.add_parser("refine", help="refinement checks between two systems")
    sp.add_argument("abstract")
    sp.add_argument("concrete")
    sp.add_argument("refinement")
    sp.add_argument("--abs-bounds", help="bounds for the abstract system (default --bounds)")
    sp.add_argument("--conc-bounds", help="bounds for the concrete system (default --bounds)")
    sp.add_argument("--strong-right", action="store_true",
                    help="require translated rights to enable a refining event at once")
    sp.add_argument("--weak-new-events", action="store_true",
                    help="new events need only keep the glue set nonempty")
    sp.add_argument("--runs", type=int, default=100, help="sampled runs for run translation")
    sp.add_argument("--horizon", type=int, default=40)
    sp.add_argument("--seed", type=int, default=0)
    common(sp)
    sp.set_defaults(func=cmd_refine)

    sp = sub.add_parser("explore", help="build and export the transition graph")
    sp.add_argument("spec")
    sp.add_argument("--enforce-guards", action="store_true")
    sp.add_argument("--graph", metavar="OUT", help="write the graph as JSON")
    sp.add_argument("--dot", metavar="OUT", help="write the graph as DOT")
    sp.add_argument("--stutter", action="store_true", help="draw stutter loops in DOT output")
    common(sp, states=False)
    sp.set_defaults(func=cmd_explore)

    sp = sub.add_parser("simulate", help="sample one run under the monitor")
    sp.add_argument("spec")
    sp.add_argument("--mode", choices=(RAW, MONITORED), default=MONITORED)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--horizon", type=int, default=50)
    sp.add_argument("--scheduler", choices=(RANDOM, FAIR), default=FAIR)
    common(sp, states=False)
    sp.set_defaults(func=cmd_simulate)
    return p


def main(argv: Optional[list] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.jobs is not None and args.jobs < 1:
        print("fescheck: error: --jobs must be at least 1", file=sys.stderr)
        return 2
    try:
        report = args.func(args)
    except UsageError as exc:
        print(f"fescheck: error: {exc}", file=sys.stderr)
        return 2
    except SpecError as exc:
        print(str(exc), file=sys.stderr)
        return 2
    except StateLimitError as exc:
        print(f"fescheck: state limit: {exc}", file=sys.stderr)
        return 2
    except (EvalFault, ValueError) as exc:
        print(f"fescheck: fault: {exc}", file=sys.stderr)
        return 2
    if args.json:
        Path(args.json).write_text(report.dumps(), encoding="utf-8")
    sys.stdout.write(report.dumps() if args.format == "json" else report.to_text())
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())
