"""Compile declarative ``before -> after`` event orderings into gate schedules.

For a constraint ``p -> s`` the thread reaching ``s`` must not continue until
``p``'s site has been reached.  That becomes a simple gate at ``s`` waiting on
itself plus an action gate at ``p`` that opens it.  Waits are declared before
opens, so a site that is both a successor and a predecessor finishes waiting
before it releases anyone.

Spec files use the schedule lexical rules::

    test long_task
    event finished at task@33
    event check at test@10
    before finished -> check
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .errors import ParseError, UndeclaredEvent
from .schedule import ACTION, SIMPLE, Diagnostic, GateDecl, Schedule, find_cycle, tokenize


@dataclass
class OrderingSpec:
    events: dict[str, str] = field(default_factory=dict)
    constraints: list[tuple[str, str]] = field(default_factory=list)
    test_id: str = ""

    def undeclared(self) -> list[str]:
        missing = []
        for pair in self.constraints:
            for name in pair:
                if name not in self.events and name not in missing:
                    missing.append(name)
        return missing


def gate_name(before: str, after: str) -> str:
    return f"{after}.after.{before}"


def convert(spec: OrderingSpec) -> Schedule:
    missing = spec.undeclared()
    if missing:
        raise UndeclaredEvent(", ".join(repr(m) for m in missing))
    constraints = list(dict.fromkeys(spec.constraints))
    waits = []
    opens = []
    orders: list[tuple[str, str]] = []
    for before, after in constraints:
        name = gate_name(before, after)
        waits.append(GateDecl(name, SIMPLE, spec.events[after]))
        opens.append(GateDecl(f"{name}.open", ACTION, spec.events[before], target=name))
        pair = (spec.events[before], spec.events[after])
        if pair not in orders:
            orders.append(pair)
    return Schedule(
        spec.test_id,
        waits + opens,
        orders,
        metadata="converted from an ordering spec",
    )


def lint(spec: OrderingSpec) -> list[Diagnostic]:
    out = []
    for name in spec.undeclared():
        out.append(Diagnostic("error", "UndeclaredEvent", f"event {name!r} is not declared"))
    graph: dict[str, set[str]] = {name: set() for name in spec.events}
    for before, after in spec.constraints:
        graph.setdefault(after, set()).add(before)
        graph.setdefault(before, set())
    cycle = find_cycle(graph)
    if cycle:
        out.append(Diagnostic("warning", "CyclicConstraints", "cycle: " + " -> ".join(cycle)))
    seen = set()
    for pair in spec.constraints:
        if pair in seen:
            out.append(Diagnostic("note", "DuplicateConstraint", f"{pair[0]} -> {pair[1]} repeated"))
        seen.add(pair)
        before, after = pair
        if before != after and before in spec.events and spec.events.get(before) == spec.events.get(after):
            out.append(Diagnostic(
                "warning", "ConflictingSiteRoles",
                f"{before} and {after} share site {spec.events[before]!r} but are ordered",
            ))
    used = {n for pair in spec.constraints for n in pair}
    for name in spec.events:
        if name not in used:
            out.append(Diagnostic("note", "UnusedEvent", f"event {name!r} is never constrained"))
    return out


def parse_spec(text: str, source: str = "<string>") -> OrderingSpec:
    spec = OrderingSpec()
    errors = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        toks = tokenize(raw)
        if not toks:
            continue
        head = toks[0]
        if head == "test" and len(toks) == 2:
            spec.test_id = toks[1]
        elif head == "event" and len(toks) == 4 and toks[2] == "at":
            if toks[1] in spec.events:
                errors.append((lineno, f"event {toks[1]!r} declared twice"))
            spec.events[toks[1]] = toks[3]
        elif head == "before" and len(toks) == 4 and toks[2] == "->":
            spec.constraints.append((toks[1], toks[3]))
        elif head in ("test", "event", "before"):
            usage = {
                "test": "test <test_id>",
                "event": "event <name> at <site_id>",
                "before": "before <name> -> <name>",
            }[head]
            errors.append((lineno, f"usage: {usage}"))
        else:
            errors.append((lineno, f"unknown directive {head!r}"))
    if errors:
        raise ParseError(errors, source)
    return spec


def load_spec(path) -> OrderingSpec:
    path = Path(path)
    return parse_spec(path.read_text(encoding="utf-8"), str(path))
