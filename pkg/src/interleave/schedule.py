"""Schedules: the gates and ordering checks bound to one test.

Schedule files are line oriented::

    test shared_memory
    gate Worker2Done simple at worker1@07 wait
    gate Worker2Exit action at worker2@14 open Worker2Done
    gate after_copy barrier(2) at addAll@08
    gate fifth simple at loop@03 on-hit 5 wait
    order worker2@13 -> worker1@07

``#`` starts a comment.  Tokens may be separated by any whitespace.
"""

from __future__ import annotations

import graphlib
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

from .errors import ParseError
from .gates import (
    ActionGate,
    Barrier,
    BarrierGate,
    Condition,
    Gate,
    HitCount,
    OpenAction,
    Sequence,
    SimpleGate,
    WaitOn,
)

SIMPLE = "simple"
ACTION = "action"
BARRIER = "barrier"


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "error" | "warning" | "note"
    code: str
    message: str
    line: int | None = None

    def __str__(self):
        where = f"line {self.line}: " if self.line is not None else ""
        return f"{where}{self.severity}: {self.code}: {self.message}"


@dataclass(frozen=True)
class GateDecl:
    """Declaration of one gate; ``condition`` overrides the kind's default."""

    id: str
    kind: str
    site: str
    target: str | None = None
    parties: int | None = None
    on_hit: int | None = None
    condition: Condition | None = None
    line: int | None = field(default=None, compare=False)

    def effective_condition(self) -> Condition:
        if self.condition is not None:
            return self.condition
        if self.kind == ACTION:
            return OpenAction(self.target)
        if self.kind == BARRIER:
            return Barrier(self.id)
        cond: Condition = WaitOn(self.id)
        if self.on_hit is not None:
            cond = HitCount(self.on_hit, cond)
        return cond

    def build(self) -> Gate:
        if self.kind == BARRIER:
            gate: Gate = BarrierGate(self.id, self.site, self.parties)
        elif self.kind == ACTION and self.condition is None:
            gate = ActionGate(self.id, self.site, self.target)
        else:
            gate = SimpleGate(self.id, self.site, self.effective_condition())
        return gate

    def to_line(self) -> str:
        if self.condition is not None:
            raise ValueError(f"gate {self.id!r} has a programmatic condition; not expressible as text")
        if self.kind == ACTION:
            return f"gate {self.id} action at {self.site} open {self.target}"
        if self.kind == BARRIER:
            return f"gate {self.id} barrier({self.parties}) at {self.site}"
        if self.on_hit is not None:
            return f"gate {self.id} simple at {self.site} on-hit {self.on_hit} wait"
        return f"gate {self.id} simple at {self.site} wait"


def simple(id: str, site: str, on_hit: int | None = None) -> GateDecl:
    return GateDecl(id, SIMPLE, site, on_hit=on_hit)


def action(id: str, site: str, target: str) -> GateDecl:
    return GateDecl(id, ACTION, site, target=target)


def barrier(id: str, site: str, parties: int) -> GateDecl:
    return GateDecl(id, BARRIER, site, parties=parties)


@dataclass
class Schedule:
    test_id: str = ""
    gates: list[GateDecl] = field(default_factory=list)
    orders: list[tuple[str, str]] = field(default_factory=list)
    metadata: str = ""

    @property
    def sites(self) -> list[str]:
        seen: dict[str, None] = {}
        for g in self.gates:
            seen.setdefault(g.site)
        for a, b in self.orders:
            seen.setdefault(a)
            seen.setdefault(b)
        return [s for s in seen if s]

    def validate(self) -> list[Diagnostic]:
        """Cross-reference errors; an empty list means the schedule binds."""
        out = []
        ids: set[str] = set()
        for g in self.gates:
            if not g.id:
                out.append(Diagnostic("error", "EmptyGateId", "gate id is empty", g.line))
            elif g.id in ids:
                out.append(Diagnostic("error", "DuplicateGateId", f"gate {g.id!r} declared twice", g.line))
            ids.add(g.id)
            if not g.site:
                out.append(Diagnostic("error", "EmptySite", f"gate {g.id!r} has an empty site", g.line))
            if g.kind not in (SIMPLE, ACTION, BARRIER):
                out.append(Diagnostic("error", "UnknownKind", f"gate {g.id!r}: kind {g.kind!r}", g.line))
            if g.kind == BARRIER and (g.parties is None or g.parties < 1):
                out.append(Diagnostic("error", "BadParties", f"barrier {g.id!r} needs parties >= 1", g.line))
            if g.on_hit is not None and g.on_hit < 1:
                out.append(Diagnostic("error", "BadHitCount", f"gate {g.id!r}: on-hit must be >= 1", g.line))
            if g.kind == ACTION and not g.target and g.condition is None:
                out.append(Diagnostic("error", "MissingTarget", f"action gate {g.id!r} opens nothing", g.line))
        barriers = {g.id for g in self.gates if g.kind == BARRIER}
        for g in self.gates:
            for ref in g.effective_condition().gate_refs():
                if ref not in ids:
                    out.append(Diagnostic("error", "UnresolvedGate", f"unresolved gate {ref!r} (in {g.id!r})", g.line))
            if g.kind == ACTION and g.target in barriers:
                out.append(Diagnostic("error", "UnsupportedManualOpen",
                                      f"{g.id!r} opens barrier {g.target!r}", g.line))
        for a, b in self.orders:
            if not a or not b:
                out.append(Diagnostic("error", "EmptySite", "order constraint with an empty site"))
        return out

    def lint(self, program_order: Mapping[str, Iterable[str]] | None = None) -> list[Diagnostic]:
        """Static wait/open cycle check.

        Edges run from the site that opens a gate to every site that waits on
        it; ``program_order`` (thread -> sites in execution order) adds the
        sequential edges each thread contributes.  Warnings only: a host
        callback can break any apparent cycle.
        """
        graph: dict[str, set[str]] = {}
        openers: dict[str, list[str]] = {}
        waiters: dict[str, list[str]] = {}
        for g in self.gates:
            graph.setdefault(g.site, set())
            _collect(g.effective_condition(), g.site, openers, waiters)
        for gate_id, wait_sites in waiters.items():
            for opener in openers.get(gate_id, ()):
                for w in wait_sites:
                    graph.setdefault(w, set()).add(opener)
        for sites in (program_order or {}).values():
            sites = list(sites)
            for prev, nxt in zip(sites, sites[1:]):
                graph.setdefault(nxt, set()).add(prev)
        cycle = find_cycle(graph)
        if cycle:
            return [Diagnostic("warning", "CyclicSchedule", "wait/open cycle: " + " -> ".join(cycle))]
        return []

    def to_text(self) -> str:
        lines = [f"# {m}" for m in self.metadata.splitlines()]
        if self.test_id:
            lines.append(f"test {self.test_id}")
        lines += [g.to_line() for g in self.gates]
        lines += [f"order {a} -> {b}" for a, b in self.orders]
        return "\n".join(lines) + "\n"


def _collect(cond, site, openers, waiters):
    if isinstance(cond, OpenAction):
        openers.setdefault(cond.gate, []).append(site)
    elif isinstance(cond, WaitOn):
        waiters.setdefault(cond.gate, []).append(site)
    elif isinstance(cond, HitCount):
        _collect(cond.inner, site, openers, waiters)
    elif isinstance(cond, Sequence):
        for m in cond.members:
            _collect(m, site, openers, waiters)


def find_cycle(graph: Mapping[str, Iterable[str]]) -> list[str] | None:
    """Return one cycle (first node repeated at the end) or ``None``.

    ``graph`` maps each node to its predecessors.
    """
    try:
        graphlib.TopologicalSorter(graph).prepare()
    except graphlib.CycleError as exc:
        return list(exc.args[1])
    return None


_TOKEN = re.compile(r"->|\(|\)|(?:(?!->)[^\s()])+")


def tokenize(line: str) -> list[str]:
    return _TOKEN.findall(line.split("#", 1)[0])


def parse_schedule(text: str, source: str = "<string>") -> Schedule:
    schedule = Schedule()
    errors: list[tuple[int, str]] = []
    comments = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        stripped = raw.strip()
        if stripped.startswith("#") and not schedule.gates and not schedule.test_id:
            comments.append(stripped[1:].strip())
        toks = tokenize(raw)
        if not toks:
            continue
        try:
            _parse_line(toks, lineno, schedule)
        except _LineError as exc:
            errors.append((lineno, str(exc)))
    if errors:
        raise ParseError(errors, source)
    schedule.metadata = "\n".join(comments)
    return schedule


def load_schedule(path) -> Schedule:
    path = Path(path)
    return parse_schedule(path.read_text(encoding="utf-8"), str(path))


class _LineError(Exception):
    pass


def _positive_int(tok: str, what: str) -> int:
    if not tok.isdigit() or int(tok) < 1:
        raise _LineError(f"{what} must be a positive integer, got {tok!r}")
    return int(tok)


def _expect(toks, i, word):
    if i >= len(toks) or toks[i] != word:
        got = toks[i] if i < len(toks) else "end of line"
        raise _LineError(f"expected {word!r}, got {got!r}")


def _parse_line(toks, lineno, schedule):
    head = toks[0]
    if head == "test":
        if len(toks) != 2:
            raise _LineError("usage: test <test_id>")
        if schedule.test_id:
            raise _LineError("test id declared twice")
        schedule.test_id = toks[1]
    elif head == "order":
        if len(toks) != 4 or toks[2] != "->":
            raise _LineError("usage: order <site_id> -> <site_id>")
        schedule.orders.append((toks[1], toks[3]))
    elif head == "gate":
        schedule.gates.append(_parse_gate(toks, lineno))
    else:
        raise _LineError(f"unknown directive {head!r}")


def _parse_gate(toks, lineno) -> GateDecl:
    if len(toks) < 3:
        raise _LineError("incomplete gate declaration")
    gate_id, kind = toks[1], toks[2]
    if kind == BARRIER:
        if toks[3:6][:1] != ["("] or len(toks) < 6 or toks[5] != ")":
            raise _LineError("usage: gate <id> barrier(<n>) at <site_id>")
        parties = _positive_int(toks[4], "barrier parties")
        rest = toks[6:]
        if len(rest) != 2 or rest[0] != "at":
            raise _LineError("usage: gate <id> barrier(<n>) at <site_id>")
        return GateDecl(gate_id, BARRIER, rest[1], parties=parties, line=lineno)
    if kind not in (SIMPLE, ACTION):
        raise _LineError(f"unknown gate kind {kind!r}")
    _expect(toks, 3, "at")
    if len(toks) < 5:
        raise _LineError("missing site id")
    site, rest = toks[4], toks[5:]
    if kind == ACTION:
        if len(rest) != 2 or rest[0] != "open":
            raise _LineError("usage: gate <id> action at <site_id> open <target_id>")
        return GateDecl(gate_id, ACTION, site, target=rest[1], line=lineno)
    if rest == ["wait"]:
        return GateDecl(gate_id, SIMPLE, site, line=lineno)
    if len(rest) == 3 and rest[0] == "on-hit" and rest[2] == "wait":
        return GateDecl(gate_id, SIMPLE, site, on_hit=_positive_int(rest[1], "hit number"), line=lineno)
    raise _LineError("usage: gate <id> simple at <site_id> [on-hit <N>] wait")
