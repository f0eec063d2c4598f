"""Gates, the condition algebra, and the gate registry.

A gate pairs a probe-site location with a condition that the thread reaching
the site evaluates before it may continue.  ``SimpleGate`` and ``BarrierGate``
latch: once open they never close again.
"""

from __future__ import annotations

import enum
import threading
from dataclasses import dataclass
from typing import Callable, Iterator

from .errors import (
    CallbackPanicked,
    ConfigurationFrozen,
    DeadlockReported,
    DuplicateGateId,
    NotABarrier,
    UnknownGate,
    UnknownProbeSite,
    UnsupportedManualOpen,
)
from .trace import ARRIVE, BLOCK, OPEN, UNBLOCK, EventTrace, thread_name


class GateState(str, enum.Enum):
    CLOSED = "closed"
    OPEN = "open"


@dataclass(frozen=True)
class HitContext:
    """What the hitting thread knows while it evaluates a condition.

    ``timestamp`` is the trace index of the hit, a monotonic tick.
    """

    site_id: str
    thread: str
    hit_ordinal: int
    timestamp: int


# -- condition algebra ---------------------------------------------------------


class Condition:
    def evaluate(self, registry: "GateRegistry", ctx: HitContext) -> None:
        raise NotImplementedError

    def gate_refs(self) -> Iterator[str]:
        return iter(())


@dataclass(frozen=True)
class WaitOn(Condition):
    """Block until the named gate is open."""

    gate: str

    def evaluate(self, registry, ctx):
        registry.wait(self.gate)

    def gate_refs(self):
        yield self.gate


@dataclass(frozen=True)
class OpenAction(Condition):
    """Open the named gate and continue; never blocks (a fictitious gate)."""

    gate: str

    def evaluate(self, registry, ctx):
        registry.open(self.gate)

    def gate_refs(self):
        yield self.gate


@dataclass(frozen=True)
class Barrier(Condition):
    """Arrive at the named barrier gate; its party count lives on the gate."""

    gate: str

    def evaluate(self, registry, ctx):
        registry.barrier_wait(self.gate)

    def gate_refs(self):
        yield self.gate


@dataclass(frozen=True)
class HitCount(Condition):
    """Evaluate ``inner`` only on the site's ``n``-th traversal."""

    n: int
    inner: Condition

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("hit number must be >= 1")

    def evaluate(self, registry, ctx):
        if ctx.hit_ordinal == self.n:
            self.inner.evaluate(registry, ctx)

    def gate_refs(self):
        return self.inner.gate_refs()


@dataclass(frozen=True, init=False)
class Sequence(Condition):
    members: tuple

    def __init__(self, *members: Condition):
        if len(members) == 1 and not isinstance(members[0], Condition):
            members = tuple(members[0])
        object.__setattr__(self, "members", tuple(members))

    def evaluate(self, registry, ctx):
        for member in self.members:
            member.evaluate(registry, ctx)

    def gate_refs(self):
        for member in self.members:
            yield from member.gate_refs()


@dataclass(frozen=True)
class HostCallback(Condition):
    """Escape hatch: run arbitrary code on the hitting thread.

    The gate counts as open once ``fn(ctx)`` returns.  The callable may call
    back into the registry (``wait``/``open``) or block on its own primitives.
    """

    fn: Callable[[HitContext], object]

    def evaluate(self, registry, ctx):
        try:
            self.fn(ctx)
        except DeadlockReported:
            raise
        except Exception as exc:
            raise CallbackPanicked(f"host callback at {ctx.site_id} raised {exc!r}") from exc


# -- gates ---------------------------------------------------------------------


class Gate:
    kind = "simple"
    manual_open = True

    def __init__(self, id: str, location: str, condition: Condition | None = None):
        if not id:
            raise ValueError("gate id must be a non-empty string")
        self.id = id
        self.location = location
        self.condition = condition if condition is not None else WaitOn(id)
        self._cond = threading.Condition(threading.Lock())
        self._open = False
        self.waits = 0
        self.blocks = 0
        self.open_index: int | None = None

    @property
    def state(self) -> GateState:
        return GateState.OPEN if self._open else GateState.CLOSED

    @property
    def is_open(self) -> bool:
        return self._open

    def reset(self):
        with self._cond:
            self._open = False
            self.waits = self.blocks = 0
            self.open_index = None

    def __repr__(self):
        return f"<{type(self).__name__} {self.id!r} at {self.location!r} {self.state.value}>"


class SimpleGate(Gate):
    """Manually opened latch.  Reaching its location waits for it by default."""


class ActionGate(Gate):
    """Fictitious gate: its condition only opens ``target``."""

    kind = "action"

    def __init__(self, id: str, location: str, target: str):
        super().__init__(id, location, OpenAction(target))
        self.target = target


class BarrierGate(Gate):
    """One-shot barrier that opens itself on the ``parties``-th arrival."""

    kind = "barrier"
    manual_open = False

    def __init__(self, id: str, location: str, parties: int):
        if parties < 1:
            raise ValueError("barrier parties must be >= 1")
        super().__init__(id, location, Barrier(id))
        self.parties = parties
        self.arrived = 0

    def reset(self):
        super().reset()
        with self._cond:
            self.arrived = 0


# -- registry ------------------------------------------------------------------


def _caller(caller: str | None) -> str:
    return caller if caller is not None else thread_name()


class GateRegistry:
    """Owns every gate of a run and implements wait/open/barrier semantics.

    ``sites`` is anything with ``has_site(site_id)``, normally the probe
    engine; gate locations must already be registered there.  ``run_state``
    receives wait records for the deadlock monitor.
    """

    def __init__(self, sites=None, trace: EventTrace | None = None, run_state=None):
        self.sites = sites
        self.trace = trace if trace is not None else EventTrace()
        self.run_state = run_state
        self._gates: dict[str, Gate] = {}
        self._lock = threading.Lock()
        self._frozen = False
        self._verdict = None

    def register_gate(self, gate: Gate) -> str:
        with self._lock:
            if self._frozen:
                raise ConfigurationFrozen("cannot register gates during a bound run")
            if gate.id in self._gates:
                raise DuplicateGateId(gate.id)
            if self.sites is not None and not self.sites.has_site(gate.location):
                raise UnknownProbeSite(gate.location)
            gate.reset()
            self._gates[gate.id] = gate
        return gate.id

    def get(self, gate_id: str) -> Gate:
        try:
            return self._gates[gate_id]
        except KeyError:
            raise UnknownGate(gate_id) from None

    def __contains__(self, gate_id: str) -> bool:
        return gate_id in self._gates

    def __iter__(self) -> Iterator[Gate]:
        return iter(list(self._gates.values()))

    def __len__(self):
        return len(self._gates)

    def freeze(self):
        self._frozen = True

    def wait(self, gate_id: str, caller: str | None = None) -> None:
        gate = self.get(gate_id)
        with gate._cond:
            gate.waits += 1
            if gate._open:
                return
            self._block(gate, _caller(caller))

    def open(self, gate_id: str, caller: str | None = None) -> None:
        gate = self.get(gate_id)
        if not gate.manual_open:
            raise UnsupportedManualOpen(f"{gate.kind} gate {gate_id!r} cannot be opened manually")
        with gate._cond:
            if not gate._open:
                self._open_locked(gate, _caller(caller))

    def barrier_wait(self, gate_id: str, caller: str | None = None) -> None:
        gate = self.get(gate_id)
        if not isinstance(gate, BarrierGate):
            raise NotABarrier(gate_id)
        name = _caller(caller)
        with gate._cond:
            gate.waits += 1
            if gate._open:
                return
            gate.arrived += 1
            self.trace.append(name, ARRIVE, gate.id, f"{gate.arrived}/{gate.parties}")
            if gate.arrived >= gate.parties:
                self._open_locked(gate, name)
            else:
                self._block(gate, name)

    def evaluate_condition(self, condition: Condition, ctx: HitContext) -> None:
        condition.evaluate(self, ctx)

    def _open_locked(self, gate: Gate, name: str) -> None:
        gate._open = True
        gate.open_index = self.trace.append(name, OPEN, gate.id)
        gate._cond.notify_all()

    def _block(self, gate: Gate, name: str) -> None:
        # caller holds gate._cond
        if self._verdict is not None:
            raise DeadlockReported(self._verdict)
        gate.blocks += 1
        self.trace.append(name, BLOCK, gate.id)
        state = self.run_state
        if state is not None:
            state.enter_wait(name, gate.id)
        try:
            while not gate._open:
                if self._verdict is not None:
                    raise DeadlockReported(self._verdict)
                gate._cond.wait()
        finally:
            if state is not None:
                state.leave_wait()
        self.trace.append(name, UNBLOCK, gate.id)

    @property
    def aborted(self) -> bool:
        return self._verdict is not None

    def abort(self, verdict) -> None:
        """Release every blocked waiter with :class:`DeadlockReported`."""
        self._verdict = verdict
        for gate in self:
            with gate._cond:
                gate._cond.notify_all()

    def reset(self) -> None:
        self._verdict = None
        for gate in self:
            gate.reset()
