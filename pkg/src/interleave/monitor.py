"""Quiescence-based deadlock detection for enforced runs.

A run is declared deadlocked when every live test thread is parked (blocked
on a gate, or joining other test threads through :func:`interleave.join`)
and the trace has not grown for ``quiescence_timeout``.  Threads busy in
their own code keep the monitor quiet: only gate-induced blocking is judged.
"""

from __future__ import annotations

import logging
import threading
import time
from dataclasses import dataclass, field

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MonitorConfig:
    quiescence_timeout: float = 5.0
    poll_interval: float = 0.05

    def __post_init__(self):
        if not (self.quiescence_timeout > self.poll_interval > 0):
            raise ValueError("need quiescence_timeout > poll_interval > 0")

    @property
    def report_bound(self) -> float:
        """Worst-case delay between the last event and the verdict."""
        return self.quiescence_timeout + 2 * self.poll_interval


@dataclass(frozen=True)
class WaitRecord:
    thread: str
    ident: int
    gate: str
    since: float


@dataclass(frozen=True)
class BlockedThread:
    thread: str
    gate: str
    gate_state: str


@dataclass(frozen=True)
class DeadlockVerdict:
    blocked: tuple[BlockedThread, ...]
    quiet_for: float
    elapsed: float = 0.0
    joining: tuple[str, ...] = field(default=())

    @property
    def threads(self) -> set[str]:
        return {b.thread for b in self.blocked}

    def describe(self) -> str:
        parts = [f"{b.thread} on {b.gate} ({b.gate_state})" for b in self.blocked]
        text = ", ".join(parts)
        if self.joining:
            text += f"; joining: {', '.join(self.joining)}"
        return f"{text}; quiet for {self.quiet_for:.3f}s"


class RunState:
    """Shared view of which test threads are parked, for the monitor."""

    def __init__(self):
        self._lock = threading.Lock()
        self._waits: dict[int, WaitRecord] = {}
        self._joining: dict[int, str] = {}
        self._baseline: set[int] = set()
        self._excluded: set[int] = set()

    def begin(self) -> None:
        """Threads alive now are not part of the run."""
        self._baseline = {t.ident for t in threading.enumerate()}

    def exclude(self, thread: threading.Thread) -> None:
        self._excluded.add(thread.ident)

    def enter_wait(self, name: str, gate: str) -> None:
        ident = threading.get_ident()
        with self._lock:
            if ident in self._waits:
                raise RuntimeError(f"thread {name} is already blocked on {self._waits[ident].gate}")
            self._waits[ident] = WaitRecord(name, ident, gate, time.monotonic())

    def leave_wait(self) -> None:
        with self._lock:
            self._waits.pop(threading.get_ident(), None)

    def enter_join(self) -> None:
        with self._lock:
            self._joining[threading.get_ident()] = threading.current_thread().name

    def leave_join(self) -> None:
        with self._lock:
            self._joining.pop(threading.get_ident(), None)

    def waits(self) -> list[WaitRecord]:
        with self._lock:
            return list(self._waits.values())

    def live_threads(self) -> list[threading.Thread]:
        skip = self._baseline | self._excluded
        return [t for t in threading.enumerate() if t.ident not in skip and t.is_alive()]

    def snapshot(self):
        """(live threads, wait records, joining names) taken consistently."""
        live = self.live_threads()
        with self._lock:
            waits = dict(self._waits)
            joining = dict(self._joining)
        return live, waits, joining


class DeadlockMonitor:
    """Polls a :class:`RunState` on its own thread and aborts stuck runs.

    ``gate_state`` maps a gate id to a printable state; ``on_deadlock`` is
    called once with the verdict and must release the blocked waiters.
    """

    def __init__(self, state: RunState, trace, on_deadlock, gate_state=None,
                 config: MonitorConfig | None = None):
        self.state = state
        self.trace = trace
        self.on_deadlock = on_deadlock
        self.gate_state = gate_state or (lambda gate: "closed")
        self.config = config or MonitorConfig()
        self.verdict: DeadlockVerdict | None = None
        self._stop = threading.Event()
        self._thread: threading.Thread | None = None
        self._started = 0.0
        self._last_len = -1
        self._quiet_since = 0.0

    def start(self) -> None:
        self._started = self._quiet_since = time.monotonic()
        self._last_len = len(self.trace)
        self._thread = threading.Thread(target=self._loop, name="interleave-monitor", daemon=True)
        self._thread.start()
        self.state.exclude(self._thread)

    def stop(self) -> None:
        self._stop.set()
        if self._thread is not None:
            self._thread.join()

    def _loop(self) -> None:
        while not self._stop.wait(self.config.poll_interval):
            verdict = self.poll()
            if verdict is not None:
                self.verdict = verdict
                logger.info("deadlock detected: %s", verdict.describe())
                self.on_deadlock(verdict)
                return

    def poll(self, now: float | None = None) -> DeadlockVerdict | None:
        """One observation; returns a verdict or ``None`` (quiet)."""
        now = time.monotonic() if now is None else now
        n = len(self.trace)
        if n != self._last_len:
            self._last_len = n
            self._quiet_since = now
            return None
        live, waits, joining = self.state.snapshot()
        if not waits or len(self.trace) != n:
            return None
        for t in live:
            if t.ident not in waits and t.ident not in joining:
                return None
        quiet = now - self._quiet_since
        if quiet < self.config.quiescence_timeout:
            return None
        blocked = tuple(
            BlockedThread(w.thread, w.gate, self.gate_state(w.gate))
            for w in sorted(waits.values(), key=lambda w: w.since)
        )
        return DeadlockVerdict(
            blocked, quiet, now - self._started, tuple(sorted(joining.values()))
        )
