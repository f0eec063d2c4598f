"""Bind a schedule to a test, run it under enforcement, report what happened."""

from __future__ import annotations

import enum
import logging
import threading
import time
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from . import runtime
from .errors import ValidationFailed
from .monitor import DeadlockMonitor, DeadlockVerdict, MonitorConfig, RunState
from .probes import ProbeEngine
from .schedule import Diagnostic, Schedule
from .trace import EventTrace, VerificationResult, site_order, verify_order

logger = logging.getLogger(__name__)


class Outcome(str, enum.Enum):
    PASSED = "passed"
    FAILED = "failed"
    DEADLOCKED = "deadlocked"


@dataclass(frozen=True)
class GateStats:
    waits: int
    blocks: int
    open_index: int | None


@dataclass
class RunReport:
    outcome: Outcome
    trace: EventTrace
    value: object = None
    reason: str = ""
    verdict: DeadlockVerdict | None = None
    gate_stats: dict[str, GateStats] = field(default_factory=dict)
    hits: dict[str, int] = field(default_factory=dict)
    order: VerificationResult | None = None
    wall_time: float = 0.0
    error: BaseException | None = None
    stragglers: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.outcome is Outcome.PASSED

    @property
    def deadlocked(self) -> bool:
        return self.outcome is Outcome.DEADLOCKED

    def summary(self) -> str:
        text = f"{self.outcome.value}"
        if self.outcome is Outcome.PASSED:
            text += f" value={self.value!r}"
        if self.reason:
            text += f": {self.reason}"
        return f"{text} [{len(self.trace)} events, {self.wall_time * 1e3:.2f} ms]"


Sites = Iterable[str] | Mapping[str, Iterable[str]]


class Harness:
    """Holds run policy shared by every schedule it binds.

    ``strict=None`` picks the default unknown-site policy: strict whenever
    the bound run registers at least one site, lenient otherwise.
    """

    def __init__(self, monitor: MonitorConfig | None = None, strict: bool | None = None,
                 join_grace: float | None = None):
        self.monitor = monitor or MonitorConfig()
        self.strict = strict
        self.join_grace = join_grace if join_grace is not None else self.monitor.quiescence_timeout

    def bind(self, schedule: Schedule | None = None, sites: Sites | None = None) -> "BoundRun":
        schedule = schedule if schedule is not None else Schedule()
        errors = schedule.validate()
        if errors:
            raise ValidationFailed(errors)
        program_order = sites if isinstance(sites, Mapping) else None
        extra = [s for seq in sites.values() for s in seq] if program_order else list(sites or ())

        all_sites = list(dict.fromkeys([*schedule.sites, *extra]))
        strict = self.strict if self.strict is not None else bool(all_sites)
        engine = ProbeEngine(strict=strict)
        for site_id in all_sites:
            engine.register_site(site_id)
        for decl in schedule.gates:
            engine.gates.register_gate(decl.build())
        for decl in schedule.gates:
            engine.attach(decl.site, decl.id)
        engine.freeze()
        warnings = schedule.lint(program_order)
        for w in warnings:
            logger.info("%s", w)
        return BoundRun(schedule, engine, self, warnings)


def bind(schedule: Schedule | None = None, sites: Sites | None = None, **options) -> "BoundRun":
    return Harness(**options).bind(schedule, sites)


class BoundRun:
    def __init__(self, schedule: Schedule, engine: ProbeEngine, harness: Harness,
                 warnings: list[Diagnostic]):
        self.schedule = schedule
        self.engine = engine
        self.harness = harness
        self.warnings = warnings
        self.state: RunState | None = None
        self._constraints = [site_order(a, b) for a, b in schedule.orders]

    @property
    def gates(self):
        return self.engine.gates

    def run(self, test, *args, **kwargs) -> RunReport:
        engine = self.engine
        trace = EventTrace()
        state = RunState()
        engine.use_trace(trace)
        engine.reset()
        engine.gates.run_state = state
        wake = threading.Event()

        def on_deadlock(verdict):
            engine.gates.abort(verdict)
            wake.set()

        def body():
            try:
                return test(*args, **kwargs)
            finally:
                wake.set()

        monitor = DeadlockMonitor(
            state, trace, on_deadlock,
            gate_state=lambda g: engine.gates.get(g).state.value,
            config=self.harness.monitor,
        )
        self.state = state
        runtime._activate(self)
        try:
            state.begin()
            monitor.start()
            started = time.perf_counter()
            thread = runtime.TestThread(body, name="test")
            thread.start()
            wake.wait()
            grace = self.harness.join_grace if engine.gates.aborted else None
            thread.join(grace)
            for other in state.live_threads():
                other.join(self.harness.join_grace)
            wall = time.perf_counter() - started
            monitor.stop()
            stragglers = [t.name for t in state.live_threads()]
        finally:
            runtime._activate(None)
            engine.gates.run_state = None
        report = self._report(trace, thread, monitor.verdict, wall)
        report.stragglers = stragglers
        engine.reset()
        return report

    def repeat(self, test, times: int, *args, **kwargs) -> list[RunReport]:
        return [self.run(test, *args, **kwargs) for _ in range(times)]

    def _report(self, trace, thread, verdict, wall) -> RunReport:
        stats = {
            g.id: GateStats(g.waits, g.blocks, g.open_index) for g in self.engine.gates
        }
        hits = {s.site_id: s.hits for s in self.engine.sites}
        report = RunReport(Outcome.PASSED, trace, gate_stats=stats, hits=hits, wall_time=wall)
        if verdict is not None:
            report.outcome = Outcome.DEADLOCKED
            report.verdict = verdict
            report.reason = verdict.describe()
            report.error = thread.error
            return report
        if thread.is_alive():
            report.outcome = Outcome.FAILED
            report.reason = "test thread did not finish"
            return report
        if thread.error is not None:
            report.outcome = Outcome.FAILED
            report.error = thread.error
            report.reason = f"{type(thread.error).__name__}: {thread.error}"
            return report
        report.value = thread.result
        if self._constraints:
            report.order = verify_order(trace, self._constraints)
            if not report.order.passed:
                bad = report.order.failures + report.order.inconclusive
                report.outcome = Outcome.FAILED
                report.reason = "order check: " + "; ".join(str(r) for r in bad)
        return report
