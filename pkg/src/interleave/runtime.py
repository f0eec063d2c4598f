"""Hooks that instrumented code calls, routed to the currently active run.

With no run active, :func:`probe` and :func:`mark` do nothing, so dormant
probes in production code cost one attribute lookup.
"""

from __future__ import annotations

import threading

from .errors import InterleaveError
from .trace import MARK, thread_name

_active = None
_probe = None  # bound ProbeEngine.probe of the active run


def active_run():
    return _active


def _activate(run) -> None:
    global _active, _probe
    if _active is not None and run is not None:
        raise InterleaveError("another bound run is already active")
    _active = run
    _probe = run.engine.probe if run is not None else None


def probe(site_id: str) -> None:
    hook = _probe
    if hook is not None:
        hook(site_id)


def mark(label: str) -> None:
    """Record a user event in the active trace."""
    run = _active
    if run is not None:
        run.engine.trace.append(thread_name(), MARK, label)


def wait(gate_id: str) -> None:
    """Wait on a gate directly from test code (no probe site involved)."""
    _require().engine.gates.wait(gate_id)


def open(gate_id: str) -> None:
    _require().engine.gates.open(gate_id)


def _require():
    if _active is None:
        raise InterleaveError("no bound run is active")
    return _active


class TestThread(threading.Thread):
    """Thread that keeps its target's result or exception for :func:`join`."""

    __test__ = False  # not a pytest class

    def __init__(self, target, args=(), kwargs=None, name=None):
        super().__init__(name=name, daemon=True)
        self._fn = target
        self._args = args
        self._kwargs = kwargs or {}
        self.result = None
        self.error: BaseException | None = None

    def run(self):
        try:
            self.result = self._fn(*self._args, **self._kwargs)
        except BaseException as exc:
            self.error = exc
        finally:
            del self._fn, self._args, self._kwargs


def spawn(target, *args, name: str | None = None, **kwargs) -> TestThread:
    t = TestThread(target, args, kwargs, name=name)
    t.start()
    return t


def join(*threads: TestThread, reraise: bool = True):
    """Join test threads, re-raising the first error any of them hit.

    While joining, the caller counts as parked for the deadlock monitor: it
    can only make progress once the threads it joins do.
    """
    state = _active.state if _active is not None else None
    if state is not None:
        state.enter_join()
    try:
        for t in threads:
            t.join()
    finally:
        if state is not None:
            state.leave_join()
    if reraise:
        for t in threads:
            if getattr(t, "error", None) is not None:
                raise t.error
    return [getattr(t, "result", None) for t in threads]
