import threading
import time

import pytest

from interleave import MonitorConfig
from interleave.probes import ProbeEngine

ACCEPTANCE_LINES = []

FAST_MONITOR = MonitorConfig(quiescence_timeout=0.2, poll_interval=0.02)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def engine():
    return ProbeEngine(strict=True)


@pytest.fixture
def fast_monitor():
    return FAST_MONITOR


def wait_until(predicate, timeout=2.0):
    deadline = time.monotonic() + timeout
    while not predicate():
        if time.monotonic() > deadline:
            raise AssertionError("condition not reached in time")
        time.sleep(0.001)


def start(fn, *args, name=None):
    t = threading.Thread(target=fn, args=args, name=name, daemon=True)
    t.start()
    return t
