"""End-to-end acceptance criteria, each checked at its stated tolerance.

Every test prints one ``PASS``/``FAIL`` line and adds it to the summary
shown at the end of the pytest run.
"""

import math
import random
import statistics
import time

import pytest

import interleave as il
from interleave.converter import convert, lint
from interleave.fixtures import (
    BOUNDS_VIOLATION,
    CYCLE_SCHEDULE,
    NULL_LAST,
    get_fixture,
    long_task_sleeping,
    program,
)
from interleave.schedule import parse_schedule
from interleave.trace import EventTrace

from .conftest import ACCEPTANCE_LINES, FAST_MONITOR
from .specgen import oracle_violations, random_program, random_spec

pytestmark = pytest.mark.slow


def criterion(number, title, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'}  [{number}] {title}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def gated(name, monitor=None):
    fx = get_fixture(name)
    return fx, il.bind(fx.schedule(), sites=fx.sites, monitor=monitor)


def ungated(name):
    fx = get_fixture(name)
    return fx, il.bind(None, sites=fx.sites)


def test_shared_memory_is_deterministic():
    fx, bound = gated("shared_memory")
    started = time.perf_counter()
    values = [bound.run(fx).value for _ in range(1000)]
    elapsed = time.perf_counter() - started
    hits = values.count(-10)
    criterion(1, "shared_memory gated returns -10", hits == 1000 and elapsed <= 30.0,
              f"{hits}/1000 in {elapsed:.2f} s (limit 30 s)")


def test_unsafe_append_violation_is_forced():
    fx, bound = gated("unsafe_append")
    started = time.perf_counter()
    forced = sum(bound.run(fx).value == BOUNDS_VIOLATION for _ in range(100))
    _, plain = ungated("unsafe_append")
    natural = sum(plain.run(fx).value == BOUNDS_VIOLATION for _ in range(10_000))
    elapsed = time.perf_counter() - started
    rate = natural / 10_000
    criterion(2, "unsafe_append violation", forced == 100 and rate < 0.05 and elapsed <= 120,
              f"gated {forced}/100, ungated {rate:.2%} of 10000 (< 5%), {elapsed:.1f} s (limit 120 s)")


def test_unsafe_addall_lost_element_is_forced():
    fx, bound = gated("unsafe_addall")
    forced = sum(bound.run(fx).value == NULL_LAST for _ in range(100))
    _, plain = ungated("unsafe_addall")
    natural = sum(plain.run(fx).value == NULL_LAST for _ in range(5000))
    rate = natural / 5000
    criterion(3, "unsafe_addall null last element", forced == 100 and rate < 0.10,
              f"gated {forced}/100, ungated {rate:.2%} of 5000 (< 10%)")


def test_long_task_beats_sleeping():
    fx, bound = gated("long_task")
    gated_walls, values = [], []
    for _ in range(20):
        started = time.perf_counter()
        report = bound.run(fx)
        gated_walls.append(time.perf_counter() - started)
        values.append(report.value)
    _, plain = ungated("long_task")
    sleep_walls = []
    for _ in range(20):
        started = time.perf_counter()
        plain.run(long_task_sleeping, 0.05, max_time=1.0)
        sleep_walls.append(time.perf_counter() - started)
    g, s = statistics.median(gated_walls), statistics.median(sleep_walls)
    ok = all(v is True for v in values) and g < 0.150 and g < s / 5
    criterion(4, "long_task gated wall time", ok,
              f"median {g * 1e3:.1f} ms (< 150 ms) vs sleeping {s * 1e3:.1f} ms "
              f"(ratio {g / s:.3f} < 0.2), all True: {all(v is True for v in values)}")


def test_converter_soundness_on_random_specs():
    rng = random.Random(20261016)
    runs = violations = deadlocks = 0
    for _ in range(10):
        threads = random_program(rng)
        spec = random_spec(rng, threads, max_events=6, max_constraints=8)
        assert not [d for d in lint(spec) if d.code == "CyclicConstraints"]
        bound = il.bind(convert(spec), sites=threads, monitor=FAST_MONITOR)
        for _ in range(50):
            report = bound.run(program, threads)
            runs += 1
            if report.deadlocked:
                deadlocks += 1
                continue
            if not report.passed or oracle_violations(spec, report.value):
                violations += 1
    criterion(5, "converted random specs enforce every constraint",
              violations == 0 and deadlocks == 0,
              f"{runs} runs over 10 specs, {violations} violations, {deadlocks} deadlocks")


def test_deadlock_detection():
    fx = get_fixture("two_threads")
    bound = il.bind(parse_schedule(CYCLE_SCHEDULE), sites=fx.sites, monitor=FAST_MONITOR)
    bound_limit = FAST_MONITOR.report_bound
    detected = 0
    worst = 0.0
    for _ in range(20):
        report = bound.run(fx)
        if report.deadlocked and report.verdict.threads == {"t1", "t2"}:
            worst = max(worst, report.verdict.elapsed)
            detected += report.verdict.elapsed <= bound_limit
    false_positives = 0
    healthy = 0
    for name in ["shared_memory", "unsafe_append", "unsafe_addall", "long_task", "two_threads"]:
        hfx, hbound = gated(name, FAST_MONITOR)
        for _ in range(50):
            healthy += 1
            false_positives += hbound.run(hfx).deadlocked
    criterion(6, "deadlock reported in time, never on healthy runs",
              detected == 20 and false_positives == 0,
              f"{detected}/20 cycles within {bound_limit:.2f} s (worst {worst:.3f} s), "
              f"{false_positives}/{healthy} false positives")


def _median_wall(fx, bound, n):
    return statistics.median(bound.run(fx).wall_time for _ in range(n))


def test_enforcement_overhead():
    ratios = {}
    for name in ["shared_memory", "unsafe_append", "unsafe_addall"]:
        fx, g = gated(name)
        _, u = ungated(name)
        # warm both paths before measuring
        _median_wall(fx, g, 20)
        _median_wall(fx, u, 20)
        ratios[name] = _median_wall(fx, g, 200) / _median_wall(fx, u, 200)
    geo = math.exp(statistics.mean(math.log(r) for r in ratios.values()))
    detail = ", ".join(f"{k} {v:.2f}" for k, v in ratios.items())
    criterion(7, "gated/ungated wall-time ratio", geo <= 2.0,
              f"geometric mean {geo:.2f} (<= 2.0); {detail}")


def test_pass_through_and_probe_cost():
    escaped = []
    for name in ["shared_memory", "unsafe_append", "unsafe_addall", "long_task", "two_threads"]:
        fx, plain = ungated(name)
        for _ in range(50):
            value = plain.run(fx).value
            if value not in fx.ungated_outcomes:
                escaped.append((name, value))

    batch, batches = 1000, 1000
    per_hit = []

    def measure():
        probe = il.probe
        clock = time.perf_counter_ns
        for _ in range(batches):
            run.engine.use_trace(EventTrace())
            started = clock()
            for _ in range(batch):
                probe("hot@1")
            per_hit.append((clock() - started) / batch)

    run = il.bind(None, sites=["hot@1"])
    report = run.run(measure)
    assert report.passed, report.reason
    median = statistics.median(per_hit)
    criterion(8, "empty schedule is transparent and cheap",
              not escaped and median < 1000,
              f"{len(escaped)} outcomes outside the ungated sets; "
              f"median {median:.0f} ns per hit over {batch * batches} hits (< 1000 ns)")
