"""Instrumented analogs of classic hard-to-reproduce concurrency bugs.

Each fixture is a small self-contained program with probe sites at the
lines that matter, the schedule that forces its bug, and the outcomes it
can produce when left alone.  Site labels keep the original listing line
numbers purely as mnemonics.
"""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass, field
from typing import Callable, Container, Mapping

from .runtime import join, probe, spawn
from .schedule import Schedule, parse_schedule

BOUNDS_VIOLATION = "bounds-violation"
NULL_LAST = "null-last-element"
OK = "ok"


@dataclass
class Fixture:
    name: str
    entry: Callable[..., object]
    sites: Mapping[str, list[str]]
    gated_schedule: str
    gated_outcome: object
    ungated_outcomes: Container
    description: str = ""
    params: dict = field(default_factory=dict)

    def schedule(self) -> Schedule:
        return parse_schedule(self.gated_schedule, f"<{self.name}>")

    def __call__(self, **overrides):
        return self.entry(**{**self.params, **overrides})


# -- shared memory: result depends on which worker runs first -----------------


class SharedMemoryAccess:
    def __init__(self):
        self.multiplier = -1
        self.result = 0

    def worker1(self):
        probe("worker1@07")
        self.multiplier = 1

    def worker2(self):
        probe("worker2@13")
        self.result = self.multiplier * 10
        probe("worker2@14")

    def calculate(self):
        t1 = spawn(self.worker1, name="worker1")
        t2 = spawn(self.worker2, name="worker2")
        join(t1, t2)
        return self.result


def shared_memory() -> int:
    return SharedMemoryAccess().calculate()


SHARED_MEMORY_SCHEDULE = """\
# worker1 may only write the multiplier once worker2 has computed the result
test shared_memory
gate Worker2Done simple at worker1@07 wait
gate Worker2Exit action at worker2@14 open Worker2Done
order worker2@13 -> worker1@07
"""

# the mirror image: worker2 computes only after worker1's write
SHARED_MEMORY_REVERSED = """\
test shared_memory_reversed
gate Worker1Done simple at worker2@13 wait
gate Worker1Exit action at worker1@08 open Worker1Done
order worker1@07 -> worker2@13
"""


def fixture_shared_memory() -> Fixture:
    return Fixture(
        "shared_memory",
        shared_memory,
        {"worker1": ["worker1@07"], "worker2": ["worker2@13", "worker2@14"]},
        SHARED_MEMORY_SCHEDULE,
        -10,
        frozenset({10, -10}),
        "two workers race on a multiplier; -10 means the result was computed first",
    )


# the reversed schedule opens at worker1@08, which needs its own probe
class _SharedMemoryWithExit(SharedMemoryAccess):
    def worker1(self):
        probe("worker1@07")
        self.multiplier = 1
        probe("worker1@08")


def shared_memory_reversible() -> int:
    return _SharedMemoryWithExit().calculate()


def fixture_shared_memory_reversed() -> Fixture:
    return Fixture(
        "shared_memory_reversed",
        shared_memory_reversible,
        {"worker1": ["worker1@07", "worker1@08"], "worker2": ["worker2@13", "worker2@14"]},
        SHARED_MEMORY_REVERSED,
        10,
        frozenset({10, -10}),
        "shared memory fixture with the opposite ordering enforced",
    )


# -- growable buffer: append reads the source length, then copies -------------


class BoundsViolation(IndexError):
    pass


class GrowableBuffer:
    """Character buffer with a non-atomic append, like a synchronized-per-call
    string builder whose append(other) reads other's length before copying."""

    def __init__(self, text: str = ""):
        self.value = list(text)
        self.count = len(text)

    def length(self) -> int:
        return self.count

    def set_length(self, n: int) -> None:
        if n < self.count:
            del self.value[n:]
        else:
            self.value.extend("\0" * (n - self.count))
        self.count = n

    def get_chars(self, begin: int, end: int, dst: list, dst_begin: int) -> None:
        if end > self.count:
            raise BoundsViolation(f"end {end} > length {self.count}")
        dst[dst_begin:dst_begin + end - begin] = self.value[begin:end]

    def append(self, other: "GrowableBuffer") -> "GrowableBuffer":
        length = other.length()
        probe("append@06")
        new_count = self.count + length
        if new_count > len(self.value):
            self.value.extend("\0" * (new_count - len(self.value)))
        probe("append@10")
        other.get_chars(0, length, self.value, self.count)
        self.count = new_count
        return self

    def __str__(self):
        return "".join(self.value[: self.count])


def unsafe_append(shrink_to: int = 3) -> str:
    sb1 = GrowableBuffer("original data")
    sb2 = GrowableBuffer("appended data")
    worker = spawn(sb1.append, sb2, name="worker")
    probe("test@15")
    sb2.set_length(shrink_to)
    probe("test@16")
    try:
        join(worker)
    except BoundsViolation:
        return BOUNDS_VIOLATION
    return OK


UNSAFE_APPEND_SCHEDULE = """\
# shrink the source between the worker's length read and its copy
test unsafe_append
gate afterget simple at test@15 wait
gate afterget_open action at append@06 open afterget
gate afterset simple at append@10 wait
gate afterset_open action at test@16 open afterset
"""


def fixture_unsafe_append() -> Fixture:
    return Fixture(
        "unsafe_append",
        unsafe_append,
        {"worker": ["append@06", "append@10"], "test": ["test@15", "test@16"]},
        UNSAFE_APPEND_SCHEDULE,
        BOUNDS_VIOLATION,
        frozenset({OK, BOUNDS_VIOLATION}),
        "append copies a source shrunk after its length was read",
        {"shrink_to": 3},
    )


# -- dynamic array: copy, then a separate size increment ----------------------


class DynamicArray:
    def __init__(self):
        self.elements: list = [None] * 4
        self.size = 0

    def ensure_capacity(self, n: int) -> None:
        if n > len(self.elements):
            self.elements.extend([None] * max(n - len(self.elements), len(self.elements)))

    def add_all(self, items) -> bool:
        a = list(items)
        num_new = len(a)
        self.ensure_capacity(self.size + num_new)
        self.elements[self.size:self.size + num_new] = a
        probe("addAll@08")
        self.size += num_new
        return num_new != 0

    def get(self, index: int):
        if not 0 <= index < self.size:
            raise IndexError(index)
        return self.elements[index]

    def __len__(self):
        return self.size


def unsafe_addall() -> str:
    tested = DynamicArray()
    w1 = spawn(tested.add_all, ["data"], name="worker1")
    w2 = spawn(tested.add_all, ["data"], name="worker2")
    join(w1, w2)
    return OK if tested.get(len(tested) - 1) is not None else NULL_LAST


UNSAFE_ADDALL_SCHEDULE = """\
# both workers copy before either bumps the size
test unsafe_addall
gate after_copy barrier(2) at addAll@08
"""


def fixture_unsafe_addall() -> Fixture:
    return Fixture(
        "unsafe_addall",
        unsafe_addall,
        {"worker1": ["addAll@08"], "worker2": ["addAll@08"]},
        UNSAFE_ADDALL_SCHEDULE,
        NULL_LAST,
        frozenset({OK, NULL_LAST}),
        "two concurrent add_all calls land in the same slot",
    )


# -- long running task: block exactly until the job is done --------------------


class LongRunningTask:
    MAX_TIME = 1.0

    def __init__(self, duration: float):
        self.duration = duration
        self.is_done = False

    def run(self):
        if self.duration:
            time.sleep(self.duration)
        self.is_done = True
        probe("task@33")

    def start(self):
        return spawn(self.run, name="task")


def long_task(duration: float = 0.05) -> bool:
    task = LongRunningTask(duration)
    worker = task.start()
    probe("test@10")
    done = task.is_done
    join(worker)
    return done


def long_task_sleeping(duration: float = 0.05, max_time: float = LongRunningTask.MAX_TIME) -> bool:
    """The conventional version: sleep for the worst case, then check."""
    task = LongRunningTask(duration)
    worker = task.start()
    time.sleep(max_time)
    done = task.is_done
    join(worker)
    return done


LONG_TASK_SCHEDULE = """\
test long_task
gate task_done simple at test@10 wait
gate task_finished action at task@33 open task_done
"""


def fixture_long_task() -> Fixture:
    return Fixture(
        "long_task",
        long_task,
        {"task": ["task@33"], "test": ["test@10"]},
        LONG_TASK_SCHEDULE,
        True,
        frozenset({True, False}),
        "checks a background job's status exactly when it completes",
        {"duration": 0.05},
    )


# -- configurable program: threads walking through lists of sites --------------


class Interleavings:
    """Every trace a program fixture can record without enforcement."""

    def __init__(self, threads: Mapping[str, list[str]]):
        self.threads = {name: list(sites) for name, sites in threads.items()}

    def __contains__(self, value) -> bool:
        try:
            per_thread: dict[str, list] = {name: [] for name in self.threads}
            for thread, site, phase in value:
                per_thread[thread].append((site, phase))
        except (TypeError, ValueError, KeyError):
            return False
        return all(
            per_thread[name] == [(s, p) for s in sites for p in ("arrive", "done")]
            for name, sites in self.threads.items()
        )


def program(threads: Mapping[str, list[str]], work: float = 0.0):
    """Run one thread per entry; each probes its sites in order.

    Returns the log of ``(thread, site, "arrive"|"done")`` records written
    just before and just after each probe, under a lock.  It is kept apart
    from the event trace so it can serve as an independent witness.
    """
    log: list[tuple[str, str, str]] = []
    lock = threading.Lock()

    def body(name, sites):
        for site in sites:
            with lock:
                log.append((name, site, "arrive"))
            probe(site)
            with lock:
                log.append((name, site, "done"))
            if work:
                time.sleep(work)

    workers = [spawn(body, name, list(sites), name=name) for name, sites in threads.items()]
    join(*workers)
    return tuple(log)


TWO_THREADS = {"t1": ["t1@01", "t1@02"], "t2": ["t2@01", "t2@02"]}

# each thread waits for a gate the other opens only after its own wait
CYCLE_SCHEDULE = """\
test two_threads
gate g1 simple at t1@01 wait
gate g2 simple at t2@01 wait
gate open_g2 action at t1@02 open g2
gate open_g1 action at t2@02 open g1
"""

HANDOFF_SCHEDULE = """\
test two_threads
gate t1_done simple at t2@01 wait
gate t1_exit action at t1@02 open t1_done
order t1@02 -> t2@01
"""


def fixture_program(threads: Mapping[str, list[str]] | None = None, name: str = "two_threads",
                    schedule: str = HANDOFF_SCHEDULE) -> Fixture:
    threads = {k: list(v) for k, v in (threads or TWO_THREADS).items()}

    def entry(**params):
        return program(threads, **params)

    # the log interleaves freely around the enforced points, so there is no
    # single gated value; callers check ordering through the log instead
    return Fixture(
        name, entry, threads, schedule, None, Interleavings(threads),
        "threads each traversing their own list of probe sites",
    )


FIXTURES = {
    "shared_memory": fixture_shared_memory,
    "shared_memory_reversed": fixture_shared_memory_reversed,
    "unsafe_append": fixture_unsafe_append,
    "unsafe_addall": fixture_unsafe_addall,
    "long_task": fixture_long_task,
    "two_threads": fixture_program,
}


def get_fixture(name: str) -> Fixture:
    try:
        return FIXTURES[name]()
    except KeyError:
        raise KeyError(f"unknown fixture {name!r}; known: {', '.join(sorted(FIXTURES))}") from None
