"""Event trace recording and post-run ordering verification.

Every probe hit, gate block/unblock/open, barrier arrival and user mark is
appended to an :class:`EventTrace`.  The append counter, not a clock, gives
the total order: it is the order enforcement actually produced.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from typing import Iterable, Iterator, NamedTuple

HIT = "hit"
PASS = "pass"
BLOCK = "block"
UNBLOCK = "unblock"
OPEN = "open"
ARRIVE = "arrive"
MARK = "mark"

KINDS = (HIT, PASS, BLOCK, UNBLOCK, OPEN, ARRIVE, MARK)

# pseudo-kind for patterns: the moment a thread continues past a site
PROCEED = "proceed"


class Event(NamedTuple):
    index: int
    thread: str
    kind: str
    subject: str
    info: object = None

    def format(self) -> str:
        line = f"{self.index} {self.thread} {self.kind} {self.subject}"
        if self.info is not None:
            line += f" {self.info}"
        return line


_names = threading.local()


def thread_name() -> str:
    """Current thread's name, cached per thread (probes call this per hit)."""
    try:
        return _names.name
    except AttributeError:
        name = _names.name = threading.current_thread().name
        return name


def _token(name: str) -> str:
    return "_".join(name.split()) or "_"


class EventTrace:
    """Append-only, thread-safe event log.

    ``lock`` is exposed so the probe engine can bump a hit counter and append
    the matching event in one critical section.
    """

    def __init__(self):
        self.lock = threading.Lock()
        # raw tuples; Event objects are built on read to keep appends cheap
        self._events: list[tuple] = []

    def append(self, thread: str, kind: str, subject: str, info=None) -> int:
        with self.lock:
            return self.append_locked(thread, kind, subject, info)

    def append_locked(self, thread: str, kind: str, subject: str, info=None) -> int:
        events = self._events
        index = len(events)
        events.append((index, thread, kind, subject, info))
        return index

    def __len__(self) -> int:
        return len(self._events)

    def __iter__(self) -> Iterator[Event]:
        return iter(self.events())

    def __getitem__(self, index: int) -> Event:
        return Event(*self._events[index])

    def events(self) -> list[Event]:
        with self.lock:
            raw = list(self._events)
        return [Event(*e) for e in raw]

    def dump(self) -> str:
        """One event per line: ``idx thread kind subject [info]``."""
        return "".join(
            Event(e.index, _token(e.thread), e.kind, e.subject, e.info).format() + "\n"
            for e in self.events()
        )

    @classmethod
    def load(cls, text: str) -> "EventTrace":
        trace = cls()
        for lineno, line in enumerate(text.splitlines(), 1):
            if not line.strip():
                continue
            parts = line.split()
            if len(parts) not in (4, 5) or parts[2] not in KINDS:
                raise ValueError(f"line {lineno}: malformed trace record {line!r}")
            if int(parts[0]) != len(trace):
                raise ValueError(f"line {lineno}: index {parts[0]} out of sequence")
            info: object = None
            if len(parts) == 5:
                info = int(parts[4]) if parts[4].isdigit() else parts[4]
            trace.append(parts[1], parts[2], parts[3], info)
        return trace


@dataclass(frozen=True)
class EventPattern:
    """Matches trace events by kind, subject and optionally thread.

    The ``proceed`` kind matches the point where a thread continues past a
    probe site: the ``pass`` record written after gate dispatch, or the hit
    itself when the site had nothing to dispatch.
    """

    kind: str
    subject: str
    thread: str | None = None

    def __post_init__(self):
        if self.kind not in KINDS and self.kind != PROCEED:
            raise ValueError(f"unknown event kind {self.kind!r}")

    def matches(self, trace: Iterable[Event]) -> list[int]:
        events = list(trace)
        if self.kind == PROCEED:
            return _proceed_indices(events, self.subject, self.thread)
        return [
            e.index
            for e in events
            if e.kind == self.kind
            and e.subject == self.subject
            and (self.thread is None or e.thread == self.thread)
        ]

    def __str__(self):
        s = f"{self.kind}({self.subject})"
        return s if self.thread is None else f"{s}@{self.thread}"


def _proceed_indices(events, site, thread):
    passes = {
        (e.subject, e.info): e.index for e in events if e.kind == PASS and e.subject == site
    }
    found = []
    for e in events:
        if e.kind == HIT and e.subject == site and (thread is None or e.thread == thread):
            found.append(passes.get((site, e.info), e.index))
    return sorted(found)


def hit(site: str, thread: str | None = None) -> EventPattern:
    return EventPattern(HIT, site, thread)


def proceed(site: str, thread: str | None = None) -> EventPattern:
    return EventPattern(PROCEED, site, thread)


def site_order(before_site: str, after_site: str) -> tuple[EventPattern, EventPattern]:
    """The constraint an ``order a -> b`` schedule line denotes."""
    return hit(before_site), proceed(after_site)


PASSED = "pass"
FAILED = "fail"
INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class ConstraintResult:
    before: EventPattern
    after: EventPattern
    status: str
    # first offending `after` index, and the earliest `before` index if any
    violation: tuple[int, int | None] | None = None
    reason: str = ""

    @property
    def passed(self) -> bool:
        return self.status == PASSED

    def __str__(self):
        text = f"{self.before} -> {self.after}: {self.status}"
        if self.reason:
            text += f" ({self.reason})"
        return text


@dataclass
class VerificationResult:
    results: list[ConstraintResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    @property
    def failures(self) -> list[ConstraintResult]:
        return [r for r in self.results if r.status == FAILED]

    @property
    def inconclusive(self) -> list[ConstraintResult]:
        return [r for r in self.results if r.status == INCONCLUSIVE]

    def __bool__(self):
        return self.passed


def verify_order(trace, constraints) -> VerificationResult:
    """Check that every match of ``after`` is preceded by a match of ``before``.

    A pattern that matches nothing makes its constraint inconclusive rather
    than vacuously true, so a misspelled site id cannot slip through.
    """
    events = trace.events() if isinstance(trace, EventTrace) else list(trace)
    out = VerificationResult()
    for before, after in constraints:
        b = before.matches(events)
        a = after.matches(events)
        if not b or not a:
            missing = before if not b else after
            out.results.append(
                ConstraintResult(before, after, INCONCLUSIVE, reason=f"{missing} matches nothing")
            )
            continue
        first_before = b[0]
        bad = [i for i in a if i < first_before]
        if bad:
            out.results.append(
                ConstraintResult(
                    before, after, FAILED, (bad[0], first_before),
                    reason=f"{after} at {bad[0]} precedes first {before} at {first_before}",
                )
            )
        else:
            out.results.append(ConstraintResult(before, after, PASSED))
    return out
