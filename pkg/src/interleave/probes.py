"""Named probe sites: the locations gates are attached to.

Code under test calls ``engine.probe("unit@label")`` (usually through
:func:`interleave.probe`).  The hitting thread bumps the site's counter,
records a hit, then evaluates every attached gate's condition itself before
returning to the instruction after the probe.  Other threads keep running.
"""

from __future__ import annotations

import threading

from .errors import ConfigurationFrozen, DuplicateAttachment, UnknownSite
from .gates import Gate, GateRegistry, HitContext
from .trace import HIT, PASS, EventTrace, _names, thread_name


class ProbeSite:
    __slots__ = ("site_id", "hits", "attached")

    def __init__(self, site_id: str):
        self.site_id = site_id
        self.hits = 0
        self.attached: list[Gate] = []

    @property
    def hit_counter(self) -> int:
        return self.hits

    @property
    def gate_ids(self) -> list[str]:
        return [g.id for g in self.attached]

    def __repr__(self):
        return f"<ProbeSite {self.site_id!r} hits={self.hits} gates={self.gate_ids}>"


class ProbeEngine:
    """Site table plus the hit/dispatch hook.

    ``strict`` decides what a probe at an unregistered site does: raise
    :class:`UnknownSite` in the hitting thread, or pass straight through.
    """

    def __init__(self, trace: EventTrace | None = None, strict: bool = False):
        self.trace = trace if trace is not None else EventTrace()
        self.strict = strict
        self.gates = GateRegistry(self, self.trace)
        self._sites: dict[str, ProbeSite] = {}
        self._lock = threading.Lock()
        self._frozen = False
        self._local = threading.local()

    def register_site(self, site_id: str) -> ProbeSite:
        if not isinstance(site_id, str) or not site_id:
            raise ValueError("probe site id must be a non-empty string")
        with self._lock:
            site = self._sites.get(site_id)
            if site is None:
                if self._frozen:
                    raise ConfigurationFrozen(f"cannot register site {site_id!r} during a bound run")
                site = self._sites[site_id] = ProbeSite(site_id)
            return site

    def has_site(self, site_id: str) -> bool:
        return site_id in self._sites

    def site(self, site_id: str) -> ProbeSite:
        try:
            return self._sites[site_id]
        except KeyError:
            raise UnknownSite(site_id) from None

    @property
    def sites(self) -> list[ProbeSite]:
        return list(self._sites.values())

    def attach(self, site_id: str, gate_id: str) -> None:
        with self._lock:
            if self._frozen:
                raise ConfigurationFrozen("cannot attach gates during a bound run")
            site = self.site(site_id)
            gate = self.gates.get(gate_id)
            if gate in site.attached:
                raise DuplicateAttachment(f"gate {gate_id!r} already attached to {site_id!r}")
            site.attached.append(gate)

    def freeze(self) -> None:
        self._frozen = True
        self.gates.freeze()

    def use_trace(self, trace: EventTrace) -> None:
        self.trace = trace
        self.gates.trace = trace

    def reset(self) -> None:
        """Zero every hit counter and reopen nothing: gates go back to Closed."""
        with self.trace.lock:
            for site in self._sites.values():
                site.hits = 0
        self.gates.reset()

    def probe(self, site_id: str) -> None:
        site = self._sites.get(site_id)
        if site is None:
            if self.strict:
                raise UnknownSite(site_id)
            return
        try:
            name = _names.name
        except AttributeError:
            name = thread_name()
        trace = self.trace
        lock = trace.lock
        # explicit acquire/release: measurably cheaper than `with` per hit
        lock.acquire()
        try:
            site.hits = ordinal = site.hits + 1
            events = trace._events
            index = len(events)
            events.append((index, name, HIT, site_id, ordinal))
        finally:
            lock.release()
        if site.attached:
            self._dispatch(site, name, ordinal, index)

    def _dispatch(self, site: ProbeSite, name: str, ordinal: int, index: int) -> None:
        active = getattr(self._local, "active", None)
        if active is None:
            active = self._local.active = set()
        # condition code re-hitting its own site is not intercepted again
        if site.site_id in active:
            return
        ctx = HitContext(site.site_id, name, ordinal, index)
        active.add(site.site_id)
        try:
            for gate in site.attached:
                gate.condition.evaluate(self.gates, ctx)
        finally:
            active.discard(site.site_id)
        self.trace.append(name, PASS, site.site_id, ordinal)
