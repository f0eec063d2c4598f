"""Deterministic thread-ordering enforcement for concurrency tests.

Place ``probe("unit@label")`` calls in the code under test, declare gates at
those sites in a schedule, and run the test through a bound harness: every
run follows the declared ordering.
"""

from .errors import (
    CallbackPanicked,
    ConfigurationFrozen,
    DeadlockReported,
    DuplicateAttachment,
    DuplicateGateId,
    InterleaveError,
    NotABarrier,
    ParseError,
    UndeclaredEvent,
    UnknownGate,
    UnknownProbeSite,
    UnknownSite,
    UnsupportedManualOpen,
    ValidationFailed,
)
from .gates import (
    ActionGate,
    Barrier,
    BarrierGate,
    Condition,
    Gate,
    GateRegistry,
    GateState,
    HitContext,
    HitCount,
    HostCallback,
    OpenAction,
    Sequence,
    SimpleGate,
    WaitOn,
)
from .harness import BoundRun, Harness, Outcome, RunReport, bind
from .monitor import DeadlockMonitor, DeadlockVerdict, MonitorConfig, RunState
from .probes import ProbeEngine, ProbeSite
from .runtime import join, mark, open, probe, spawn, wait
from .schedule import GateDecl, Schedule, load_schedule, parse_schedule
from .trace import EventPattern, EventTrace, VerificationResult, verify_order

__version__ = "0.1.0"
