import random
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import interleave as il
from interleave import ParseError, UndeclaredEvent
from interleave.converter import OrderingSpec, convert, gate_name, lint, load_spec, parse_spec
from interleave.fixtures import fixture_program, get_fixture, program
from interleave.schedule import ACTION, SIMPLE

from .conftest import FAST_MONITOR
from .specgen import oracle_violations, random_program, random_spec

SCHEDULES = Path(__file__).resolve().parent.parent / "schedules"


def shm_spec():
    return OrderingSpec(
        {"computed": "worker2@14", "write": "worker1@07"}, [("computed", "write")], "shared_memory"
    )


def test_single_constraint_matches_hand_written_schedule():
    sched = convert(shm_spec())
    assert [(g.kind, g.site, g.target) for g in sched.gates] == [
        (SIMPLE, "worker1@07", None),
        (ACTION, "worker2@14", "write.after.computed"),
    ]
    assert sched.gates[0].id == gate_name("computed", "write")
    assert sched.orders == [("worker2@14", "worker1@07")]
    assert sched.validate() == []


def test_converted_schedule_behaves_like_hand_written():
    fx = get_fixture("shared_memory")
    bound = il.bind(convert(shm_spec()), sites=fx.sites)
    assert {bound.run(fx).value for _ in range(50)} == {-10}


def test_converted_long_task_file():
    fx = get_fixture("long_task")
    sched = convert(load_spec(SCHEDULES / "long_task.ospec"))
    report = il.bind(sched, sites=fx.sites).run(fx)
    assert report.passed and report.value is True


def test_empty_spec_is_empty_schedule():
    sched = convert(OrderingSpec())
    assert sched.gates == [] and sched.orders == []


def test_undeclared_event():
    spec = OrderingSpec({"a": "s@1"}, [("a", "ghost")])
    with pytest.raises(UndeclaredEvent):
        convert(spec)
    assert [d.code for d in lint(spec) if d.severity == "error"] == ["UndeclaredEvent"]


def test_waits_declared_before_opens():
    spec = OrderingSpec({"a": "t1@01", "b": "t2@01", "c": "t3@01"}, [("a", "b"), ("b", "c")])
    kinds = [g.kind for g in convert(spec).gates]
    assert kinds == [SIMPLE, SIMPLE, ACTION, ACTION]


def test_duplicate_constraints_collapse():
    spec = OrderingSpec({"a": "t1@01", "b": "t2@01"}, [("a", "b"), ("a", "b")])
    assert len(convert(spec).gates) == 2
    assert [d.code for d in lint(spec)] == ["DuplicateConstraint"]


def test_lint_flags_cycle_and_conversion_deadlocks():
    spec = load_spec(SCHEDULES / "cyclic.ospec")
    diags = lint(spec)
    assert [d.code for d in diags] == ["CyclicConstraints"]
    fx = fixture_program({"t1": ["t1@01"], "t2": ["t2@01"]})
    report = il.bind(convert(spec), sites=fx.sites, monitor=FAST_MONITOR).run(fx)
    assert report.deadlocked
    assert report.verdict.threads == {"t1", "t2"}


def test_lint_conflicting_roles_and_unused():
    spec = OrderingSpec({"a": "s@1", "b": "s@1", "c": "t@1"}, [("a", "b")])
    codes = {d.code for d in lint(spec)}
    assert codes == {"ConflictingSiteRoles", "UnusedEvent"}


def test_parse_spec():
    spec = parse_spec("test x\nevent a at t1@01\nevent b at t2@01\nbefore a->b  # why\n")
    assert spec == OrderingSpec({"a": "t1@01", "b": "t2@01"}, [("a", "b")], "x")


def test_parse_spec_errors_collected():
    with pytest.raises(ParseError) as info:
        parse_spec("event a at\nevent a at s@1\nevent a at s@2\nwhatever\n", "x.ospec")
    assert [line for line, _ in info.value.errors] == [1, 3, 4]


names = st.sampled_from(list("abcdef"))


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(names, names), max_size=8))
def test_size_law(pairs):
    spec = OrderingSpec({n: f"{n}@1" for n in "abcdef"}, pairs)
    assert len(convert(spec).gates) == 2 * len(set(pairs))


def test_random_specs_are_enforced():
    rng = random.Random(7)
    for _ in range(5):
        threads = random_program(rng)
        spec = random_spec(rng, threads)
        assert not [d for d in lint(spec) if d.code == "CyclicConstraints"]
        bound = il.bind(convert(spec), sites=threads, monitor=FAST_MONITOR)
        for _ in range(10):
            report = bound.run(program, threads)
            assert report.passed, report.reason
            assert oracle_violations(spec, report.value) == []


def test_oracle_detects_violation_in_log():
    spec = OrderingSpec({"a": "t1@01", "b": "t2@01"}, [("a", "b")])
    log = (("t2", "t2@01", "arrive"), ("t2", "t2@01", "done"),
           ("t1", "t1@01", "arrive"), ("t1", "t1@01", "done"))
    assert oracle_violations(spec, log) == ["a -> b"]
    assert oracle_violations(spec, log[2:] + log[:2]) == []
