import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from interleave import ParseError
from interleave.schedule import (
    GateDecl,
    Schedule,
    action,
    barrier,
    find_cycle,
    load_schedule,
    parse_schedule,
    simple,
)

from pathlib import Path

SCHEDULES = Path(__file__).resolve().parent.parent / "schedules"


def test_parse_all_gate_forms():
    sched = parse_schedule(
        """
        # a header comment
        test shared_memory
        gate Worker2Done simple at worker1@07 wait
        gate Worker2Exit action at worker2@14 open Worker2Done
        gate after_copy barrier(2) at addAll@08
        gate fifth simple at loop@03 on-hit 5 wait
        order worker2@13 -> worker1@07
        """
    )
    assert sched.test_id == "shared_memory"
    assert sched.metadata == "a header comment"
    assert sched.gates == [
        simple("Worker2Done", "worker1@07"),
        action("Worker2Exit", "worker2@14", "Worker2Done"),
        barrier("after_copy", "addAll@08", 2),
        simple("fifth", "loop@03", on_hit=5),
    ]
    assert sched.orders == [("worker2@13", "worker1@07")]


def test_whitespace_is_insignificant():
    a = parse_schedule("gate b barrier(2) at s@1\norder x@1 -> y@1\n")
    b = parse_schedule("  gate\tb   barrier( 2 )  at s@1   # trailing\norder x@1->y@1\n")
    assert a.gates == b.gates and a.orders == b.orders


def test_errors_carry_line_numbers_and_all_lines_are_reported():
    text = "test t\ngate g simple at\ngate h barrier(0) at s@1\nfrobnicate\n"
    with pytest.raises(ParseError) as info:
        parse_schedule(text, "bad.isched")
    lines = [line for line, _ in info.value.errors]
    assert lines == [2, 3, 4]
    assert str(info.value).startswith("bad.isched:2: ")


def test_duplicate_test_line_is_an_error():
    with pytest.raises(ParseError):
        parse_schedule("test a\ntest b\n")


def test_shipped_schedules_parse_and_validate():
    files = sorted(SCHEDULES.glob("*.isched"))
    assert files
    for path in files:
        sched = load_schedule(path)
        assert sched.validate() == [], path.name


def test_validate_unresolved_reference():
    sched = Schedule(gates=[action("a", "s@1", "missing")])
    (diag,) = sched.validate()
    assert diag.code == "UnresolvedGate" and "missing" in diag.message


def test_validate_duplicate_and_manual_barrier_open():
    sched = Schedule(gates=[
        barrier("b", "s@1", 2),
        action("o", "s@2", "b"),
        simple("o", "s@3"),
    ])
    codes = {d.code for d in sched.validate()}
    assert codes == {"DuplicateGateId", "UnsupportedManualOpen"}


def test_validate_bad_fields():
    sched = Schedule(gates=[GateDecl("", "simple", ""), GateDecl("x", "weird", "s@1"),
                            GateDecl("p", "barrier", "s@1", parties=0)])
    codes = {d.code for d in sched.validate()}
    assert {"EmptyGateId", "EmptySite", "UnknownKind", "BadParties"} <= codes


def test_lint_finds_cross_thread_cycle():
    sched = parse_schedule((SCHEDULES / "cycle.isched").read_text())
    program = {"t1": ["t1@01", "t1@02"], "t2": ["t2@01", "t2@02"]}
    (diag,) = sched.lint(program)
    assert diag.code == "CyclicSchedule" and diag.severity == "warning"


def test_lint_accepts_acyclic():
    sched = load_schedule(SCHEDULES / "shm.isched")
    assert sched.lint({"worker1": ["worker1@07"], "worker2": ["worker2@13", "worker2@14"]}) == []


def test_find_cycle():
    assert find_cycle({"a": {"b"}, "b": set()}) is None
    cycle = find_cycle({"a": {"b"}, "b": {"a"}})
    assert cycle[0] == cycle[-1] and set(cycle) == {"a", "b"}


ident = st.from_regex(r"[A-Za-z_][A-Za-z0-9_]{0,8}", fullmatch=True)
site = st.builds(lambda u, n: f"{u}@{n:02d}", ident, st.integers(0, 99))
gate_decl = st.one_of(
    st.builds(simple, ident, site),
    st.builds(simple, ident, site, st.integers(1, 20)),
    st.builds(action, ident, site, ident),
    st.builds(barrier, ident, site, st.integers(1, 9)),
)


@settings(max_examples=100, deadline=None)
@given(st.lists(gate_decl, max_size=8), st.lists(st.tuples(site, site), max_size=4),
       st.one_of(st.just(""), ident))
def test_text_round_trip(gates, orders, test_id):
    sched = Schedule(test_id, gates, orders)
    again = parse_schedule(sched.to_text())
    assert (again.test_id, again.gates, again.orders) == (test_id, gates, orders)
