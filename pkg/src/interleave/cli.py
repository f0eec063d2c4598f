"""``interleave`` command line: run, stress, convert, lint, list-fixtures.

Exit codes: 0 pass, 1 test failure, 2 deadlock, 64 usage error,
65 malformed input file.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from collections import Counter
from pathlib import Path

from . import converter
from .errors import ParseError, UndeclaredEvent, ValidationFailed
from .fixtures import FIXTURES, get_fixture
from .harness import Harness, Outcome
from .monitor import MonitorConfig
from .schedule import load_schedule

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_DEADLOCK = 2
EXIT_USAGE = 64
EXIT_DATAERR = 65

ENV_TIMEOUT = "INTERLEAVE_DEADLOCK_TIMEOUT"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="interleave", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    run = sub.add_parser("run", help="run a fixture under a schedule file")
    run.add_argument("--schedule", required=True, type=Path)
    run.add_argument("--test", required=True)
    run.add_argument("--repeat", type=int, default=1)
    run.add_argument("--deadlock-timeout", type=float, default=None, metavar="SECONDS")
    run.add_argument("--param", action="append", default=[], metavar="KEY=VALUE")
    run.add_argument("--trace", type=Path, help="write the last run's trace here")
    run.add_argument("-v", "--verbose", action="store_true", help="print every run's report")

    stress = sub.add_parser("stress", help="run a fixture without gates, print the outcome histogram")
    stress.add_argument("--test", required=True)
    stress.add_argument("--repeat", type=int, default=1000)
    stress.add_argument("--deadlock-timeout", type=float, default=None, metavar="SECONDS")
    stress.add_argument("--param", action="append", default=[], metavar="KEY=VALUE")

    conv = sub.add_parser("convert", help="compile an ordering spec into a schedule")
    conv.add_argument("spec", type=Path)
    conv.add_argument("-o", "--output", type=Path)

    lint = sub.add_parser("lint", help="check an ordering spec (.ospec) or schedule (.isched)")
    lint.add_argument("file", type=Path)
    lint.add_argument("--test", help="fixture whose thread layout feeds the schedule cycle check")

    sub.add_parser("list-fixtures", help="list built-in fixtures")
    return parser


def _timeout(args) -> float:
    if args.deadlock_timeout is not None:
        value = args.deadlock_timeout
    elif os.environ.get(ENV_TIMEOUT):
        try:
            value = float(os.environ[ENV_TIMEOUT])
        except ValueError:
            raise UsageError(f"{ENV_TIMEOUT} must be a number of seconds") from None
    else:
        return MonitorConfig().quiescence_timeout
    if value <= 0:
        raise UsageError("deadlock timeout must be positive")
    return value


def _monitor(args) -> MonitorConfig:
    timeout = _timeout(args)
    return MonitorConfig(timeout, min(MonitorConfig.poll_interval, timeout / 4))


def _params(pairs) -> dict:
    out = {}
    for pair in pairs:
        key, sep, raw = pair.partition("=")
        if not sep or not key:
            raise UsageError(f"--param expects KEY=VALUE, got {pair!r}")
        try:
            out[key] = json.loads(raw)
        except json.JSONDecodeError:
            out[key] = raw
    return out


def _fixture(name):
    try:
        return get_fixture(name)
    except KeyError as exc:
        raise UsageError(exc.args[0]) from None


def _histogram(reports, out) -> None:
    counts = Counter((r.outcome.value, repr(r.value) if r.passed else r.reason) for r in reports)
    width = max(len(str(c)) for c in counts.values())
    for (outcome, detail), count in counts.most_common():
        print(f"{count:>{width}}  {outcome}  {detail}", file=out)


def _exit_code(reports) -> int:
    outcomes = {r.outcome for r in reports}
    if Outcome.DEADLOCKED in outcomes:
        return EXIT_DEADLOCK
    if Outcome.FAILED in outcomes:
        return EXIT_FAIL
    return EXIT_OK


def cmd_run(args, out) -> int:
    if args.repeat < 1:
        raise UsageError("--repeat must be >= 1")
    fixture = _fixture(args.test)
    schedule = load_schedule(args.schedule)
    if schedule.test_id and schedule.test_id != fixture.name:
        raise UsageError(f"schedule is for test {schedule.test_id!r}, not {fixture.name!r}")
    params = {**fixture.params, **_params(args.param)}
    bound = Harness(_monitor(args)).bind(schedule, sites=fixture.sites)
    for w in bound.warnings:
        print(f"{args.schedule}: {w}", file=sys.stderr)
    reports = []
    for i in range(args.repeat):
        report = bound.run(fixture.entry, **params)
        reports.append(report)
        if args.verbose or args.repeat == 1:
            print(f"run {i + 1}: {report.summary()}", file=out)
        if report.deadlocked:
            for b in report.verdict.blocked:
                print(f"  blocked: {b.thread} on {b.gate} ({b.gate_state})", file=out)
    if args.trace:
        args.trace.write_text(reports[-1].trace.dump(), encoding="utf-8")
    print(f"{fixture.name}: {args.repeat} run(s)", file=out)
    _histogram(reports, out)
    return _exit_code(reports)


def cmd_stress(args, out) -> int:
    if args.repeat < 1:
        raise UsageError("--repeat must be >= 1")
    fixture = _fixture(args.test)
    params = {**fixture.params, **_params(args.param)}
    bound = Harness(_monitor(args)).bind(None, sites=fixture.sites)
    reports = [bound.run(fixture.entry, **params) for _ in range(args.repeat)]
    print(f"{fixture.name}: {args.repeat} ungated run(s)", file=out)
    _histogram(reports, out)
    return _exit_code(reports)


def cmd_convert(args, out) -> int:
    spec = converter.load_spec(args.spec)
    for d in converter.lint(spec):
        print(f"{args.spec}: {d}", file=sys.stderr)
    text = converter.convert(spec).to_text()
    if args.output:
        args.output.write_text(text, encoding="utf-8")
    else:
        out.write(text)
    return EXIT_OK


def cmd_lint(args, out) -> int:
    if args.file.suffix == ".isched":
        schedule = load_schedule(args.file)
        order = _fixture(args.test).sites if args.test else None
        diagnostics = schedule.validate() or schedule.lint(order)
    else:
        diagnostics = converter.lint(converter.load_spec(args.file))
    for d in diagnostics:
        print(f"{args.file}: {d}", file=out)
    if not diagnostics:
        print(f"{args.file}: ok", file=out)
    return EXIT_OK


def cmd_list(args, out) -> int:
    for name in sorted(FIXTURES):
        fixture = get_fixture(name)
        print(f"{name:24} {fixture.description}", file=out)
    return EXIT_OK


COMMANDS = {
    "run": cmd_run,
    "stress": cmd_stress,
    "convert": cmd_convert,
    "lint": cmd_lint,
    "list-fixtures": cmd_list,
}


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    try:
        args = build_parser().parse_args(argv)
        return COMMANDS[args.command](args, out)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except ParseError as exc:
        print(exc, file=sys.stderr)
        return EXIT_DATAERR
    except (ValidationFailed, UndeclaredEvent) as exc:
        detail = exc.diagnostics if isinstance(exc, ValidationFailed) else [exc]
        for d in detail:
            print(f"error: {d}", file=sys.stderr)
        return EXIT_DATAERR
    except OSError as exc:
        print(f"interleave: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
