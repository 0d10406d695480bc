"""Command-line front end.

Reports go to standard output as JSON (or to ``--json PATH``); human-readable
progress and diagnostics go to standard error. Exit codes: 0 ok, 1 check
failure, 2 parse or usage error, 3 step budget exhausted.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .index import EntailmentConfig
from .parser import ParseError, parse_process, parse_program
from .pretty import pretty
from .program import BindingError, check, corpus_path, run
from .sem import parse_policy
from .syntax import canonicalize, erase_ticks, reassemble

EXIT_OK, EXIT_CHECK, EXIT_USAGE, EXIT_BUDGET = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="picost", description="Span and work analysis for a tick-instrumented pi-calculus.")
    ap.add_argument("-v", "--verbose", action="store_true", help="log entailment decisions to stderr")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("file", help="program file, or the name of a bundled example (e.g. mergesort)")
        p.add_argument("--json", metavar="PATH", help="write the JSON report here instead of stdout")

    c = sub.add_parser("check", help="check declarations in a type system")
    common(c)
    c.add_argument("--mode", choices=("io", "span", "work"), default="span")
    c.add_argument("--b-refute", type=int, default=16, metavar="N", help="refutation search bound (default 16)")

    r = sub.add_parser("run", help="run main under a scheduling policy and measure its cost")
    common(r)
    r.add_argument("--mode", choices=("span", "work"), default="span")
    r.add_argument("--policy", default="deterministic", help="deterministic | random:SEED | exhaustive:N")
    r.add_argument("--max-steps", type=int, default=100_000, metavar="N")
    r.add_argument("--bind", action="append", default=[], metavar="NAME=VALUE", help="value for a parameter of main")
    r.add_argument("--any-interleaving", action="store_true",
                   help="with an exhaustive policy, also let time steps fire before reductions finish")

    for name, what in (("canon", "print the canonical form of main"), ("erase", "print main with ticks removed")):
        e = sub.add_parser(name, help=what)
        common(e)
    return ap


def _read(path: str):
    p = Path(path)
    if not p.exists():
        q = corpus_path(path)
        if not q.exists():
            raise FileNotFoundError(f"no such file or bundled example: {path}")
        p = q
    return p.read_text()


def _emit(report: dict, dest: str | None) -> None:
    text = json.dumps(report, indent=2, sort_keys=True)
    if dest:
        Path(dest).write_text(text + "\n")
    else:
        print(text)


def cmd_check(args) -> int:
    program = parse_program(_read(args.file))
    cfg = EntailmentConfig(b_refute=args.b_refute, symbols=program.functions, trace=args.verbose)
    verdicts = check(program, args.mode, cfg)
    for line in cfg.log:
        print(f"entails: {line}", file=sys.stderr)
    for v in verdicts:
        line = f"{'ok  ' if v.ok else 'FAIL'} {v.name}"
        if v.synthesized is not None:
            line += f"  synthesized {v.synthesized}"
        if v.declared is not None:
            line += f"  declared {v.declared}"
        print(line, file=sys.stderr)
        if v.message:
            print(f"     {v.message}", file=sys.stderr)
    ok = all(v.ok for v in verdicts)
    _emit({"mode": args.mode, "ok": ok, "declarations": [v.to_json() for v in verdicts]}, args.json)
    return EXIT_OK if ok else EXIT_CHECK


def _bindings(items: list[str]) -> dict[str, str]:
    out = {}
    for item in items:
        name, sep, value = item.partition("=")
        if not sep or not name:
            raise BindingError(f"--bind expects NAME=VALUE, got {item!r}")
        out[name.strip()] = value.strip()
    return out


def cmd_run(args) -> int:
    program = parse_program(_read(args.file))
    try:
        policy = parse_policy(args.policy)
    except ValueError as err:
        print(f"picost: {err}", file=sys.stderr)
        return EXIT_USAGE
    report = run(program, args.mode, policy, args.max_steps, _bindings(args.bind), tick_last=not args.any_interleaving)
    out = report.to_json()
    out["mode"] = args.mode
    print(f"{args.mode}: span={report.span} work={report.work} terminated={report.terminated}", file=sys.stderr)
    _emit(out, args.json)
    if not report.terminated:
        print("picost: step budget exhausted; the report is partial", file=sys.stderr)
        return EXIT_BUDGET
    return EXIT_OK


def _main_process(args):
    """The file's main process; a file holding just a process is accepted too."""
    text = _read(args.file)
    try:
        program = parse_program(text)
    except ParseError:
        return parse_process(text)
    if program.main is None:
        raise BindingError("the program has no main process")
    return program.main


def cmd_canon(args) -> int:
    text = pretty(reassemble(canonicalize(_main_process(args))))
    print(text)
    if args.json:
        _emit({"canonical": text}, args.json)
    return EXIT_OK


def cmd_erase(args) -> int:
    text = pretty(erase_ticks(_main_process(args)))
    print(text)
    if args.json:
        _emit({"erased": text}, args.json)
    return EXIT_OK


COMMANDS = {"check": cmd_check, "run": cmd_run, "canon": cmd_canon, "erase": cmd_erase}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (ParseError, BindingError, FileNotFoundError, ValueError) as err:
        print(f"picost: {err}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
