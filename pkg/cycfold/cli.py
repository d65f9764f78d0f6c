# Copyright (c) Meta Platforms, Inc. and affiliates.
# All rights reserved.

# This source code is licensed under the license found in the
# LICENSE file in the root directory of this source tree.

import json
import logging
import os
import sys
from argparse import ArgumentParser
from concurrent.futures import ProcessPoolExecutor
from typing import Any, Dict, List, Optional, Sequence

from tqdm import tqdm

from cycfold.build_cycfold import build_engine, DEFAULT_CONFIG, engine_overrides
from cycfold.engine import CycFoldEngine, gs_report, Report
from cycfold.modeling.bisim import ChartError
from cycfold.modeling.kernel import KernelError
from cycfold.modeling.rewrite import FuelExhaustedError
from cycfold.modeling.typecheck import TypingError
from cycfold.surface.elaborate import Command
from cycfold.surface.parser import SurfaceError
from cycfold.surface.printer import format_term
from cycfold.utils.logger import setup_logging, shutdown_logging
from cycfold.utils.misc import format_exception

os.environ["HYDRA_FULL_ERROR"] = "1"

JSON_SCHEMA = 1
EXIT_OK, EXIT_FALSE, EXIT_ERROR = 0, 1, 2
# eval output under FOLDr + SIMP, whose normal forms need not be unique
NOT_UNIQUE = "-- a normal form: FOLDr + SIMP is not known to be confluent"

# errors reported to the user as a message rather than a traceback
USER_ERRORS = (SurfaceError, TypingError, KernelError, FuelExhaustedError, ChartError, OSError)


def _dump(obj: Dict[str, Any]):
    print(json.dumps({"schema": JSON_SCHEMA, **obj}, indent=2, ensure_ascii=False))


def _exit_code(reports: Sequence[Report]) -> int:
    return max((r.exit_code for r in reports), default=EXIT_OK)


def _show(report: Report) -> List[str]:
    lines = []
    for step in report.details.get("trace", []):
        lines.append(f"  {step['step']}. ({step['rule']}) at {step['position']}: {step['term']}")
    if report.kind == "eval":
        lines.append(report.summary)
    elif report.kind == "gscheck":
        lines.append(f"gscheck: {report.summary}")
    else:
        lines.append(f"{report.text}: {report.summary}")
        path = report.details.get("path")
        if path is not None:
            lines.append(f"  distinguishing path: {json.dumps(path, ensure_ascii=False)}")
        if "partition" in report.details:
            blocks = " -> ".join(map(str, report.details["partition"]))
            lines.append(f"  blocks per round: {blocks}")
        if "groups" in report.details:
            groups = " ".join("{" + ", ".join(g) + "}" for g in report.details["groups"])
            lines.append(f"  coarsest partition: {groups}")
    return lines


def _lines(reports: Sequence[Report]) -> List[str]:
    lines = []
    if any(r.details.get("unique") is False for r in reports):
        lines.append(NOT_UNIQUE)
    for r in reports:
        lines.extend(_show(r))
    return lines


def _emit(path: str, reports: List[Report], as_json: bool):
    if as_json:
        _dump({"file": path, "reports": [r.to_json() for r in reports]})
        return
    for line in _lines(reports):
        print(line)


def _directives(engine: CycFoldEngine, args, kinds: Sequence[str], **options) -> int:
    program = engine.load(args.file)
    commands = [c for c in program.commands if c.kind in kinds]
    reports = [engine.run_command(program, c, **options) for c in commands]
    _emit(args.file, reports, args.json)
    return _exit_code(reports)


def cmd_check(engine: CycFoldEngine, args) -> int:
    program = engine.load(args.file)
    if not args.specs:
        summary = (
            f"ok: {len(program.sig.datatypes)} ctypes, {len(program.funs)} functions, "
            f"{len(program.specs)} spec equations, {len(program.commands)} directives"
        )
        if args.json:
            _dump({"file": args.file, "ok": True, "summary": summary})
        else:
            print(summary)
        return EXIT_OK
    checks = engine.check_specs(program, args.specs, args.seed)
    results = []
    for c in checks:
        entry = {
            "line": c.equation.line,
            "equation": c.equation.text,
            "equal": c.equal,
            "not_equal": c.not_equal,
            "refused": c.refused,
        }
        if c.counterexample is not None:
            entry["counterexample"] = {
                k: format_term(v, program.sig) for k, v in sorted(c.counterexample.items())
            }
        results.append(entry)
    if args.json:
        _dump({"file": args.file, "specs": results})
    else:
        for c, entry in zip(checks, results):
            status = "ok" if c.passed else "FAILED"
            print(
                f"spec line {entry['line']}: {entry['equation']}: {status} "
                f"({c.equal} equal, {c.not_equal} not equal, {c.refused} refused)"
            )
            for k, v in entry.get("counterexample", {}).items():
                print(f"  {k} = {v}")
    return EXIT_OK if all(c.passed for c in checks) else EXIT_FALSE


def cmd_eval(engine: CycFoldEngine, args) -> int:
    return _directives(engine, args, ("eval",), trace=args.trace)


def cmd_prove(engine: CycFoldEngine, args) -> int:
    return _directives(engine, args, ("prove",), partition=args.partition)


def cmd_bisim(engine: CycFoldEngine, args) -> int:
    return _directives(engine, args, ("bisim",), chart=args.chart, partition=args.partition)


def cmd_gscheck(engine: CycFoldEngine, args) -> int:
    program = engine.load(args.file)
    report = engine.gscheck(program, args.fixpoint)
    if not report.passed:
        f = report.failures()[0].failure
        logging.info(f"gscheck: clause {f.clause} fails: {f.message}")
    out = gs_report(Command("gscheck", (), (), 0, "gscheck"), report, program)
    if args.json:
        _dump({"file": args.file, "reports": [out.to_json()]})
        return out.exit_code
    print(f"gscheck: {out.summary}")
    if args.verbose:
        for entry in out.details["rules"]:
            mark = "ok  " if entry["passed"] else "FAIL"
            print(f"  {mark} {entry['instance']}  [{', '.join(map(str, entry['clauses']))}]")
    return out.exit_code


def cmd_rules(engine: CycFoldEngine, args) -> int:
    program = engine.load(args.file)
    if args.dump:
        lines = engine.dump_rules(program, args.max_width)
    else:
        lines = engine.eval_rules(program).names
    if args.json:
        _dump({"file": args.file, "rules": lines})
    else:
        for line in lines:
            print(line)
    return EXIT_OK


def run_file(config: str, overrides: List[str], path: str, options: Dict[str, bool]) -> Dict[str, Any]:
    """Run every directive of one file; also the unit of work of `run --jobs`."""
    engine = build_engine(config, overrides)
    try:
        program = engine.load(path)
        reports = engine.run_directives(program, **options)
    except USER_ERRORS as e:
        return {"file": path, "exit_code": EXIT_ERROR, "error": str(e), "reports": []}
    return {
        "file": path,
        "exit_code": _exit_code(reports),
        "reports": [r.to_json() for r in reports],
        "lines": _lines(reports),
    }


def cmd_run(engine: Optional[CycFoldEngine], args) -> int:
    options = {"trace": args.trace, "partition": args.partition, "chart": args.chart}
    jobs = [(args.config, args.overrides, path, options) for path in args.files]
    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            # map keeps the input order
            results = list(
                tqdm(
                    pool.map(run_file, *zip(*jobs)),
                    total=len(jobs),
                    desc="files",
                    disable=not sys.stderr.isatty(),
                )
            )
    else:
        results = [run_file(*job) for job in tqdm(jobs, desc="files", disable=not sys.stderr.isatty())]
    if args.json:
        _dump({"files": [{k: v for k, v in r.items() if k != "lines"} for r in results]})
    else:
        for r in results:
            print(f"== {r['file']}")
            if "error" in r:
                print(f"error: {r['error']}", file=sys.stderr)
            for line in r.get("lines", []):
                print(line)
    return max((r["exit_code"] for r in results), default=EXIT_OK)


COMMANDS = {
    "check": cmd_check,
    "eval": cmd_eval,
    "prove": cmd_prove,
    "bisim": cmd_bisim,
    "gscheck": cmd_gscheck,
    "rules": cmd_rules,
    "run": cmd_run,
}


def make_parser() -> ArgumentParser:
    parser = ArgumentParser(prog="cycfold", description="Cyclic datatypes: evaluate, prove, check.")
    parser.add_argument(
        "-c",
        "--config",
        type=str,
        default=DEFAULT_CONFIG,
        help="engine config (e.g. configs/cycfold_foldr_only.yaml)",
    )
    parser.add_argument(
        "--override",
        dest="override",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override an engine setting, e.g. rewrite.fuel=500",
    )
    parser.add_argument("--log-level", type=str, default="WARNING", help="console log level")
    parser.add_argument("--log-dir", type=str, default=None, help="also write logs to DIR/log.txt")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help, multi=False):
        p = sub.add_parser(name, help=help)
        if multi:
            p.add_argument("files", nargs="+", help="program files")
        else:
            p.add_argument("file", help="program file")
        p.add_argument("--json", action="store_true", help="machine-readable output")
        return p

    p = add("check", "parse and type check a program")
    p.add_argument("--specs", type=int, default=0, metavar="N", help="test spec equations on N random instances")
    p.add_argument("--seed", type=int, default=None, help="seed of the spec sampler")

    p = add("eval", "normalize the eval directives")
    p.add_argument("--foldr-only", action="store_true", help="evaluate with FOLDr alone")
    p.add_argument("--trace", action="store_true", help="show every rewrite step")

    p = add("prove", "decide the prove directives")
    p.add_argument("--partition", action="store_true", help="report the partition history")

    p = add("bisim", "compare the bisim directives as charts")
    p.add_argument("--chart", action="store_true", help="dump the charts as JSON")
    p.add_argument("--partition", action="store_true", help="report the partition history")

    p = add("gscheck", "check the generated rules against the General Schema")
    p.add_argument("--fixpoint", action="store_true", help="add the fixed-point unfolding rule")
    p.add_argument("-v", "--verbose", action="store_true", help="list every rule instance")

    p = add("rules", "list the generated rule families")
    p.add_argument("--dump", action="store_true", help="print every rule instance")
    p.add_argument("--max-width", type=int, default=None, help="widest tuple to instantiate")

    p = add("run", "run every directive of each file", multi=True)
    p.add_argument("--jobs", type=int, default=1, help="files run in parallel worker processes")
    p.add_argument("--trace", action="store_true", help="show every rewrite step")
    p.add_argument("--partition", action="store_true", help="report the partition history")
    p.add_argument("--chart", action="store_true", help="dump the charts as JSON")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = make_parser().parse_args(argv)
    setup_logging(__name__, output_dir=args.log_dir, log_level=args.log_level)
    try:
        args.overrides = engine_overrides(args.override)
        if getattr(args, "foldr_only", False):
            args.overrides.append("++engine.foldr.simp=false")
        engine = None if args.command == "run" else build_engine(args.config, args.overrides)
        return COMMANDS[args.command](engine, args)
    except USER_ERRORS as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR
    except Exception as e:
        logging.error(format_exception(e))
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_ERROR
    finally:
        shutdown_logging()


if __name__ == "__main__":
    sys.exit(main())
