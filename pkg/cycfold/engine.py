# Copyright (c) Meta Platforms, Inc. and affiliates.
# All rights reserved.

# This source code is licensed under the license found in the
# LICENSE file in the root directory of this source tree.

"""
The engine ties parsing, evaluation, proving, bisimulation and termination
checking together behind one configurable object. It is instantiated from a
Hydra config (see `build_cycfold.build_engine`).
"""

import logging
from collections import Counter
from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Optional, Tuple

from cycfold.modeling.bisim import BisimResult, Chart, compare, Partition, term_to_chart
from cycfold.modeling.generate import random_bindings, TermGenerator
from cycfold.modeling.kernel import subst_vars, Term
from cycfold.modeling.prover import Prover, Verdict, VerdictKind
from cycfold.modeling.rewrite import FuelExhaustedError, LEFTMOST_OUTERMOST, Rewriter, Trace
from cycfold.modeling.rules import fixpoint_rule, gen_foldr, gen_simp, RuleSet, single_rule_set
from cycfold.modeling.termcheck import check_system, GSReport
from cycfold.modeling.typecheck import TypeChecker
from cycfold.surface.elaborate import Command, load_text, Program, SpecEquation
from cycfold.surface.printer import format_rule, format_term
from cycfold.utils.misc import read_text


@dataclass
class RewriteConf:
    fuel: int = 1000000
    strategy: str = LEFTMOST_OUTERMOST
    seed: Optional[int] = None


@dataclass
class FoldrConf:
    # oriented composition law for folds over shared arguments
    composition_rule: bool = True
    # evaluate with FOLDr + SIMP, otherwise FOLDr alone
    simp: bool = True


@dataclass
class GSConf:
    max_width: int = 2
    refined: bool = True


@dataclass
class SpecConf:
    samples: int = 0
    max_depth: int = 2
    seed: int = 0


def partition_groups(partition: Partition, offset: int) -> List[List[str]]:
    """Blocks of the coarsest partition, nodes named `chart:id` with charts 1 and 2."""
    return [
        [f"1:{n}" if n < offset else f"2:{n - offset}" for n in group]
        for group in partition.groups()
    ]


def _conf(cls, value):
    if isinstance(value, cls):
        return value
    if value is None:
        value = {}
    assert isinstance(value, Mapping), f"expected a mapping for {cls.__name__}, got {value!r}"
    return cls(**value)


@dataclass
class EvalResult:
    term: Term
    type: Tuple[str, ...]
    trace: Trace


@dataclass
class BisimOutcome:
    equal: bool
    result: BisimResult
    charts: Tuple[Chart, Chart]
    traces: Tuple[Trace, Trace]


@dataclass
class SpecCheck:
    equation: SpecEquation
    equal: int = 0
    not_equal: int = 0
    refused: int = 0
    # bindings of the first sample whose sides differ
    counterexample: Optional[Dict[str, Term]] = None

    @property
    def passed(self) -> bool:
        return self.not_equal == 0


@dataclass
class Report:
    """Outcome of one directive, in human and machine readable form."""

    kind: str
    line: int
    text: str
    exit_code: int
    summary: str
    details: Dict[str, Any] = field(default_factory=dict)

    def to_json(self) -> Dict[str, Any]:
        return {
            "kind": self.kind,
            "line": self.line,
            "input": self.text,
            "exit_code": self.exit_code,
            "summary": self.summary,
            **self.details,
        }


class CycFoldEngine:
    def __init__(
        self,
        rewrite: Optional[Mapping] = None,
        foldr: Optional[Mapping] = None,
        gscheck: Optional[Mapping] = None,
        specs: Optional[Mapping] = None,
    ):
        self.rewrite_conf = _conf(RewriteConf, rewrite)
        self.foldr_conf = _conf(FoldrConf, foldr)
        self.gs_conf = _conf(GSConf, gscheck)
        self.spec_conf = _conf(SpecConf, specs)
        logging.debug(
            f"engine: fuel={self.rewrite_conf.fuel} strategy={self.rewrite_conf.strategy} "
            f"simp={self.foldr_conf.simp} composition_rule={self.foldr_conf.composition_rule}"
        )

    # ------------------------------------------------------------------
    # programs and rule sets
    # ------------------------------------------------------------------

    def load(self, path: str) -> Program:
        return load_text(read_text(path), path)

    def load_text(self, text: str, path: str = "<string>") -> Program:
        return load_text(text, path)

    def foldr(self, program: Program) -> RuleSet:
        return gen_foldr(program.sig, self.foldr_conf.composition_rule)

    def eval_rules(self, program: Program) -> RuleSet:
        foldr = self.foldr(program)
        if self.foldr_conf.simp:
            return foldr + gen_simp(program.sig)
        return foldr

    def rewriter(self, rules: RuleSet) -> Rewriter:
        conf = self.rewrite_conf
        return Rewriter(rules, conf.fuel, conf.strategy, conf.seed)

    # ------------------------------------------------------------------
    # operations
    # ------------------------------------------------------------------

    def evaluate(self, program: Program, t: Term, record: bool = False) -> EvalResult:
        ty = TypeChecker(program.sig).infer({}, {}, t)
        trace = self.rewriter(self.eval_rules(program)).normalize(t, record=record)
        return EvalResult(trace.final, ty, trace)

    def prove(
        self, program: Program, s: Term, t: Term, var_types: Optional[Dict[str, str]] = None
    ) -> Verdict:
        return Prover(self.foldr(program), self.rewrite_conf.fuel).prove(s, t, var_types)

    def bisim(
        self, program: Program, s: Term, t: Term, var_types: Optional[Dict[str, str]] = None
    ) -> BisimOutcome:
        """Compare the FOLDr normal forms of s and t as charts, without the
        restriction to good terms that `prove` enforces."""
        var_types = var_types or {}
        checker = TypeChecker(program.sig)
        ty = checker.infer({}, var_types, s)
        checker.infer({}, var_types, t, ty)
        rewriter = self.rewriter(self.foldr(program))
        traces = (rewriter.normalize(s, record=False), rewriter.normalize(t, record=False))
        charts = (
            term_to_chart(traces[0].final, program.sig, var_types, ty),
            term_to_chart(traces[1].final, program.sig, var_types, ty),
        )
        result = compare(*charts)
        logging.info(f"bisim: {result.equal}, {result.partition.num_blocks()} blocks")
        return BisimOutcome(result.equal, result, charts, traces)

    def gs_rules(self, program: Program, fixpoint: bool = False) -> RuleSet:
        rules = self.foldr(program) + gen_simp(program.sig)
        if fixpoint:
            for c in program.sig.datatypes:
                rules = rules + single_rule_set(program.sig, fixpoint_rule(program.sig, c))
        return rules

    def gscheck(self, program: Program, fixpoint: bool = False) -> GSReport:
        return check_system(
            self.gs_rules(program, fixpoint), max_width=self.gs_conf.max_width, refined=self.gs_conf.refined
        )

    def dump_rules(self, program: Program, max_width: Optional[int] = None) -> List[str]:
        rules = self.eval_rules(program)
        width = self.gs_conf.max_width if max_width is None else max_width
        return [format_rule(r, program.sig) for r in rules.instances(width)]

    def check_specs(
        self, program: Program, samples: Optional[int] = None, seed: Optional[int] = None
    ) -> List[SpecCheck]:
        """Evaluate every spec equation on random closed instances of its
        variables and prove both sides equal."""
        samples = self.spec_conf.samples if samples is None else samples
        seed = self.spec_conf.seed if seed is None else seed
        gen = TermGenerator(program.sig, seed, self.spec_conf.max_depth)
        out = []
        for eq in program.specs:
            check = SpecCheck(eq)
            for _ in range(samples):
                bindings = random_bindings(gen, eq.var_types)
                verdict = self.prove(
                    program, subst_vars(eq.lhs, bindings), subst_vars(eq.rhs, bindings)
                )
                if verdict.kind == VerdictKind.EQUAL:
                    check.equal += 1
                elif verdict.kind == VerdictKind.NOT_EQUAL:
                    check.not_equal += 1
                    if check.counterexample is None:
                        check.counterexample = bindings
                else:
                    check.refused += 1
            logging.info(
                f"spec line {eq.line}: {check.equal} equal, {check.not_equal} not equal, "
                f"{check.refused} refused"
            )
            out.append(check)
        return out

    # ------------------------------------------------------------------
    # directives
    # ------------------------------------------------------------------

    def run_command(self, program: Program, cmd: Command, **options) -> Report:
        try:
            return getattr(self, f"_run_{cmd.kind}")(program, cmd, **options)
        except FuelExhaustedError as e:
            return Report(cmd.kind, cmd.line, cmd.text, 2, f"error: {e}", {"error": str(e)})

    def run_directives(self, program: Program, **options) -> List[Report]:
        return [self.run_command(program, cmd, **options) for cmd in program.commands]

    def _run_eval(self, program: Program, cmd: Command, trace: bool = False, **_) -> Report:
        res = self.evaluate(program, cmd.terms[0], record=trace)
        shown = format_term(res.term, program.sig)
        details: Dict[str, Any] = {
            "term": shown,
            "type": list(res.type),
            "steps": res.trace.count,
            # FOLDr normal forms are unique, FOLDr + SIMP ones are not known to be
            "unique": not self.foldr_conf.simp,
        }
        if trace:
            details["rules"] = dict(sorted(Counter(res.trace.rules_used()).items()))
            details["trace"] = [
                {
                    "step": i,
                    "rule": s.rule,
                    "position": list(s.position),
                    "term": format_term(s.after, program.sig),
                }
                for i, s in enumerate(res.trace.steps, start=1)
            ]
        return Report("eval", cmd.line, cmd.text, 0, shown, details)

    def _run_prove(self, program: Program, cmd: Command, partition: bool = False, **_) -> Report:
        v = self.prove(program, *cmd.terms)
        details: Dict[str, Any] = {"verdict": v.kind.value, "reason": v.reason, "incomplete": v.incomplete}
        if v.subterm is not None:
            details["subterm"] = format_term(v.subterm, program.sig)
        if v.traces[0] is not None:
            details["steps"] = [tr.count for tr in v.traces]
            details["normal_forms"] = [format_term(tr.final, program.sig) for tr in v.traces]
        if v.partition is not None:
            details["blocks"] = v.partition.num_blocks()
            if partition:
                details["partition"] = v.partition.history
                details["groups"] = partition_groups(v.partition, len(v.charts[0]))
        if v.path is not None:
            details["path"] = v.path.to_json(program.sig)
        return Report("prove", cmd.line, cmd.text, v.exit_code, str(v), details)

    def _run_bisim(
        self, program: Program, cmd: Command, chart: bool = False, partition: bool = False, **_
    ) -> Report:
        out = self.bisim(program, *cmd.terms)
        details: Dict[str, Any] = {"bisimilar": out.equal, "blocks": out.result.partition.num_blocks()}
        if partition:
            details["partition"] = out.result.partition.history
            details["groups"] = partition_groups(out.result.partition, out.result.offset)
        if chart:
            details["charts"] = [c.to_json(program.sig) for c in out.charts]
        if out.result.path is not None:
            details["path"] = out.result.path.to_json(program.sig)
        return Report("bisim", cmd.line, cmd.text, 0 if out.equal else 1, str(out.equal).lower(), details)

    def _run_gscheck(self, program: Program, cmd: Command, fixpoint: bool = False, **_) -> Report:
        report = self.gscheck(program, fixpoint)
        return gs_report(cmd, report, program)


def gs_report(cmd: Command, report: GSReport, program: Program) -> Report:
    rules = []
    for r in report.rules:
        entry: Dict[str, Any] = {
            "rule": r.rule.name,
            "instance": format_rule(r.rule, program.sig),
            "passed": r.passed,
            "clauses": r.clauses,
        }
        if r.failure is not None:
            entry["failure"] = {
                "clause": r.failure.clause,
                "message": r.failure.message,
                "term": format_term(r.failure.term, program.sig),
            }
        rules.append(entry)
    failed = report.failures()
    summary = "passed" if report.passed else f"failed: {', '.join(sorted({r.rule.name for r in failed}))}"
    if failed:
        f = failed[0].failure
        summary += f" (clause {f.clause}: {f.message})"
    details = {
        "passed": report.passed,
        "type_order_well_founded": report.type_order_well_founded,
        "precedence_well_founded": report.precedence_well_founded,
        "positive": dict(sorted(report.positive.items())),
        "rules": rules,
    }
    return Report("gscheck", cmd.line, cmd.text, 0 if report.passed else 1, summary, details)
