# Copyright (c) Meta Platforms, Inc. and affiliates.
# All rights reserved.

# This source code is licensed under the license found in the
# LICENSE file in the root directory of this source tree.

"""Expected results of the shipped example programs."""

import pytest

from cycfold.modeling.kernel import alpha_eq
from cycfold.modeling.prover import VerdictKind

from tests.conftest import CORPUS_FILES

EVAL_RESULTS = {
    "sum.cyc": ["cy(x. S(S(S(x))))", "7"],
    "isempty.cyc": ["true", "true", "false"],
    "ctail.cyc": ["2 :: cy(y. 1 :: 2 :: y)", "2 :: cy(y. 1 :: 2 :: y)"],
    "aa.cyc": ["true", "false", "true", "true", "false", "true"],
    "mapinc.cyc": ["cy(x. 2 :: x)"],
}


@pytest.mark.parametrize("name", sorted(EVAL_RESULTS))
def test_eval_results(engine, corpus, name):
    program = corpus(name)
    evals = [c for c in program.commands if c.kind == "eval"]
    assert len(evals) == len(EVAL_RESULTS[name])
    for cmd, expected in zip(evals, EVAL_RESULTS[name]):
        got = engine.evaluate(program, cmd.terms[0]).term
        assert alpha_eq(got, program.term(expected)), cmd.text


@pytest.mark.parametrize("name", CORPUS_FILES)
def test_every_file_runs(engine, corpus, name):
    reports = engine.run_directives(corpus(name))
    assert reports
    assert all(r.exit_code in (0, 1, 2) for r in reports)


def test_directive_verdicts(engine, corpus):
    expected = {
        "eq12.cyc": ["Equal", "true", "Equal", "NotEqual"],
        "ctail.cyc": ["Equal"],
        "collect.cyc": ["Equal"],
        "mapinc.cyc": ["Equal", "Refused (bad-term)"],
    }
    for name, summaries in expected.items():
        program = corpus(name)
        reports = [r for r in engine.run_directives(program) if r.kind != "eval"]
        assert [r.summary for r in reports] == summaries, name


def test_collect_is_bisimilar_to_the_names(engine, corpus):
    program = corpus("collect.cyc")
    got = engine.evaluate(program, program.commands[0].terms[0]).term
    names = program.term('nm("alice") + nm("bob") + nm("carol")', ("Names",))
    assert engine.bisim(program, got, names).equal
    assert engine.bisim(program, got, program.term('nm("carol") + nm("alice") + nm("bob")', ("Names",))).equal
    assert not engine.bisim(program, got, program.term('nm("alice") + nm("bob")', ("Names",))).equal


def test_bad_term_refusal(engine, corpus):
    program = corpus("mapinc.cyc")
    v = engine.prove(program, *program.commands[2].terms)
    assert v.kind == VerdictKind.REFUSED
    assert v.reason == "bad-term"
