# Copyright (c) Meta Platforms, Inc. and affiliates.
# All rights reserved.

# This source code is licensed under the license found in the
# LICENSE file in the root directory of this source tree.

import pytest

from cycfold.modeling.kernel import alpha_eq, App, at, Var
from cycfold.modeling.rewrite import (
    FuelExhaustedError,
    normal_form,
    normalize,
    RANDOM,
    Rewriter,
    step,
)
from cycfold.modeling.rules import gen_foldr
from cycfold.modeling.typecheck import TypeChecker

ZERO = App("CNat.0")


def S(t):
    return App("CNat.S", (t,))


def test_single_step(nat):
    foldr = gen_foldr(nat.sig)
    t = S(at(("y",), S(Var("y")), ZERO, ("CNat",)))
    after, s = step(t, foldr)
    assert s.rule == "7r"
    assert s.position == (0,)
    assert s.before == t
    assert after == S(S(ZERO))
    assert step(after, foldr) is None


def test_outermost_redex_first(nat):
    foldr = gen_foldr(nat.sig)
    t = nat.call("sum", nat.term("cy(x. 2 :: 1 :: x)"))
    _, s = step(t, foldr)
    assert (s.rule, s.position) == ("4r", ())


def test_plus(nat):
    foldr = gen_foldr(nat.sig)
    t = nat.call("plus", nat.term("1"), nat.term("1"))
    assert normal_form(t, foldr) == S(S(ZERO))


def test_sum_of_cyclic_list(engine, corpus):
    program = corpus("sum.cyc")
    res = engine.evaluate(program, program.commands[0].terms[0])
    assert alpha_eq(res.term, program.term("cy(x. S(S(S(x))))"))
    assert res.type == ("CNat",)
    res = engine.evaluate(program, program.commands[1].terms[0])
    assert res.term == program.term("7")


def test_fuel(nat):
    foldr = gen_foldr(nat.sig)
    t = nat.call("sum", nat.term("cy(x. 2 :: 1 :: x)"))
    with pytest.raises(FuelExhaustedError) as info:
        Rewriter(foldr, fuel=1).normalize(t)
    assert info.value.trace.count == 1
    assert info.value.trace.final is not None


def test_record(nat):
    foldr = gen_foldr(nat.sig)
    t = nat.call("plus", nat.term("2"), nat.term("1"))
    full = normalize(t, foldr)
    assert full.count == len(full.steps) > 0
    assert full.steps[0].before == t
    assert full.steps[-1].after == full.final
    for a, b in zip(full.steps, full.steps[1:]):
        assert a.after == b.before
    quiet = Rewriter(foldr).normalize(t, record=False)
    assert quiet.steps == []
    assert quiet.count == full.count
    assert quiet.final == full.final


@pytest.mark.parametrize("name", ["sum.cyc", "isempty.cyc", "aa.cyc", "ctail.cyc", "mapinc.cyc", "collect.cyc"])
def test_steps_preserve_types(engine, corpus, name):
    program = corpus(name)
    checker = TypeChecker(program.sig)
    for cmd in program.commands:
        if cmd.kind != "eval":
            continue
        trace = engine.evaluate(program, cmd.terms[0], record=True).trace
        for s in trace.steps:
            assert checker.infer({}, {}, s.after, cmd.type) == cmd.type, s.rule


@pytest.mark.parametrize("name", ["sum.cyc", "aa.cyc", "ctail.cyc", "mapinc.cyc"])
def test_foldr_normal_forms_do_not_depend_on_the_strategy(engine, corpus, name):
    program = corpus(name)
    foldr = engine.foldr(program)
    for cmd in program.commands:
        if cmd.kind != "eval":
            continue
        expected = Rewriter(foldr).normalize(cmd.terms[0], record=False).final
        for seed in range(20):
            rewriter = Rewriter(foldr, strategy=RANDOM, seed=seed)
            got = rewriter.normalize(cmd.terms[0], record=False).final
            assert alpha_eq(got, expected), (cmd.text, seed)
