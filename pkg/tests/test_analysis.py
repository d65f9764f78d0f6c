# Copyright (c) Meta Platforms, Inc. and affiliates.
# All rights reserved.

# This source code is licensed under the license found in the
# LICENSE file in the root directory of this source tree.

from cycfold.modeling.analysis import bad_subterm, in_T, is_bad, is_value, open_fold
from cycfold.modeling.kernel import App, is_cy, Var
from cycfold.modeling.rewrite import normal_form
from cycfold.modeling.rules import gen_foldr


def test_values(nat):
    assert is_value(nat.term("cy(x. 2 :: 1 :: x)"), nat.sig)
    assert is_value(nat.term("<0, []>"), nat.sig)
    assert is_value(Var("y"), nat.sig)
    assert not is_value(nat.call("sum", nat.term("[]")), nat.sig)


def test_foldr_normal_forms_of_good_terms_are_values(engine, corpus):
    program = corpus("sum.cyc")
    foldr = engine.foldr(program)
    for cmd in program.commands:
        assert is_value(normal_form(cmd.terms[0], foldr), program.sig)


def test_bad_term(engine, corpus):
    program = corpus("mapinc.cyc")
    foldr = engine.foldr(program)
    bad = program.commands[2].terms[0]
    assert is_bad(bad, foldr)
    assert not in_T(bad, foldr)
    found = bad_subterm(normal_form(bad, foldr), program.sig)
    assert found is not None
    assert is_cy(found.cycle)
    assert program.sig.is_fold(found.fold.symbol)
    assert found.variable in found.cycle.args[0].binders


def test_good_terms(engine, corpus):
    program = corpus("mapinc.cyc")
    foldr = engine.foldr(program)
    good = program.commands[0].terms[0]
    assert not is_bad(good, foldr)
    assert in_T(good, foldr)
    # a cycle fold step leaves a term whose normal form is still a value
    _, out = foldr.rewrite_root(good)
    assert not is_bad(out, foldr)


def test_open_fold(nat):
    one = nat.term("1")
    plus = nat.elaborator.definition("plus", ("CNat", "CNat"), None)
    t = plus.instantiate([one, Var("y")])
    found = open_fold(t, nat.sig)
    assert found is t
    assert not in_T(t, gen_foldr(nat.sig))
    # the argument may be open, only structure terms count
    t = plus.instantiate([Var("y"), one])
    assert open_fold(t, nat.sig) is None
    assert open_fold(App("CNat.S", (Var("y"),)), nat.sig) is None
