# Copyright (c) Meta Platforms, Inc. and affiliates.
# All rights reserved.

# This source code is licensed under the license found in the
# LICENSE file in the root directory of this source tree.

import pytest

from cycfold.modeling.kernel import App, is_cy, Var
from cycfold.modeling.prover import Prover, VerdictKind
from cycfold.modeling.rules import gen_foldr
from cycfold.modeling.typecheck import TypingError


def test_infinite_sums_are_equal(engine, corpus):
    program = corpus("eq12.cyc")
    v = engine.prove(program, *program.commands[0].terms)
    assert v.kind == VerdictKind.EQUAL
    assert v.exit_code == 0
    assert str(v) == "Equal"
    assert v.path is None
    assert v.partition.num_blocks() >= 1


def test_finite_sums(engine, corpus):
    program = corpus("eq12.cyc")
    assert engine.prove(program, *program.commands[2].terms).equal
    v = engine.prove(program, *program.commands[3].terms)
    assert v.kind == VerdictKind.NOT_EQUAL
    assert v.exit_code == 1
    assert v.path is not None
    assert v.path.validate(*v.charts)


def test_reflexivity(engine, corpus):
    for name in ("sum.cyc", "isempty.cyc"):
        program = corpus(name)
        for cmd in program.commands:
            if cmd.kind == "eval":
                assert engine.prove(program, cmd.terms[0], cmd.terms[0]).equal, cmd.text


@pytest.mark.parametrize("name", ["eq12.cyc", "ctail.cyc", "mapinc.cyc", "collect.cyc"])
def test_symmetry(engine, corpus, name):
    program = corpus(name)
    for cmd in program.commands:
        if cmd.kind != "prove":
            continue
        s, t = cmd.terms
        assert engine.prove(program, s, t).kind == engine.prove(program, t, s).kind, cmd.text


def test_bad_terms_are_refused(engine, corpus):
    program = corpus("mapinc.cyc")
    v = engine.prove(program, *program.commands[2].terms)
    assert v.kind == VerdictKind.REFUSED
    assert v.reason == "bad-term"
    assert v.exit_code == 2
    assert str(v) == "Refused (bad-term)"
    assert is_cy(v.subterm)
    assert v.traces[0] is not None


def test_open_folds_are_refused(nat):
    plus = nat.elaborator.definition("plus", ("CNat", "CNat"), None)
    t = plus.instantiate([nat.term("1"), Var("y")])
    v = Prover(gen_foldr(nat.sig)).prove(t, t, {"y": "CNat"})
    assert v.kind == VerdictKind.REFUSED
    assert v.reason == "open-fold"
    assert v.subterm is t


def test_free_variables_make_the_verdict_incomplete(nat):
    prover = Prover(gen_foldr(nat.sig))
    s = App("CNat.S", (Var("y"),))
    v = prover.prove(s, s, {"y": "CNat"})
    assert v.equal
    assert v.incomplete
    assert str(v) == "Equal [incomplete]"
    v = prover.prove(s, App("CNat.S", (Var("z"),)), {"y": "CNat", "z": "CNat"})
    assert v.kind == VerdictKind.NOT_EQUAL


def test_sides_must_have_the_same_type(nat):
    with pytest.raises(TypingError, match="sides have types"):
        Prover(gen_foldr(nat.sig)).prove(nat.term("0"), nat.term("[]"))


def test_cyclic_tail(engine, corpus):
    program = corpus("ctail.cyc")
    assert engine.prove(program, *program.commands[2].terms).equal
    tail = program.call("ctail", program.term("cy(x. 1 :: 2 :: x)"))
    assert engine.prove(program, tail, program.term("2 :: cy(y. 1 :: 2 :: y)")).equal
    assert not engine.prove(program, tail, program.term("cy(y. 1 :: 2 :: y)")).equal


def test_collect(engine, corpus):
    program = corpus("collect.cyc")
    v = engine.prove(program, *program.commands[1].terms)
    assert v.equal
    assert not v.incomplete
