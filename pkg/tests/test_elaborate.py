# Copyright (c) Meta Platforms, Inc. and affiliates.
# All rights reserved.

# This source code is licensed under the license found in the
# LICENSE file in the root directory of this source tree.

import pytest

from cycfold.modeling.kernel import App, is_at, Var
from cycfold.modeling.typecheck import TypeChecker, TypingError
from cycfold.surface.elaborate import elaborate_fun, elaborate_signature, load_text
from cycfold.surface.parser import parse
from cycfold.surface.parser import SurfaceError

from tests.conftest import NAT_LIST

ZERO = App("CNat.0")


def S(t):
    return App("CNat.S", (t,))


def test_functions_elaborate_to_folds(nat):
    plus = nat.elaborator.definition("plus", ("CNat", "CNat"), None)
    assert plus.params == ("m", "n")
    assert plus.type == ("CNat",)
    assert nat.sig.is_fold(plus.body.symbol)
    parts = nat.sig.fold_parts(plus.body)
    assert (parts.source, parts.targets) == ("CNat", ("CNat",))
    assert parts.body == Var("m")


def test_projection_and_recursion_elaborate_to_compositions(corpus):
    program = corpus("ctail.cyc")
    arg = program.term("cy(x. 1 :: 2 :: x)")
    for name in ("ctail", "tl"):
        t = program.call(name, arg)
        assert is_at(t), name
        assert TypeChecker(program.sig).infer({}, {}, t) == ("CList",)


def test_recursion_needs_a_signature():
    text = NAT_LIST + """
fun pred by recursion
  pred(0) = 0
  pred(S(n)) = n
"""
    with pytest.raises(SurfaceError, match="needs a signature"):
        load_text(text)


def test_recursion_needs_every_constructor():
    text = NAT_LIST + """
fun pred : CNat -> CNat
fun pred by recursion
  pred(S(n)) = n
"""
    with pytest.raises(SurfaceError, match="no equation for 0"):
        load_text(text)


def test_use_before_declaration():
    text = NAT_LIST + """
fun f(t) = g(t)
fun g(t) = t
"""
    with pytest.raises(SurfaceError, match="uses g before its declaration"):
        load_text(text)


def test_errors_carry_the_line():
    with pytest.raises(TypingError, match=r"^line \d+:"):
        load_text(NAT_LIST + "\neval sum(0)\n")


def test_specs_and_commands(corpus):
    program = corpus("sum.cyc")
    assert len(program.specs) == 4
    assert program.specs[0].var_types == {"n": "CNat"}
    assert program.specs[3].var_types == {"k": "CNat", "t": "CList"}
    assert program.specs[0].text == "plus(0, n) = n"
    assert [c.kind for c in program.commands] == ["eval", "eval"]
    assert program.commands[0].text == "sum(cy(x. 2 :: 1 :: x))"
    assert program.commands[0].type == ("CNat",)

    program = corpus("eq12.cyc")
    assert [c.kind for c in program.commands] == ["prove", "bisim", "prove", "prove"]
    assert program.commands[1].text == "cy(x. S(S(S(x)))) ~ cy(x. S(x))"
    assert program.path.endswith("eq12.cyc")


def test_overloaded_constructors(corpus):
    program = corpus("collect.cyc")
    assert program.term("∅", ("Names",)) == App("Names.∅")
    assert program.term("∅", ("FriendGraph",)) == App("FriendGraph.∅")
    with pytest.raises(TypingError, match="cannot tell which"):
        program.term("∅")
    t, ty = program.typed_term('nm("a") + ∅')
    assert ty == ("Names",)
    assert t.symbol == "Names.+"
    assert program.call("g") is not None
    assert TypeChecker(program.sig).infer({}, {}, program.call("g")) == ("FriendGraph",)


def test_numerals(nat):
    assert nat.term("0") == ZERO
    assert nat.term("2") == S(S(ZERO))
    with pytest.raises(TypingError):
        nat.term("2", ("CList",))


def test_projection(engine, nat):
    t = nat.term("pi2(<0, []>)")
    assert is_at(t)
    assert engine.evaluate(nat, t).term == App("CList.[]")


@pytest.mark.parametrize("name", ["sum.cyc", "isempty.cyc", "aa.cyc", "ctail.cyc", "collect.cyc"])
def test_spec_equations_hold(engine, corpus, name):
    program = corpus(name)
    checks = engine.check_specs(program, samples=10, seed=0)
    assert len(checks) == len(program.specs)
    for c in checks:
        assert c.passed, (c.equation.text, c.counterexample)
        assert c.equal + c.not_equal + c.refused == 10


def test_signature_from_declarations():
    sig = elaborate_signature(parse(NAT_LIST))
    assert list(sig.datatypes) == ["CNat", "CList"]
    assert [c.name for c in sig.datatypes["CList"].constructors] == ["[]", "::"]
    assert sig.axbr("CNat") is None
    with pytest.raises(SurfaceError, match="unknown type Foo"):
        elaborate_signature(parse("ctype T where\n  c : Foo -> T\n  with axioms AxCy\n"))


def test_elaborate_fun(nat):
    d = elaborate_fun("sum", nat, ("CList",))
    assert d.params == ("t",)
    assert d.type == ("CNat",)
    with pytest.raises(TypingError):
        elaborate_fun("sum", nat, ("CNat",))
