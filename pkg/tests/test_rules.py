# Copyright (c) Meta Platforms, Inc. and affiliates.
# All rights reserved.

# This source code is licensed under the license found in the
# LICENSE file in the root directory of this source tree.

import pytest

from cycfold.modeling.kernel import alpha_eq, App, at, cy, is_cy, positions, subst_meta, Var
from cycfold.modeling.rules import (
    _bekic,
    _branch,
    _build,
    _compose,
    _dead,
    fixpoint_rule,
    gen_foldr,
    gen_simp,
    match,
    single_rule_set,
)
from cycfold.modeling.signature import Signature

ZERO = App("CNat.0")


def S(t):
    return App("CNat.S", (t,))


def test_family_names(nat, tree):
    assert gen_foldr(nat.sig).names == ["1r", "2r", "3r", "4r", "5r", "6r", "7r"]
    assert gen_foldr(nat.sig, composition_rule=False).names == ["1r", "2r", "3r", "4r", "5r", "7r"]
    assert gen_simp(nat.sig).names == ["10r", "13r"]
    assert gen_simp(tree.sig).names == ["10r", "11r", "12r", "13r", "14r", "15r", "16r"]
    assert gen_foldr(Signature()).names == ["7r"]


def test_rule_sets_combine(nat):
    rules = gen_foldr(nat.sig) + gen_simp(nat.sig)
    assert rules.names[-2:] == ["10r", "13r"]
    assert rules.name == "FOLDr + SIMP"
    assert rules.provenance == ("CNat", "CList")


def test_compose_rule(nat):
    foldr = gen_foldr(nat.sig)
    t = at(("y",), S(Var("y")), ZERO, ("CNat",))
    rule, out = foldr.rewrite_root(t)
    assert rule.name == "7r"
    assert out == S(ZERO)


def test_compose_rule_needs_single_width_arguments(nat):
    foldr = gen_foldr(nat.sig)
    # the argument is a pair, not two single values
    t = at(("y",), Var("y"), App("tuple", (ZERO, ZERO)))
    assert foldr.rewrite_root(t) is None


def test_dead_cycle_rule(nat):
    simp = gen_simp(nat.sig)
    rule, out = simp.rewrite_root(cy(("x",), S(ZERO), ("CNat",)))
    assert rule.name == "13r"
    assert out == S(ZERO)
    assert simp.rewrite_root(cy(("x",), S(Var("x")), ("CNat",))) is None


def test_branch_rules(tree):
    simp = gen_simp(tree.sig)
    empty = App("CTree.∅")
    rule, out = simp.rewrite_root(cy(("x",), Var("x"), ("CTree",)))
    assert (rule.name, out) == ("14r", empty)
    a = App("CTree.a", (empty,))
    rule, out = simp.rewrite_root(cy(("x",), App("CTree.+", (Var("x"), a)), ("CTree",)))
    assert (rule.name, out) == ("11r", a)
    rule, out = simp.rewrite_root(cy(("x",), App("CTree.+", (a, Var("x"))), ("CTree",)))
    assert (rule.name, out) == ("12r", a)
    rule, out = simp.rewrite_root(App("CTree.+", (empty, a)))
    assert (rule.name, out) == ("15r", a)
    rule, out = simp.rewrite_root(App("CTree.+", (a, empty)))
    assert (rule.name, out) == ("16r", a)


def test_cycle_fold_rule(nat):
    foldr = gen_foldr(nat.sig)
    t = nat.call("sum", nat.term("cy(x. 2 :: 1 :: x)"))
    rule, out = foldr.rewrite_root(t)
    assert rule.name == "4r"
    assert is_cy(out)


def test_constructor_fold_rule(nat):
    foldr = gen_foldr(nat.sig)
    t = nat.call("plus", nat.term("1"), nat.term("2"))
    rule, out = foldr.rewrite_root(t)
    assert rule.name == "5r"
    assert rule.key[-1] == "CNat.S"


def test_fixpoint_rule(nat):
    rule = fixpoint_rule(nat.sig, "CNat")
    assert rule.name == "fix"
    loop = cy(("x",), S(Var("x")), ("CNat",))
    out = single_rule_set(nat.sig, rule).rewrite_root(loop)[1]
    assert alpha_eq(out, S(loop))


def test_match_is_miller(nat):
    rule = fixpoint_rule(nat.sig, "CNat")
    theta = match(rule.lhs, cy(("z",), S(S(Var("z"))), ("CNat",)))
    assert set(theta) == {"m"}
    binders, body = theta["m"]
    assert body == S(S(Var(binders[0])))
    # the binder types of pattern and term must agree
    assert match(rule.lhs, cy(("z",), S(Var("z")), ("CList",))) is None


def _eval_terms(engine, program):
    out = []
    for cmd in program.commands:
        if cmd.kind != "eval":
            continue
        trace = engine.evaluate(program, cmd.terms[0], record=True).trace
        out.extend(s.before for s in trace.steps)
    return out


@pytest.mark.parametrize("name", ["sum.cyc", "isempty.cyc", "aa.cyc", "ctail.cyc", "mapinc.cyc"])
def test_match_then_instantiate_gives_back_the_term(engine, corpus, name):
    program = corpus(name)
    rules = engine.eval_rules(program)
    checked = 0
    for t in _eval_terms(engine, program):
        for _, s in positions(t):
            for family in rules.families:
                rule = family.instance_at(program.sig, s)
                if rule is None:
                    continue
                theta = match(rule.lhs, s)
                if theta is None:
                    continue
                assert alpha_eq(subst_meta(rule.lhs, theta), s), rule
                checked += 1
    assert checked > 0


@pytest.mark.parametrize("name", ["sum.cyc", "eq12.cyc", "aa.cyc", "collect.cyc"])
def test_foldr_matches_at_most_once_per_position(engine, corpus, name):
    program = corpus(name)
    foldr = engine.foldr(program)
    for t in _eval_terms(engine, program):
        for _, s in positions(t):
            assert len(list(foldr.matches_at(s))) <= 1


def test_rule_caches_are_bounded(nat, tree):
    builders = (_build, _compose, _bekic, _dead, _branch)
    for program in (nat, tree):
        gen_foldr(program.sig) + gen_simp(program.sig)
    for builder in builders:
        info = builder.cache_info()
        assert info.maxsize == 128
        assert info.currsize <= 128
