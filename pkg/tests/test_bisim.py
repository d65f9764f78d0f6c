# Copyright (c) Meta Platforms, Inc. and affiliates.
# All rights reserved.

# This source code is licensed under the license found in the
# LICENSE file in the root directory of this source tree.

import pytest

from cycfold.modeling.bisim import (
    bisimilar,
    Chart,
    ChartError,
    ChartNode,
    compare,
    disjoint_union,
    Edge,
    eq_mod_bisim,
    refine,
    term_to_chart,
    VAR_LABEL,
)
from cycfold.modeling.kernel import App, cy, Var


def chart(program, text, expected=None):
    t, ty = program.typed_term(text, expected)
    return term_to_chart(t, program.sig, types=ty)


def test_chart_of_a_cyclic_list(nat):
    c = chart(nat, "cy(x. 2 :: x)")
    assert len(c) == 4
    assert c.root_types() == ("CList",)
    root = c.nodes[c.roots[0]]
    assert [e.label for e in root.edges] == ["CList.::"]
    # the tail points back to the root
    assert root.edges[0].children[1] == c.roots[0]
    assert not c.uninterpreted


def test_chart_of_units_and_empty_cycles(nat, tree):
    c = chart(tree, "∅")
    assert len(c) == 1
    assert c.nodes[0].edges == ()
    assert not c.nodes[0].divergent

    c = term_to_chart(cy(("x",), Var("x"), ("CTree",)), tree.sig)
    assert len(c) == 1
    assert c.nodes[0].edges == ()
    assert not c.nodes[0].divergent

    c = term_to_chart(cy(("x",), Var("x"), ("CNat",)), nat.sig)
    assert len(c) == 1
    assert c.nodes[0].divergent


def test_labels_of_variables_and_literals(nat, corpus):
    c = term_to_chart(App("CNat.S", (Var("y"),)), nat.sig, {"y": "CNat"})
    assert c.uninterpreted
    labels = {e.label for n in c.nodes for e in n.edges}
    assert labels == {"CNat.S", VAR_LABEL + "y"}

    program = corpus("collect.cyc")
    c = chart(program, 'nm("alice")')
    assert len(c) == 1
    assert c.nodes[0].edges == (Edge("Names.nm", ("alice",), ()),)


def test_bisimilar_streams(nat):
    assert bisimilar(chart(nat, "cy(x. S(S(S(x))))"), chart(nat, "cy(x. S(x))"))
    assert bisimilar(chart(nat, "cy(x. 1 :: 1 :: x)"), chart(nat, "1 :: cy(x. 1 :: x)"))
    assert not bisimilar(chart(nat, "cy(x. 1 :: 2 :: x)"), chart(nat, "cy(x. 2 :: 1 :: x)"))


def test_bisimilarity_is_a_congruence(nat):
    s, t = "cy(x. S(S(x)))", "cy(x. S(x))"
    assert bisimilar(chart(nat, s), chart(nat, t))
    assert bisimilar(chart(nat, f"S({s})"), chart(nat, f"S({t})"))
    assert bisimilar(chart(nat, f"{s} :: []"), chart(nat, f"{t} :: []"))


def test_branching_axioms(tree):
    def same(a, b):
        return bisimilar(chart(tree, a, ("CTree",)), chart(tree, b, ("CTree",)))

    # commutativity, idempotence and units
    assert same("a(∅) + b(∅)", "b(∅) + a(∅)")
    assert same("a(∅) + a(∅)", "a(∅)")
    assert same("∅ + a(∅)", "a(∅)")
    assert same("(a(∅) + b(∅)) + a(b(∅))", "a(∅) + (b(∅) + a(b(∅)))")
    assert same("cy(x. x + a(x))", "cy(x. a(x))")
    assert not same("a(∅)", "b(∅)")
    assert not same("a(∅)", "∅")


def test_distinguishing_path(nat):
    c1, c2 = chart(nat, "cy(x. 1 :: x)"), chart(nat, "1 :: 1 :: []")
    res = compare(c1, c2)
    assert not res.equal
    assert res.path is not None
    assert res.path.validate(c1, c2)
    assert len(res.path.steps) >= 1
    assert res.path.final.kind == "label"
    out = res.path.to_json(nat.sig)
    assert out["root"] == 0
    assert out["steps"][0]["label"] == "::"


def test_divergent_mismatch(nat):
    c1 = term_to_chart(cy(("x",), Var("x"), ("CNat",)), nat.sig)
    c2 = chart(nat, "cy(x. S(x))")
    res = compare(c1, c2)
    assert not res.equal
    assert res.path.final.kind == "divergent"
    assert res.path.validate(c1, c2)


def test_comparing_different_types_is_an_error(nat):
    with pytest.raises(ChartError, match="root types"):
        compare(chart(nat, "0"), chart(nat, "[]"))
    with pytest.raises(ChartError, match="roots"):
        compare(chart(nat, "<0, 0>"), chart(nat, "0"))


def test_disjoint_union(nat):
    c1, c2 = chart(nat, "cy(x. 2 :: x)"), chart(nat, "0")
    union, offset = disjoint_union(c1, c2)
    assert offset == len(c1)
    assert len(union) == len(c1) + len(c2)
    assert union.roots == (c1.roots[0], offset + c2.roots[0])
    for n in union.nodes:
        assert all(k < len(union) for e in n.edges for k in e.children)


def test_partition_history(nat):
    res = compare(chart(nat, "cy(x. 1 :: 2 :: x)"), chart(nat, "cy(x. 1 :: 2 :: 1 :: 2 :: x)"))
    assert res.equal
    history = res.partition.history
    assert history == sorted(history)
    assert history[-1] == res.partition.num_blocks()
    groups = res.partition.groups()
    assert sum(len(g) for g in groups) == len(res.union)


def test_refine_small_chart():
    a = ChartNode(0, "T", False, (Edge("a", (), (1,)),))
    b = ChartNode(1, "T", False, (Edge("a", (), (0,)),))
    c = ChartNode(2, "T", False, (Edge("a", (), (2,)),))
    d = ChartNode(3, "T", True)
    part = refine(Chart([a, b, c, d], (0,)))
    assert part.same(0, 1) and part.same(1, 2)
    assert not part.same(0, 3)
    assert part.split_round(0, 3) == 0
    assert part.split_round(0, 2) == -1


def test_chart_json(nat):
    out = chart(nat, "cy(x. 2 :: x)").to_json(nat.sig)
    assert out["roots"] == [0]
    assert out["nodes"][0]["edges"][0]["label"] == "::"
    assert out["nodes"][0]["type"] == "CList"


def test_eq_mod_bisim(nat):
    assert eq_mod_bisim(nat.term("cy(x. S(S(x)))"), nat.term("cy(x. S(x))"), nat.sig)
    assert not eq_mod_bisim(nat.term("0"), nat.term("1"), nat.sig)
