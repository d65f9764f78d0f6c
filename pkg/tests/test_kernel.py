# Copyright (c) Meta Platforms, Inc. and affiliates.
# All rights reserved.

# This source code is licensed under the license found in the
# LICENSE file in the root directory of this source tree.

import pytest

from cycfold.modeling.kernel import (
    Abs,
    alpha_eq,
    App,
    at,
    base_name,
    canonical,
    components,
    cy,
    free_vars,
    fresh,
    KernelError,
    merge_abs,
    MetaApp,
    metavars,
    positions,
    replace_at,
    size,
    subst_meta,
    subst_vars,
    subterm_at,
    tup,
    UNIT,
    Var,
)

ZERO = App("CNat.0")


def S(t):
    return App("CNat.S", (t,))


def cons(k, t):
    return App("CList.::", (k, t))


def test_alpha_eq():
    assert alpha_eq(cy(("x",), S(Var("x"))), cy(("y",), S(Var("y"))))
    assert not alpha_eq(Var("x"), Var("y"))
    assert alpha_eq(
        cy(("x", "y"), tup(Var("x"), Var("y"))),
        cy(("u", "v"), tup(Var("u"), Var("v"))),
    )
    # binder order matters
    assert not alpha_eq(
        cy(("x", "y"), tup(Var("x"), Var("y"))),
        cy(("u", "v"), tup(Var("v"), Var("u"))),
    )
    # types never take part in equality
    assert alpha_eq(cy(("x",), S(Var("x")), ("CNat",)), cy(("x",), S(Var("x"))))


def test_canonical_is_idempotent():
    t = cy(("x",), at(("y",), cons(Var("y"), Var("x")), S(ZERO)))
    assert canonical(canonical(t)) == canonical(t)


def test_tuples_flatten():
    a, b, c = Var("a"), Var("b"), Var("c")
    assert tup() == UNIT
    assert tup(a) == a
    assert tup(tup(a, b), c) == App("tuple", (a, b, c))
    assert components(tup(a, b)) == (a, b)
    assert components(a) == (a,)


def test_free_vars():
    assert free_vars(cy(("x",), S(Var("x")))) == frozenset()
    assert free_vars(at(("y",), Var("y"), Var("x"))) == {"x"}
    assert free_vars(cy(("x",), cons(S(S(ZERO)), cons(Var("y"), Var("x"))))) == {"y"}


def test_subst_vars():
    assert subst_vars(Var("x"), {"x": ZERO}) == ZERO
    loop = cy(("y",), Var("y"))
    assert subst_vars(loop, {"x": ZERO}) == loop
    s = cy(("z",), S(Var("z")))
    assert subst_vars(S(Var("x")), {"x": s}) == S(s)


def test_subst_vars_avoids_capture():
    t = Abs(("y",), App("f", (Var("x"), Var("y"))))
    out = subst_vars(t, {"x": Var("y")})
    assert alpha_eq(out, Abs(("u",), App("f", (Var("y"), Var("u")))))
    assert free_vars(out) == {"y"}


def test_subst_vars_is_simultaneous():
    t = tup(Var("x"), Var("y"))
    assert subst_vars(t, {"x": Var("y"), "y": Var("x")}) == tup(Var("y"), Var("x"))


def test_subst_meta():
    e = MetaApp("m", (ZERO,))
    assert subst_meta(e, {"m": (("x",), S(Var("x")))}) == S(ZERO)

    e = MetaApp("m", (Var("y"),))
    out = subst_meta(e, {"m": (("x",), cy(("z",), Var("x")))})
    assert alpha_eq(out, cy(("z",), Var("y")))

    e = MetaApp("e", (S(ZERO), Var("x0")))
    plus = App("plus", (Var("k"), Var("x")))
    assert subst_meta(e, {"e": (("k", "x"), plus)}) == App("plus", (S(ZERO), Var("x0")))


def test_subst_meta_renames_binders_of_the_pattern():
    # the assigned term mentions a free y that the pattern binds
    e = Abs(("y",), MetaApp("m", (Var("y"),)))
    out = subst_meta(e, {"m": (("x",), tup(Var("x"), Var("y")))})
    assert isinstance(out, Abs)
    assert out.binders[0] != "y"
    assert free_vars(out) == {"y"}


def test_subst_meta_errors():
    with pytest.raises(KernelError, match="unassigned"):
        subst_meta(MetaApp("m", ()), {})
    with pytest.raises(KernelError, match="binds 1"):
        subst_meta(MetaApp("m", (ZERO, ZERO)), {"m": (("x",), Var("x"))})
    partial = subst_meta(tup(MetaApp("m", ()), MetaApp("n", ())), {"m": ((), ZERO)}, partial=True)
    assert partial == tup(ZERO, MetaApp("n", ()))


def test_subst_meta_on_disjoint_domains_composes():
    e = tup(MetaApp("m", (ZERO,)), MetaApp("n", ()))
    th1 = {"m": (("x",), S(Var("x")))}
    th2 = {"n": ((), cy(("z",), S(Var("z"))))}
    stepwise = subst_meta(subst_meta(e, th1, partial=True), th2)
    assert alpha_eq(stepwise, subst_meta(e, {**th1, **th2}))
    assert metavars(stepwise) == frozenset()


def test_positions_are_pre_order():
    t = cons(S(ZERO), Var("x"))
    ps = [p for p, _ in positions(t)]
    assert ps == [(), (0,), (0, 0), (1,)]
    assert size(t) == 4
    assert subterm_at(t, (0, 0)) == ZERO
    assert replace_at(t, (1,), ZERO) == cons(S(ZERO), ZERO)


def test_merge_abs():
    t = Abs(("x",), Abs(("y",), tup(Var("x"), Var("y"))))
    assert merge_abs(t) == Abs(("x", "y"), tup(Var("x"), Var("y")))
    shadowed = merge_abs(Abs(("x",), Abs(("x",), Var("x"))))
    assert len(shadowed.binders) == 2
    assert shadowed.body == Var(shadowed.binders[1])


def test_fresh_names():
    a, b = fresh("x"), fresh("x")
    assert a != b
    assert base_name(a) == "x"
    assert base_name(fresh(a)) == "x"


def test_abs_invariants():
    with pytest.raises(AssertionError):
        Abs((), ZERO)
    with pytest.raises(AssertionError):
        Abs(("x", "x"), ZERO)
    with pytest.raises(AssertionError):
        Abs(("x",), ZERO, ("CNat", "CNat"))
