# Copyright (c) Meta Platforms, Inc. and affiliates.
# All rights reserved.

# This source code is licensed under the license found in the
# LICENSE file in the root directory of this source tree.

"""Value recognition and the good-term set T."""

from dataclasses import dataclass
from typing import Dict, FrozenSet, Optional

from cycfold.modeling.kernel import (
    Abs,
    App,
    free_vars,
    is_cy,
    lam,
    Literal,
    MetaApp,
    Term,
    Var,
)
from cycfold.modeling.rewrite import normal_form
from cycfold.modeling.rules import RuleSet
from cycfold.modeling.signature import Signature


def is_value(t: Term, sig: Signature) -> bool:
    """y | d(t..) | cy(x.t) | <t1, t2> | <> | (y.t1) @ t2, recursively."""
    if isinstance(t, (Var, Literal)):
        return True
    if isinstance(t, Abs):
        return is_value(t.body, sig)
    if isinstance(t, MetaApp):
        return False
    assert isinstance(t, App)
    if sig.is_fold(t.symbol):
        return False
    return all(is_value(a, sig) for a in t.args)


@dataclass(frozen=True)
class BadTerm:
    cycle: Term
    fold: Term
    variable: str


def bad_subterm(nf: Term, sig: Signature) -> Optional[BadTerm]:
    """
    Look for cy(y. C[fold(e, z.s)]) in a FOLDr normal form where s mentions a
    variable of y that C does not rebind.
    """
    return _bad(nf, sig, {})


def _bad(t: Term, sig: Signature, cyvars: Dict[str, Term]) -> Optional[BadTerm]:
    if isinstance(t, Abs):
        inner = {k: v for k, v in cyvars.items() if k not in t.binders}
        return _bad(t.body, sig, inner)
    if not isinstance(t, App):
        return None
    if is_cy(t):
        body = t.args[0]
        inner = {k: v for k, v in cyvars.items() if k not in body.binders}
        inner.update((b, t) for b in body.binders)
        return _bad(body.body, sig, inner)
    if sig.is_fold(t.symbol):
        parts = sig.fold_parts(t)
        hit = sorted(free_vars(lam(parts.binders, parts.body)) & set(cyvars))
        if hit:
            return BadTerm(cyvars[hit[0]], t, hit[0])
    for a in t.args:
        found = _bad(a, sig, cyvars)
        if found is not None:
            return found
    return None


def is_bad(t: Term, foldr: RuleSet, fuel: int = 1000000) -> bool:
    return bad_subterm(normal_form(t, foldr, fuel), foldr.sig) is not None


def open_fold(t: Term, sig: Signature, _bound: FrozenSet[str] = frozenset()) -> Optional[Term]:
    """The first fold whose structure terms mention a variable free in the
    whole term."""
    if isinstance(t, Abs):
        return open_fold(t.body, sig, _bound | frozenset(t.binders))
    if not isinstance(t, App):
        return None
    if sig.is_fold(t.symbol):
        parts = sig.fold_parts(t)
        if any(free_vars(e) - _bound for e in parts.structure):
            return t
    for a in t.args:
        found = open_fold(a, sig, _bound)
        if found is not None:
            return found
    return None


def in_T(t: Term, foldr: RuleSet, fuel: int = 1000000) -> bool:
    return open_fold(t, foldr.sig) is None and not is_bad(t, foldr, fuel)
