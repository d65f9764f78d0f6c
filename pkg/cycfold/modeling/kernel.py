# Copyright (c) Meta Platforms, Inc. and affiliates.
# All rights reserved.

# This source code is licensed under the license found in the
# LICENSE file in the root directory of this source tree.

"""
Term representation shared by every other module.

A term is one of `Var`, `Abs`, `App`, `MetaApp` or `Literal`. Terms are frozen
dataclasses, so they are hashable and safe to share between threads and worker
processes. Multi-binder abstraction is a single `Abs` node; tuples are
flattened on construction so a tuple never has a tuple component and a width-1
tuple is its component.
"""

import itertools
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterator, List, Optional, Sequence, Tuple, Union

# default symbols present at every type instance
TUPLE = "tuple"
CY = "cy"
AT = "at"

FRESH_SEP = "~"

TypeSeq = Tuple[str, ...]
Position = Tuple[int, ...]


class KernelError(ValueError):
    pass


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Abs:
    binders: Tuple[str, ...]
    body: "Term"
    # binder types; they never take part in equality
    types: Optional[TypeSeq] = field(default=None, compare=False)

    def __post_init__(self):
        assert len(self.binders) > 0, "an abstraction binds at least one variable"
        assert len(set(self.binders)) == len(
            self.binders
        ), f"duplicate binders {self.binders}"
        if self.types is not None:
            assert len(self.types) == len(
                self.binders
            ), f"{len(self.binders)} binders but {len(self.types)} types"


@dataclass(frozen=True)
class App:
    symbol: str
    args: Tuple["Term", ...] = ()


@dataclass(frozen=True)
class MetaApp:
    name: str
    args: Tuple["Term", ...] = ()


@dataclass(frozen=True)
class Literal:
    payload: str
    type: str = "String"


Term = Union[Var, Abs, App, MetaApp, Literal]

UNIT = App(TUPLE, ())

_fresh_counter = itertools.count()


def base_name(name: str) -> str:
    return name.split(FRESH_SEP, 1)[0].lstrip("$") or "x"


def fresh(name: str) -> str:
    return f"{base_name(name)}{FRESH_SEP}{next(_fresh_counter)}"


def tup(*items: Term) -> Term:
    """Flattening tuple constructor: <> for zero items, the item itself for one."""
    flat: List[Term] = []
    for item in items:
        if isinstance(item, App) and item.symbol == TUPLE:
            flat.extend(item.args)
        else:
            flat.append(item)
    if len(flat) == 1:
        return flat[0]
    return App(TUPLE, tuple(flat))


def components(t: Term) -> Tuple[Term, ...]:
    if isinstance(t, App) and t.symbol == TUPLE:
        return t.args
    return (t,)


def mk_app(symbol: str, args: Sequence[Term]) -> Term:
    if symbol == TUPLE:
        return tup(*args)
    return App(symbol, tuple(args))


def cy(binders: Sequence[str], body: Term, types: Optional[Sequence[str]] = None) -> App:
    return App(CY, (Abs(tuple(binders), body, None if types is None else tuple(types)),))


def at(
    binders: Sequence[str],
    body: Term,
    arg: Term,
    types: Optional[Sequence[str]] = None,
) -> App:
    return App(
        AT, (Abs(tuple(binders), body, None if types is None else tuple(types)), arg)
    )


def lam(binders: Sequence[str], body: Term, types: Optional[Sequence[str]] = None) -> Term:
    """Abstraction that degenerates to the body when there is nothing to bind."""
    if len(binders) == 0:
        return body
    return Abs(tuple(binders), body, None if types is None else tuple(types))


def is_cy(t: Term) -> bool:
    return isinstance(t, App) and t.symbol == CY


def is_at(t: Term) -> bool:
    return isinstance(t, App) and t.symbol == AT


def is_tuple(t: Term) -> bool:
    return isinstance(t, App) and t.symbol == TUPLE


def children(t: Term) -> Tuple[Term, ...]:
    if isinstance(t, Abs):
        return (t.body,)
    if isinstance(t, (App, MetaApp)):
        return t.args
    return ()


def with_children(t: Term, kids: Sequence[Term]) -> Term:
    if isinstance(t, Abs):
        return Abs(t.binders, kids[0], t.types)
    if isinstance(t, App):
        return mk_app(t.symbol, kids)
    if isinstance(t, MetaApp):
        return MetaApp(t.name, tuple(kids))
    return t


def positions(t: Term, prefix: Position = ()) -> Iterator[Tuple[Position, Term]]:
    """Pre-order walk, i.e. leftmost-outermost order."""
    stack = [(prefix, t)]
    while stack:
        pos, s = stack.pop()
        yield pos, s
        kids = children(s)
        for i in range(len(kids) - 1, -1, -1):
            stack.append((pos + (i,), kids[i]))


def subterm_at(t: Term, pos: Position) -> Term:
    for i in pos:
        t = children(t)[i]
    return t


def replace_at(t: Term, pos: Position, new: Term) -> Term:
    if len(pos) == 0:
        return new
    kids = list(children(t))
    kids[pos[0]] = replace_at(kids[pos[0]], pos[1:], new)
    return with_children(t, kids)


def size(t: Term) -> int:
    return sum(1 for _ in positions(t))


def free_vars(t: Term) -> FrozenSet[str]:
    if isinstance(t, Var):
        return frozenset((t.name,))
    if isinstance(t, Abs):
        return free_vars(t.body) - frozenset(t.binders)
    if isinstance(t, (App, MetaApp)):
        out: FrozenSet[str] = frozenset()
        for a in t.args:
            out = out | free_vars(a)
        return out
    return frozenset()


def metavars(t: Term) -> FrozenSet[str]:
    if isinstance(t, MetaApp):
        out = frozenset((t.name,))
    else:
        out = frozenset()
    for c in children(t):
        out = out | metavars(c)
    return out


def symbols(t: Term) -> Iterator[str]:
    for _, s in positions(t):
        if isinstance(s, App):
            yield s.symbol


def canonical(t: Term, _depth: int = 0, _env: Optional[Dict[str, str]] = None) -> Term:
    """
    Rename every bound variable to a name derived from its binding depth, so
    that alpha-equivalent terms become structurally equal.
    """
    env = _env or {}
    if isinstance(t, Var):
        return Var(env.get(t.name, t.name))
    if isinstance(t, Abs):
        inner = dict(env)
        names = []
        for i, b in enumerate(t.binders):
            inner[b] = f"#{_depth + i}"
            names.append(inner[b])
        return Abs(tuple(names), canonical(t.body, _depth + len(names), inner), t.types)
    if isinstance(t, App):
        return App(t.symbol, tuple(canonical(a, _depth, env) for a in t.args))
    if isinstance(t, MetaApp):
        return MetaApp(t.name, tuple(canonical(a, _depth, env) for a in t.args))
    return t


def alpha_eq(s: Term, t: Term) -> bool:
    return canonical(s) == canonical(t)


def subst_vars(t: Term, bindings: Dict[str, Term]) -> Term:
    """Simultaneous capture-avoiding substitution of terms for free variables."""
    if not bindings:
        return t
    incoming: FrozenSet[str] = frozenset()
    for v in bindings.values():
        incoming = incoming | free_vars(v)
    return _subst(t, bindings, incoming)


def _subst(t: Term, bindings: Dict[str, Term], incoming: FrozenSet[str]) -> Term:
    if isinstance(t, Var):
        return bindings.get(t.name, t)
    if isinstance(t, Abs):
        inner = {k: v for k, v in bindings.items() if k not in t.binders}
        if not inner:
            return t
        new_binders = []
        for b in t.binders:
            if b in incoming:
                nb = fresh(b)
                inner[b] = Var(nb)
                new_binders.append(nb)
            else:
                new_binders.append(b)
        return Abs(tuple(new_binders), _subst(t.body, inner, incoming), t.types)
    if isinstance(t, App):
        return mk_app(t.symbol, [_subst(a, bindings, incoming) for a in t.args])
    if isinstance(t, MetaApp):
        return MetaApp(t.name, tuple(_subst(a, bindings, incoming) for a in t.args))
    return t


MetaAssignment = Dict[str, Tuple[Tuple[str, ...], Term]]


def subst_meta(e: Term, assignment: MetaAssignment, partial: bool = False) -> Term:
    """
    Substitute terms for metavariables: m[t1,...,tn] with m := (x1,...,xn. s)
    becomes s{x1 := t1', ..., xn := tn'} where ti' are the already substituted
    arguments. Binders of `e` are renamed whenever they would capture a free
    variable of an assigned term.
    """
    danger: FrozenSet[str] = frozenset()
    for binders, body in assignment.values():
        danger = danger | (free_vars(body) - frozenset(binders))
    return _subst_meta(e, assignment, danger, partial)


def _subst_meta(e: Term, assignment: MetaAssignment, danger, partial) -> Term:
    if isinstance(e, (Var, Literal)):
        return e
    if isinstance(e, Abs):
        clashing = [b for b in e.binders if b in danger]
        if clashing:
            renaming = {b: fresh(b) for b in clashing}
            body = subst_vars(e.body, {b: Var(n) for b, n in renaming.items()})
            binders = tuple(renaming.get(b, b) for b in e.binders)
            return Abs(binders, _subst_meta(body, assignment, danger, partial), e.types)
        return Abs(e.binders, _subst_meta(e.body, assignment, danger, partial), e.types)
    if isinstance(e, App):
        return mk_app(e.symbol, [_subst_meta(a, assignment, danger, partial) for a in e.args])
    assert isinstance(e, MetaApp)
    args = [_subst_meta(a, assignment, danger, partial) for a in e.args]
    if e.name not in assignment:
        if partial:
            return MetaApp(e.name, tuple(args))
        raise KernelError(f"unassigned metavariable {e.name}")
    binders, body = assignment[e.name]
    if len(binders) != len(args):
        raise KernelError(
            f"metavariable {e.name} binds {len(binders)} variables but is applied to {len(args)} arguments"
        )
    return subst_vars(body, dict(zip(binders, args)))


def merge_abs(t: Term) -> Term:
    """Collapse directly nested abstractions into a single multi-binder node."""
    if isinstance(t, Abs) and isinstance(t.body, Abs):
        inner = merge_abs(t.body)
        assert isinstance(inner, Abs)
        types = None
        if t.types is not None and inner.types is not None:
            types = t.types + inner.types
        # an outer binder shadowed by the inner one is unreachable in the body
        outer = tuple(fresh(b) if b in inner.binders else b for b in t.binders)
        return Abs(outer + inner.binders, inner.body, types)
    return t
