# Copyright (c) Meta Platforms, Inc. and affiliates.
# All rights reserved.

# This source code is licensed under the license found in the
# LICENSE file in the root directory of this source tree.

"""
Second-order rewrite rules and the rule families FOLDr and SIMP.

A family is a schema indexed by types and widths (fold symbol, number of body
binders, tuple widths, cycle widths). Families hand out concrete
`RewriteRule` instances, either the one instance whose left-hand side has the
shape of a given term, or representative instances up to a width bound for
dumps and the termination checker. All instances are matched with the same
Miller pattern matcher.
"""

import functools
import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, FrozenSet, Iterator, List, Optional, Sequence, Tuple

from cycfold.modeling.kernel import (
    Abs,
    alpha_eq,
    App,
    at,
    cy,
    free_vars,
    fresh,
    is_at,
    is_cy,
    is_tuple,
    lam,
    Literal,
    MetaApp,
    MetaAssignment,
    subst_meta,
    subst_vars,
    Term,
    tup,
    TypeSeq,
    UNIT,
    Var,
)
from cycfold.modeling.signature import MetaArity, Signature


@dataclass(eq=False)
class RewriteRule:
    name: str
    meta: Dict[str, MetaArity]
    lhs: Term
    rhs: Term
    guard: Optional[Callable[[MetaAssignment, Signature], bool]] = None
    guard_text: str = ""
    key: Tuple = field(default_factory=tuple)

    def apply(self, t: Term, sig: Signature) -> Optional[Term]:
        theta = match(self.lhs, t)
        if theta is None:
            return None
        if self.guard is not None and not self.guard(theta, sig):
            return None
        return subst_meta(self.rhs, theta)

    def __repr__(self):
        return f"RewriteRule({self.name}, key={self.key})"


def match(pattern: Term, t: Term) -> Optional[MetaAssignment]:
    """
    Miller pattern matching: every metavariable of `pattern` is applied to
    distinct bound variables, so the assignment is unique when it exists.
    """
    theta: MetaAssignment = {}
    if _match(pattern, t, {}, frozenset(), theta):
        return theta
    return None


def _match(p: Term, t: Term, bmap: Dict[str, str], bound: FrozenSet[str], theta) -> bool:
    if isinstance(p, MetaApp):
        images = []
        for a in p.args:
            assert isinstance(a, Var) and a.name in bmap, f"{p.name} is not a pattern"
            images.append(bmap[a.name])
        assert len(set(images)) == len(images), f"{p.name} applied to repeated variables"
        if (free_vars(t) & bound) - set(images):
            return False
        value = (tuple(images), t)
        if p.name in theta:
            old_binders, old_body = theta[p.name]
            return alpha_eq(lam(old_binders, old_body), lam(value[0], value[1]))
        theta[p.name] = value
        return True
    if isinstance(p, Var):
        if p.name in bmap:
            return isinstance(t, Var) and t.name == bmap[p.name]
        return isinstance(t, Var) and t.name == p.name and t.name not in bound
    if isinstance(p, Abs):
        if not isinstance(t, Abs) or len(t.binders) != len(p.binders):
            return False
        if p.types is not None and (t.types is None or tuple(t.types) != tuple(p.types)):
            return False
        if bound & set(t.binders):
            renaming = {b: fresh(b) for b in t.binders if b in bound}
            body = subst_vars(t.body, {b: Var(n) for b, n in renaming.items()})
            t = Abs(tuple(renaming.get(b, b) for b in t.binders), body, t.types)
        inner = dict(bmap)
        inner.update(zip(p.binders, t.binders))
        return _match(p.body, t.body, inner, bound | frozenset(t.binders), theta)
    if isinstance(p, App):
        if not isinstance(t, App) or t.symbol != p.symbol or len(t.args) != len(p.args):
            return False
        return all(_match(a, b, bmap, bound, theta) for a, b in zip(p.args, t.args))
    if isinstance(p, Literal):
        return p == t
    raise AssertionError(f"unexpected pattern node {p}")


def _names(prefix: str, n: int) -> Tuple[str, ...]:
    return tuple(f"{prefix}{i}" for i in range(n))


def _vars(names: Sequence[str]) -> Tuple[Var, ...]:
    return tuple(Var(n) for n in names)


class RuleFamily:
    name = ""
    title = ""

    def instance_at(self, sig: Signature, t: Term) -> Optional[RewriteRule]:
        raise NotImplementedError

    def representatives(self, sig: Signature, max_width: int) -> List[RewriteRule]:
        raise NotImplementedError


# ---------------------------------------------------------------------------
# FOLDr
# ---------------------------------------------------------------------------


def fold_symbols_for_rules(sig: Signature) -> List[str]:
    """Fold symbols the representatives range over: the ones in use, or the
    endo-fold of every datatype when a program uses none."""
    if sig.folds:
        return list(sig.folds)
    return [sig.fold_symbol(c, (c,)) for c in sig.datatypes]


class _FoldTemplate:
    """Shared pieces of the left-hand side fold(E, y.body; p) at one instance."""

    def __init__(self, sig: Signature, symbol: str, n: int):
        self.sig = sig
        self.symbol = symbol
        self.source, self.targets = sig.folds.get(symbol) or _parse(symbol)
        self.k = len(self.targets)
        self.n = n
        self.meta: Dict[str, MetaArity] = {}
        self.structure: List[Term] = []
        for i, con in enumerate(sig.datatypes[self.source].constructors):
            bt = sig.structure_binder_types(con, self.targets)
            zs = _names("z", len(bt))
            name = f"e{i}"
            self.meta[name] = MetaArity(bt, self.targets)
            self.structure.append(lam(zs, MetaApp(name, _vars(zs))))
        self.ys = _names("y", n)
        self.params: List[Term] = []
        for j in range(n * self.k):
            name = f"p{j}"
            self.meta[name] = MetaArity((), (self.targets[j % self.k],))
            self.params.append(MetaApp(name))

    def c(self, count: int) -> TypeSeq:
        return (self.source,) * count

    def fold(self, binders: Sequence[str], body: Term, params: Sequence[Term]) -> App:
        return self.sig.make_fold(
            self.symbol, self.structure, binders, body, params, self.c(len(binders))
        )

    def lhs(self, body: Term) -> App:
        return self.fold(self.ys, body, self.params)

    def struct_index(self, con_symbol: str) -> int:
        symbols = [c.symbol for c in self.sig.datatypes[self.source].constructors]
        return symbols.index(con_symbol)


def _parse(symbol):
    from cycfold.modeling.signature import parse_fold_symbol

    return parse_fold_symbol(symbol)


class _FoldFamily(RuleFamily):
    def instance_at(self, sig, t):
        if not (isinstance(t, App) and sig.is_fold(t.symbol)):
            return None
        parts = sig.fold_parts(t)
        if len(parts.structure) != len(sig.datatypes[parts.source].constructors):
            return None
        key = self.shape(sig, parts)
        if key is None:
            return None
        return _build(self, sig, t.symbol, len(parts.binders), key)

    def shape(self, sig, parts):
        raise NotImplementedError

    def build(self, tpl: _FoldTemplate, key) -> RewriteRule:
        raise NotImplementedError

    def keys(self, sig, symbol, n, max_width) -> List[Tuple]:
        raise NotImplementedError

    def representatives(self, sig, max_width):
        out = []
        for symbol in fold_symbols_for_rules(sig):
            for n in range(0, max_width + 1):
                for key in self.keys(sig, symbol, n, max_width):
                    out.append(_build(self, sig, symbol, n, key))
        return out


@functools.lru_cache(maxsize=128)
def _build(family: _FoldFamily, sig: Signature, symbol: str, n: int, key: Tuple) -> RewriteRule:
    rule = family.build(_FoldTemplate(sig, symbol, n), key)
    rule.key = (symbol, n) + tuple(key)
    return rule


class ParamProjection(_FoldFamily):
    name = "1r"
    title = "fold(E, y.y_i; p) -> p_i"

    def shape(self, sig, parts):
        if isinstance(parts.body, Var) and parts.body.name in parts.binders:
            return (parts.binders.index(parts.body.name),)
        return None

    def keys(self, sig, symbol, n, max_width):
        return [(i,) for i in range(n)]

    def build(self, tpl, key):
        (i,) = key
        group = tpl.params[i * tpl.k : (i + 1) * tpl.k]
        return RewriteRule(self.name, tpl.meta, tpl.lhs(Var(tpl.ys[i])), tup(*group))


class EmptyBody(_FoldFamily):
    name = "2r"
    title = "fold(E, y.<>; p) -> <>"

    def shape(self, sig, parts):
        return () if parts.body == UNIT else None

    def keys(self, sig, symbol, n, max_width):
        return [()]

    def build(self, tpl, key):
        return RewriteRule(self.name, tpl.meta, tpl.lhs(UNIT), UNIT)


class TupleSplit(_FoldFamily):
    name = "3r"
    title = "fold(E, y.<s, t>; p) -> <fold(E, y.s; p), fold(E, y.t; p)>"

    def shape(self, sig, parts):
        if not is_tuple(parts.body) or len(parts.body.args) < 2:
            return None
        return tuple(sig.width(a) for a in parts.body.args)

    def keys(self, sig, symbol, n, max_width):
        return [(1, 1)]

    def build(self, tpl, widths):
        meta = dict(tpl.meta)
        ys = _vars(tpl.ys)
        comps, folds = [], []
        for i, w in enumerate(widths):
            name = f"s{i}"
            meta[name] = MetaArity(tpl.c(tpl.n), tpl.c(w))
            comps.append(MetaApp(name, ys))
            folds.append(tpl.fold(tpl.ys, MetaApp(name, ys), tpl.params))
        return RewriteRule(self.name, meta, tpl.lhs(App("tuple", tuple(comps))), tup(*folds))


class CycleFold(_FoldFamily):
    name = "4r"
    title = "fold(E, y.cy(x.t); p) -> cy(x'. fold(E, y,x.t; p,x'))"

    def shape(self, sig, parts):
        if not is_cy(parts.body):
            return None
        inner = parts.body.args[0]
        if inner.types is not None and set(inner.types) != {parts.source}:
            return None
        return (len(inner.binders),)

    def keys(self, sig, symbol, n, max_width):
        return [(q,) for q in range(1, max_width + 1)]

    def build(self, tpl, key):
        (q,) = key
        meta = dict(tpl.meta)
        xs = _names("x", q)
        xps = _names("w", q * tpl.k)
        meta["t"] = MetaArity(tpl.c(tpl.n + q), tpl.c(q))
        body = MetaApp("t", _vars(tpl.ys + xs))
        lhs = tpl.lhs(cy(xs, body, tpl.c(q)))
        rhs = cy(
            xps,
            tpl.fold(tpl.ys + xs, body, tuple(tpl.params) + _vars(xps)),
            tpl.targets * q,
        )
        return RewriteRule(self.name, meta, lhs, rhs)


class ConstructorFold(_FoldFamily):
    name = "5r"
    title = "fold(E, y.d(a, t); p) -> e_d[a, fold(E, y.t; p)]"

    def shape(self, sig, parts):
        body = parts.body
        if not isinstance(body, App):
            return None
        con = sig.constructors.get(body.symbol)
        if con is None or con.result != parts.source:
            return None
        return (body.symbol,)

    def keys(self, sig, symbol, n, max_width):
        source, _ = sig.folds.get(symbol) or _parse(symbol)
        return [(c.symbol,) for c in sig.datatypes[source].constructors]

    def build(self, tpl, key):
        (con_symbol,) = key
        con = tpl.sig.constructors[con_symbol]
        meta = dict(tpl.meta)
        ys = _vars(tpl.ys)
        pattern_args: List[Term] = []
        e_args: List[Term] = []
        rbinders: List[str] = []
        folds: List[Term] = []
        for j, a_type in enumerate(con.args):
            if a_type == con.result:
                name = f"t{j}"
                meta[name] = MetaArity(tpl.c(tpl.n), (con.result,))
                pattern_args.append(MetaApp(name, ys))
                f = tpl.fold(tpl.ys, MetaApp(name, ys), tpl.params)
                if tpl.k == 1:
                    e_args.append(f)
                else:
                    rs = tuple(f"r{j}_{l}" for l in range(tpl.k))
                    rbinders.extend(rs)
                    e_args.extend(_vars(rs))
                    folds.append(f)
            else:
                name = f"a{j}"
                meta[name] = MetaArity((), (a_type,))
                pattern_args.append(MetaApp(name))
                e_args.append(MetaApp(name))
        e_name = f"e{tpl.struct_index(con_symbol)}"
        rhs: Term = MetaApp(e_name, tuple(e_args))
        if rbinders:
            rhs = at(rbinders, rhs, tup(*folds), tpl.targets * len(folds))
        lhs = tpl.lhs(App(con_symbol, tuple(pattern_args)))
        return RewriteRule(self.name, meta, lhs, rhs)


class CompositionFold(_FoldFamily):
    name = "6r"
    title = "fold(E, y.(x.t) @ s; p) -> (x'. fold(E, y,x.t; p,x')) @ fold(E, y.s; p)"

    def shape(self, sig, parts):
        if not is_at(parts.body):
            return None
        fn = parts.body.args[0]
        if fn.types is None or set(fn.types) != {parts.source}:
            return None
        return (len(fn.binders), sig.width(fn.body))

    def keys(self, sig, symbol, n, max_width):
        return [(q, 1) for q in range(1, max_width + 1)]

    def build(self, tpl, key):
        q, w = key
        meta = dict(tpl.meta)
        xs = _names("x", q)
        xps = _names("w", q * tpl.k)
        meta["t"] = MetaArity(tpl.c(tpl.n + q), tpl.c(w))
        meta["s"] = MetaArity(tpl.c(tpl.n), tpl.c(q))
        t = MetaApp("t", _vars(tpl.ys + xs))
        s = MetaApp("s", _vars(tpl.ys))
        lhs = tpl.lhs(at(xs, t, s, tpl.c(q)))
        rhs = at(
            xps,
            tpl.fold(tpl.ys + xs, t, tuple(tpl.params) + _vars(xps)),
            tpl.fold(tpl.ys, s, tpl.params),
            tpl.targets * q,
        )
        return RewriteRule(self.name, meta, lhs, rhs)


def _all_width_one(names):
    def guard(theta, sig):
        return all(sig.width(theta[n][1]) == 1 for n in names)

    return guard


class Compose(RuleFamily):
    name = "7r"
    title = "(y.t) @ <s> -> t[s]"

    def instance_at(self, sig, t):
        if not is_at(t):
            return None
        fn, arg = t.args
        n = len(fn.binders)
        if n >= 2 and not (is_tuple(arg) and len(arg.args) == n):
            return None
        types = None if fn.types is None else tuple(fn.types)
        try:
            w = sig.width(fn.body)
        except Exception:
            return None
        return _compose(sig, n, types, w)

    def representatives(self, sig, max_width):
        out = []
        for c in sig.base_types:
            for n in range(1, max_width + 1):
                out.append(_compose(sig, n, (c,) * n, 1))
        return out


@functools.lru_cache(maxsize=128)
def _compose(sig, n, types, w):
    ys = _names("y", n)
    ss = _names("s", n)
    meta = {"t": MetaArity(types or (), (types or ("?",))[:1] * w)}
    for i, s in enumerate(ss):
        meta[s] = MetaArity((), ((types or ("?",) * n)[i],))
    arg = tup(*(MetaApp(s) for s in ss))
    lhs = at(ys, MetaApp("t", _vars(ys)), arg, types)
    rhs = MetaApp("t", tuple(MetaApp(s) for s in ss))
    rule = RewriteRule(
        Compose.name, meta, lhs, rhs, _all_width_one(ss), "every |s_i| = 1", (n, types, w)
    )
    return rule


# ---------------------------------------------------------------------------
# SIMP
# ---------------------------------------------------------------------------


class Bekic(RuleFamily):
    name = "10r"
    title = "cy(x,y.<t, s>) -> <cy(x.(y.t) @ cy(y.s)), cy(y.(x.s) @ cy(x.(y.t) @ cy(y.s)))>"

    def instance_at(self, sig, t):
        if not is_cy(t):
            return None
        inner = t.args[0]
        if not is_tuple(inner.body) or len(inner.body.args) < 2:
            return None
        widths = tuple(sig.width(a) for a in inner.body.args)
        if widths[0] < 1 or widths[0] >= len(inner.binders):
            return None
        types = None if inner.types is None else tuple(inner.types)
        return _bekic(sig, types, len(inner.binders), widths)

    def representatives(self, sig, max_width):
        out = []
        for c in sig.datatypes:
            for total in range(2, max(max_width, 2) + 1):
                for m in range(1, total):
                    widths = (m,) + (1,) * (total - m)
                    out.append(_bekic(sig, (c,) * total, total, widths))
        return out


@functools.lru_cache(maxsize=128)
def _bekic(sig, types, total, widths):
    m = widths[0]
    names = _names("x", m) + _names("y", total - m)
    xs, ys = names[:m], names[m:]
    tx = None if types is None else types[:m]
    ty = None if types is None else types[m:]
    meta = {}
    comps = []
    offset = 0
    for i, w in enumerate(widths):
        name = "t" if i == 0 else f"s{i}"
        meta[name] = MetaArity(types or (), (types or ("?",) * total)[offset : offset + w])
        comps.append(MetaApp(name, _vars(names)))
        offset += w
    t_ = comps[0]
    s_ = tup(*comps[1:])
    lhs = cy(names, App("tuple", tuple(comps)), types)
    a = cy(xs, at(ys, t_, cy(ys, s_, ty), ty), tx)
    b = cy(ys, at(xs, s_, a, tx), ty)
    rule = RewriteRule(Bekic.name, meta, lhs, tup(a, b))
    rule.key = (types, total, widths)
    return rule


class DeadCycle(RuleFamily):
    name = "13r"
    title = "cy(y.t) -> t, t not involving y"

    def instance_at(self, sig, t):
        if not is_cy(t):
            return None
        inner = t.args[0]
        types = None if inner.types is None else tuple(inner.types)
        return _dead(sig, len(inner.binders), types)

    def representatives(self, sig, max_width):
        return [
            _dead(sig, n, (c,) * n) for c in sig.datatypes for n in range(1, max_width + 1)
        ]


@functools.lru_cache(maxsize=128)
def _dead(sig, n, types):
    ys = _names("y", n)
    meta = {"t": MetaArity((), types or ("?",) * n)}
    rule = RewriteRule(DeadCycle.name, meta, cy(ys, MetaApp("t"), types), MetaApp("t"))
    rule.key = (n, types)
    return rule


class _BranchFamily(RuleFamily):
    """Cleaning rules, instantiated at every type declared with AxBr(unit, branch)."""

    def axbr_types(self, sig) -> List[str]:
        return [c for c in sig.datatypes if sig.axbr(c) is not None]

    def representatives(self, sig, max_width):
        return [_branch(self, sig, c) for c in self.axbr_types(sig)]

    def build(self, sig, c, unit, branch) -> RewriteRule:
        raise NotImplementedError

    def cycle_type(self, sig, t) -> Optional[str]:
        if not is_cy(t):
            return None
        inner = t.args[0]
        if len(inner.binders) != 1 or inner.types is None:
            return None
        c = inner.types[0]
        return c if sig.axbr(c) is not None else None


@functools.lru_cache(maxsize=128)
def _branch(family: _BranchFamily, sig: Signature, c: str) -> RewriteRule:
    unit, branch = sig.axbr(c)
    rule = family.build(sig, c, unit, branch)
    rule.key = (c,)
    return rule


class BranchLeftCycle(_BranchFamily):
    name = "11r"
    title = "cy(x. x + t) -> t"

    def instance_at(self, sig, t):
        c = self.cycle_type(sig, t)
        return _branch(self, sig, c) if c is not None else None

    def build(self, sig, c, unit, branch):
        meta = {"t": MetaArity((), (c,))}
        lhs = cy(("x",), App(branch, (Var("x"), MetaApp("t"))), (c,))
        return RewriteRule(self.name, meta, lhs, MetaApp("t"))


class BranchRightCycle(BranchLeftCycle):
    name = "12r"
    title = "cy(x. t + x) -> t"

    def build(self, sig, c, unit, branch):
        meta = {"t": MetaArity((), (c,))}
        lhs = cy(("x",), App(branch, (MetaApp("t"), Var("x"))), (c,))
        return RewriteRule(self.name, meta, lhs, MetaApp("t"))


class EmptyCycle(BranchLeftCycle):
    name = "14r"
    title = "cy(x. x) -> unit"

    def build(self, sig, c, unit, branch):
        return RewriteRule(self.name, {}, cy(("x",), Var("x"), (c,)), App(unit))


class UnitLeft(_BranchFamily):
    name = "15r"
    title = "unit + t -> t"

    def instance_at(self, sig, t):
        if not isinstance(t, App) or t.symbol not in sig.constructors:
            return None
        c = sig.constructors[t.symbol].result
        axbr = sig.axbr(c)
        if axbr is None or axbr[1] != t.symbol:
            return None
        return _branch(self, sig, c)

    def build(self, sig, c, unit, branch):
        meta = {"t": MetaArity((), (c,))}
        return RewriteRule(
            self.name, meta, App(branch, (App(unit), MetaApp("t"))), MetaApp("t")
        )


class UnitRight(UnitLeft):
    name = "16r"
    title = "t + unit -> t"

    def build(self, sig, c, unit, branch):
        meta = {"t": MetaArity((), (c,))}
        return RewriteRule(
            self.name, meta, App(branch, (MetaApp("t"), App(unit))), MetaApp("t")
        )


# ---------------------------------------------------------------------------
# rule sets
# ---------------------------------------------------------------------------


@dataclass
class RuleSet:
    name: str
    sig: Signature
    families: List[RuleFamily]
    provenance: Tuple[str, ...] = ()

    def __add__(self, other: "RuleSet") -> "RuleSet":
        assert self.sig is other.sig, "rule sets over different signatures"
        return RuleSet(
            f"{self.name} + {other.name}",
            self.sig,
            self.families + other.families,
            tuple(dict.fromkeys(self.provenance + other.provenance)),
        )

    @property
    def names(self) -> List[str]:
        return [f.name for f in self.families]

    def matches_at(self, t: Term) -> Iterator[Tuple[RewriteRule, Term]]:
        """Every (rule, contractum) for a redex rooted at `t`, in list order."""
        for family in self.families:
            rule = family.instance_at(self.sig, t)
            if rule is None:
                continue
            out = rule.apply(t, self.sig)
            if out is not None:
                yield rule, out

    def rewrite_root(self, t: Term) -> Optional[Tuple[RewriteRule, Term]]:
        return next(self.matches_at(t), None)

    def instances(self, max_width: int = 2) -> List[RewriteRule]:
        out: List[RewriteRule] = []
        for family in self.families:
            out.extend(family.representatives(self.sig, max_width))
        return out

    def __repr__(self):
        return f"RuleSet({self.name}: {' '.join(self.names)})"


def gen_foldr(sig: Signature, composition_rule: bool = True) -> RuleSet:
    families: List[RuleFamily] = []
    if sig.datatypes:
        families = [ParamProjection(), EmptyBody(), TupleSplit(), CycleFold(), ConstructorFold()]
        if composition_rule:
            families.append(CompositionFold())
    families.append(Compose())
    logging.debug(f"FOLDr families: {[f.name for f in families]}")
    return RuleSet("FOLDr", sig, families, tuple(sig.datatypes))


def gen_simp(sig: Signature) -> RuleSet:
    families: List[RuleFamily] = [Bekic(), DeadCycle()]
    if any(sig.axbr(c) is not None for c in sig.datatypes):
        families = [
            Bekic(),
            BranchLeftCycle(),
            BranchRightCycle(),
            DeadCycle(),
            EmptyCycle(),
            UnitLeft(),
            UnitRight(),
        ]
    return RuleSet("SIMP", sig, families, tuple(sig.datatypes))


def fixpoint_rule(sig: Signature, c: str) -> RewriteRule:
    """cy(x.m[x]) -> m[cy(x.m[x])]: sound for AxCy but not terminating."""
    meta = {"m": MetaArity((c,), (c,))}
    lhs = cy(("x",), MetaApp("m", (Var("x"),)), (c,))
    return RewriteRule("fix", meta, lhs, MetaApp("m", (lhs,)), key=(c,))


class _SingleRule(RuleFamily):
    def __init__(self, rule: RewriteRule):
        self.rule = rule
        self.name = rule.name
        self.title = rule.name

    def instance_at(self, sig, t):
        return self.rule

    def representatives(self, sig, max_width):
        return [self.rule]


def single_rule_set(sig: Signature, rule: RewriteRule) -> RuleSet:
    return RuleSet(rule.name, sig, [_SingleRule(rule)])
