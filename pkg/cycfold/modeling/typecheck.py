# Copyright (c) Meta Platforms, Inc. and affiliates.
# All rights reserved.

# This source code is licensed under the license found in the
# LICENSE file in the root directory of this source tree.

from dataclasses import dataclass
from typing import Dict, Optional, Tuple

from cycfold.modeling.kernel import (
    Abs,
    App,
    AT,
    CY,
    Literal,
    MetaApp,
    metavars,
    subst_vars,
    Term,
    TUPLE,
    TypeSeq,
    Var,
)
from cycfold.modeling.signature import MetaArity, Signature

MetaContext = Dict[str, MetaArity]
VarContext = Dict[str, str]


class TypingError(ValueError):
    pass


@dataclass(frozen=True)
class Judgment:
    meta: Tuple[Tuple[str, MetaArity], ...]
    vars: Tuple[Tuple[str, str], ...]
    term: Term
    type: TypeSeq


def fmt_types(ts: TypeSeq) -> str:
    if len(ts) == 0:
        return "()"
    return ", ".join(ts)


class TypeChecker:
    """
    Syntax-directed typing of terms and meta-terms: one rule per node kind.
    The schematic default symbols (tuple, cy, @) are typed at whatever instance
    their arguments demand; fold symbols carry their instance in the symbol.
    Binder types are taken from the abstraction when present and otherwise
    from the position the abstraction occurs in.
    """

    def __init__(self, sig: Signature):
        self.sig = sig

    def infer(
        self,
        meta: Optional[MetaContext],
        vars: Optional[VarContext],
        t: Term,
        expected: Optional[TypeSeq] = None,
    ) -> TypeSeq:
        got = self._infer(meta or {}, dict(vars or {}), t, expected)
        if expected is not None and tuple(expected) != got:
            raise TypingError(
                f"expected {fmt_types(expected)} but {self._show(t)} has type {fmt_types(got)}"
            )
        return got

    def judgment(self, meta, vars, t) -> Judgment:
        ty = self.infer(meta, vars, t)
        return Judgment(
            tuple(sorted((meta or {}).items())), tuple(sorted((vars or {}).items())), t, ty
        )

    def check_rule(self, rule) -> Tuple[Judgment, Judgment]:
        lhs_metas = set(rule.meta)
        missing = metavars(rule.rhs) - metavars(rule.lhs)
        if missing:
            raise TypingError(
                f"rule {rule.name}: metavariables {sorted(missing)} of the right-hand side do not occur on the left"
            )
        undeclared = (metavars(rule.lhs) | metavars(rule.rhs)) - lhs_metas
        if undeclared:
            raise TypingError(f"rule {rule.name}: undeclared metavariables {sorted(undeclared)}")
        left = self.judgment(rule.meta, {}, rule.lhs)
        right = self.judgment(rule.meta, {}, rule.rhs)
        if left.type != right.type:
            raise TypingError(
                f"rule {rule.name}: left side has type {fmt_types(left.type)}, right side {fmt_types(right.type)}"
            )
        return left, right

    def subst_vars_checked(self, vars: VarContext, t: Term, bindings: Dict[str, Term]) -> Term:
        for name, value in bindings.items():
            if name not in vars:
                raise TypingError(f"substituting for unknown variable {name}")
            self.infer({}, vars, value, (vars[name],))
        return subst_vars(t, bindings)

    def _show(self, t: Term) -> str:
        from cycfold.surface.printer import format_term

        try:
            return format_term(t, self.sig)
        except Exception:
            return repr(t)

    def _infer(self, meta: MetaContext, vars: VarContext, t: Term, expected) -> TypeSeq:
        if isinstance(t, Var):
            if t.name not in vars:
                raise TypingError(f"unbound variable {t.name}")
            return (vars[t.name],)
        if isinstance(t, Literal):
            if t.type not in self.sig.base_types:
                raise TypingError(f"literal {t.payload!r} of undeclared type {t.type}")
            return (t.type,)
        if isinstance(t, MetaApp):
            if t.name not in meta:
                raise TypingError(f"unknown metavariable {t.name}")
            arity = meta[t.name]
            if len(arity.args) != len(t.args):
                raise TypingError(
                    f"metavariable {t.name} expects {len(arity.args)} arguments, got {len(t.args)}"
                )
            for a, ty in zip(t.args, arity.args):
                self._check(meta, vars, a, (ty,))
            return arity.result
        if isinstance(t, Abs):
            raise TypingError(f"abstraction {self._show(t)} outside a binding position")
        assert isinstance(t, App)
        if t.symbol == TUPLE:
            out: TypeSeq = ()
            for a in t.args:
                out = out + self._infer(meta, vars, a, None)
            return out
        if t.symbol == CY:
            return self._infer_cy(meta, vars, t, expected)
        if t.symbol == AT:
            return self._infer_at(meta, vars, t, expected)
        if self.sig.is_fold(t.symbol):
            return self._infer_fold(meta, vars, t)
        con = self.sig.constructors.get(t.symbol)
        if con is None:
            raise TypingError(f"unknown function symbol {t.symbol}")
        if len(con.args) != len(t.args):
            raise TypingError(
                f"{con.name} expects {len(con.args)} arguments, got {len(t.args)}"
            )
        for a, ty in zip(t.args, con.args):
            self._check(meta, vars, a, (ty,))
        return (con.result,)

    def _check(self, meta, vars, t: Term, expected: TypeSeq):
        got = self._infer(meta, vars, t, expected)
        if got != tuple(expected):
            raise TypingError(
                f"expected {fmt_types(expected)} but {self._show(t)} has type {fmt_types(got)}"
            )

    def _bind(self, vars: VarContext, abs_: Abs, types: TypeSeq) -> VarContext:
        if abs_.types is not None and tuple(abs_.types) != tuple(types):
            raise TypingError(
                f"binders {', '.join(abs_.binders)} annotated {fmt_types(abs_.types)} but used at {fmt_types(types)}"
            )
        if len(types) != len(abs_.binders):
            raise TypingError(
                f"{len(abs_.binders)} binders where {len(types)} are needed"
            )
        inner = dict(vars)
        inner.update(zip(abs_.binders, types))
        return inner

    def _infer_cy(self, meta, vars, t: App, expected) -> TypeSeq:
        body = t.args[0]
        if not isinstance(body, Abs):
            raise TypingError("cy expects an abstraction")
        if body.types is not None:
            types = tuple(body.types)
        elif expected is not None:
            types = tuple(expected)
        else:
            raise TypingError(f"cannot infer the binder types of {self._show(t)}")
        inner = self._bind(vars, body, types)
        self._check(meta, inner, body.body, types)
        return types

    def _infer_at(self, meta, vars, t: App, expected) -> TypeSeq:
        fn, arg = t.args
        if not isinstance(fn, Abs):
            raise TypingError("@ expects an abstraction on its left")
        arg_types = self._infer(meta, vars, arg, fn.types)
        inner = self._bind(vars, fn, arg_types)
        return self._infer(meta, inner, fn.body, expected)

    def _infer_fold(self, meta, vars, t: App) -> TypeSeq:
        try:
            parts = self.sig.fold_parts(t)
        except Exception as e:
            raise TypingError(str(e))
        decl = self.sig.datatypes[parts.source]
        for con, e in zip(decl.constructors, parts.structure):
            binder_types = self.sig.structure_binder_types(con, parts.targets)
            if len(binder_types) == 0:
                self._check(meta, vars, e, parts.targets)
                continue
            if not isinstance(e, Abs):
                raise TypingError(
                    f"structure term for {con.name} must bind {len(binder_types)} variables"
                )
            self._check(meta, self._bind(vars, e, binder_types), e.body, parts.targets)
        n = len(parts.binders)
        inner = dict(vars)
        if n > 0:
            if parts.binder_types is not None and set(parts.binder_types) != {parts.source}:
                raise TypingError(f"fold binders must have type {parts.source}")
            inner.update((b, parts.source) for b in parts.binders)
        body_type = self._infer(meta, inner, parts.body, None)
        if any(ty != parts.source for ty in body_type):
            raise TypingError(
                f"fold over {parts.source} applied to a body of type {fmt_types(body_type)}"
            )
        if len(parts.params) != n * parts.k:
            raise TypingError(
                f"fold with {n} binders needs {n * parts.k} parameters, got {len(parts.params)}"
            )
        for i, p in enumerate(parts.params):
            self._check(meta, vars, p, (parts.targets[i % parts.k],))
        return parts.targets * len(body_type)
