# Copyright (c) Meta Platforms, Inc. and affiliates.
# All rights reserved.

# This source code is licensed under the license found in the
# LICENSE file in the root directory of this source tree.

"""
Elaboration of parsed programs into kernel terms.

Type information flows both ways: a term is elaborated against an expected
type sequence when the context knows one, and its type is synthesized
otherwise. Overloaded constructor names (the same `+` in two datatypes) are
resolved by the expected type first and by trying each candidate second.
Variables whose type is not yet known (unannotated cycle binders, spec
variables) are holes that the first use against a known type fills.

Functions are not kernel symbols: a call is elaborated by instantiating the
function body at the argument types and substituting the arguments for the
parameters. `fun f by recursion` definitions become the paired fold
(v, w. v) @ fold[c -> b, c](E'; t) whose structure terms compute the result
together with a copy of the argument.
"""

import contextlib
import dataclasses
import logging
import re
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Set, Tuple, Union

from cycfold.modeling.kernel import (
    App,
    at,
    cy,
    fresh,
    KernelError,
    lam,
    Literal,
    subst_vars,
    Term,
    tup,
    TypeSeq,
    Var,
)
from cycfold.modeling.signature import ConstructorDecl, DatatypeDecl, PRIMITIVE_TYPES, Signature
from cycfold.modeling.typecheck import fmt_types, TypeChecker, TypingError
from cycfold.surface.parser import (
    CtypeDecl,
    Directive,
    Equation,
    FunDef,
    FunRec,
    FunSig,
    parse,
    parse_term,
    SBinder,
    SCall,
    SCompose,
    SConst,
    SCycle,
    SFold,
    SInfix,
    SKFold,
    SLam,
    SNum,
    SourceFile,
    SpecDef,
    SStr,
    STerm,
    STuple,
    SurfaceError,
    SVar,
)
from cycfold.surface.printer import format_sterm

_PROJECTION = re.compile(r"pi([1-9][0-9]*)")


class _Hole:
    """A variable whose type is decided by its first typed use."""

    def __init__(self, name: str):
        self.name = name
        self.type: Optional[str] = None


Env = Dict[str, Union[str, _Hole]]


@dataclass
class Definition:
    params: Tuple[str, ...]
    body: Term
    type: TypeSeq

    def instantiate(self, args: Sequence[Term]) -> Term:
        return subst_vars(self.body, dict(zip(self.params, args)))


@dataclass
class Command:
    kind: str
    terms: Tuple[Term, ...]
    type: TypeSeq
    line: int = 0
    text: str = ""


@dataclass
class SpecEquation:
    lhs: Term
    rhs: Term
    var_types: Dict[str, str]
    type: TypeSeq
    line: int = 0
    text: str = ""


@dataclass
class Program:
    sig: Signature
    source: SourceFile = field(default_factory=SourceFile)
    funs: Dict[str, Union[FunDef, FunRec]] = field(default_factory=dict)
    sigs: Dict[str, FunSig] = field(default_factory=dict)
    specs: List[SpecEquation] = field(default_factory=list)
    commands: List[Command] = field(default_factory=list)

    def __post_init__(self):
        self.elaborator = Elaborator(self)

    def term(self, text: str, expected: Optional[TypeSeq] = None) -> Term:
        """Elaborate a closed term written in the surface syntax."""
        return self.elaborator.closed(parse_term(text), expected)[0]

    def typed_term(self, text: str, expected: Optional[TypeSeq] = None) -> Tuple[Term, TypeSeq]:
        return self.elaborator.closed(parse_term(text), expected)

    def call(self, name: str, *args: Term) -> Term:
        """Apply a program function to kernel terms."""
        checker = TypeChecker(self.sig)
        arg_types = tuple(checker.infer({}, {}, a)[0] for a in args)
        return self.elaborator.definition(name, arg_types, None).instantiate(args)

    @property
    def path(self) -> str:
        return self.source.path


class Elaborator:
    def __init__(self, program: Program):
        self.program = program
        self.sig = program.sig
        self._holes: List[_Hole] = []
        self._inlining: List[str] = []
        # (function, pattern variable -> result binders, result types) inside `by recursion`
        self._rec: Optional[Tuple[str, Dict[str, Tuple[str, ...]], TypeSeq]] = None
        self._definitions: Dict[Tuple, Definition] = {}

    # ------------------------------------------------------------------
    # entry points
    # ------------------------------------------------------------------

    def closed(self, t: STerm, expected: Optional[TypeSeq] = None) -> Tuple[Term, TypeSeq]:
        return self.elab(t, {}, expected)

    def equation(self, eq: Equation) -> SpecEquation:
        names = sorted(self._free_names(eq.lhs, frozenset()) | self._free_names(eq.rhs, frozenset()))
        holes = {n: _Hole(n) for n in names}
        self._holes.extend(holes.values())
        env: Env = dict(holes)
        lhs, ty = self.elab(eq.lhs, env, None)
        rhs, _ = self.elab(eq.rhs, env, ty)
        var_types = {}
        for name, hole in holes.items():
            if hole.type is None:
                raise SurfaceError(f"cannot infer the type of spec variable {name}", eq.line)
            var_types[name] = hole.type
        text = f"{format_sterm(eq.lhs)} = {format_sterm(eq.rhs)}"
        return SpecEquation(lhs, rhs, var_types, ty, eq.line, text)

    def definition(
        self, name: str, arg_types: TypeSeq, expected: Optional[TypeSeq]
    ) -> Definition:
        fun = self.program.funs.get(name)
        if fun is None:
            raise TypingError(f"unknown function {name}")
        decl = self.program.sigs.get(name)
        if decl is not None:
            if tuple(arg_types) != decl.args:
                raise TypingError(
                    f"{name} takes {fmt_types(decl.args)}, applied to {fmt_types(arg_types)}"
                )
            expected = decl.result
        key = (name, tuple(arg_types), None if expected is None else tuple(expected))
        if key in self._definitions:
            return self._definitions[key]
        if name in self._inlining:
            raise SurfaceError(
                f"{name} calls itself; write recursive definitions as `fun {name} by recursion`",
                fun.line,
            )
        saved_rec, self._rec = self._rec, None
        self._inlining.append(name)
        try:
            if isinstance(fun, FunRec):
                out = self._primrec(fun, decl)
            else:
                params = fun.params or ()
                if len(params) != len(arg_types):
                    raise TypingError(
                        f"{name} takes {len(params)} arguments, applied to {len(arg_types)}"
                    )
                body, ty = self.elab(fun.body, dict(zip(params, arg_types)), expected)
                out = Definition(tuple(params), body, ty)
        finally:
            self._inlining.pop()
            self._rec = saved_rec
        logging.debug(f"instantiated {name} at {fmt_types(arg_types)} -> {fmt_types(out.type)}")
        self._definitions[key] = out
        return out

    # ------------------------------------------------------------------
    # terms
    # ------------------------------------------------------------------

    def elab(self, t: STerm, env: Env, expected: Optional[TypeSeq]) -> Tuple[Term, TypeSeq]:
        term, ty = self._elab(t, env, expected)
        if expected is not None and tuple(expected) != tuple(ty):
            raise TypingError(
                f"expected {fmt_types(expected)} but {format_sterm(t)} has type {fmt_types(ty)}"
            )
        return term, tuple(ty)

    def _elab(self, t: STerm, env: Env, expected: Optional[TypeSeq]) -> Tuple[Term, TypeSeq]:
        if isinstance(t, SVar):
            return self._var(t, env, expected)
        if isinstance(t, SConst):
            return self._construct(t.name, (), env, expected)
        if isinstance(t, SNum):
            return self._numeral(t.value, env, expected)
        if isinstance(t, SStr):
            return self._literal(t, expected)
        if isinstance(t, STuple):
            return self._tuple(t, env, expected)
        if isinstance(t, SCall):
            return self._call(t, env, expected)
        if isinstance(t, SInfix):
            return self._construct(t.op, (t.left, t.right), env, expected)
        if isinstance(t, SCycle):
            return self._cycle(t, env, expected)
        if isinstance(t, SCompose):
            return self._compose(t, env, expected)
        if isinstance(t, SFold):
            return self._fold(t, env, expected)
        if isinstance(t, SKFold):
            return self._kfold(t, env)
        raise SurfaceError(f"cannot elaborate {t!r}")

    def _var(self, t: SVar, env: Env, expected) -> Tuple[Term, TypeSeq]:
        if t.name in env:
            ty = env[t.name]
            if isinstance(ty, _Hole):
                if ty.type is None:
                    if expected is None or len(expected) != 1:
                        raise TypingError(
                            f"cannot infer the type of {t.name}; annotate its binder as {t.name}^Type"
                        )
                    ty.type = expected[0]
                ty = ty.type
            return Var(t.name), (ty,)
        if t.name in self.program.funs:
            return self._apply(t.name, (), env, expected)
        return self._construct(t.name, (), env, expected)

    def _literal(self, t: SStr, expected) -> Tuple[Term, TypeSeq]:
        if expected is not None and len(expected) == 1 and self.sig.is_primitive(expected[0]):
            return Literal(t.payload, expected[0]), (expected[0],)
        ty = PRIMITIVE_TYPES[0]
        if ty not in self.sig.base_types:
            raise TypingError(f"string literal {format_sterm(t)} but no type uses {ty}")
        return Literal(t.payload, ty), (ty,)

    def _tuple(self, t: STuple, env: Env, expected) -> Tuple[Term, TypeSeq]:
        if expected is not None and len(expected) == len(t.items):
            pieces = [self.elab(item, env, (ty,)) for item, ty in zip(t.items, expected)]
        else:
            pieces = [self.elab(item, env, None) for item in t.items]
        ty: TypeSeq = ()
        for _, item_ty in pieces:
            ty = ty + item_ty
        return tup(*(term for term, _ in pieces)), ty

    def _call(self, t: SCall, env: Env, expected) -> Tuple[Term, TypeSeq]:
        if self._rec is not None and t.name == self._rec[0]:
            return self._recursive_call(t, env)
        if t.name in env:
            raise TypingError(f"{t.name} is a variable and cannot be applied")
        if t.name in self.program.funs:
            return self._apply(t.name, t.args, env, expected)
        m = _PROJECTION.fullmatch(t.name)
        if m is not None and len(t.args) == 1 and not self.sig.constructors_named(t.name):
            return self._project(int(m.group(1)), t.args[0], env)
        return self._construct(t.name, t.args, env, expected)

    def _apply(self, name: str, args: Sequence[STerm], env: Env, expected) -> Tuple[Term, TypeSeq]:
        decl = self.program.sigs.get(name)
        if decl is not None and len(decl.args) != len(args):
            raise TypingError(f"{name} takes {len(decl.args)} arguments, applied to {len(args)}")
        terms, arg_types = [], []
        for i, a in enumerate(args):
            term, ty = self.elab(a, env, None if decl is None else (decl.args[i],))
            if len(ty) != 1:
                raise TypingError(
                    f"argument {format_sterm(a)} of {name} has type {fmt_types(ty)}; arguments are single values"
                )
            terms.append(term)
            arg_types.append(ty[0])
        d = self.definition(name, tuple(arg_types), expected)
        return d.instantiate(terms), d.type

    def _recursive_call(self, t: SCall, env: Env) -> Tuple[Term, TypeSeq]:
        name, results, targets = self._rec
        if len(t.args) == 1 and isinstance(t.args[0], SVar) and t.args[0].name in results:
            return tup(*(Var(v) for v in results[t.args[0].name])), targets
        raise SurfaceError(
            f"{format_sterm(t)}: {name} may only be applied to a recursive argument of its pattern"
        )

    def _project(self, i: int, arg: STerm, env: Env) -> Tuple[Term, TypeSeq]:
        term, ty = self.elab(arg, env, None)
        if i > len(ty):
            raise TypingError(f"pi{i} of {format_sterm(arg)}, which has type {fmt_types(ty)}")
        ys = tuple(fresh("p") for _ in ty)
        return at(ys, Var(ys[i - 1]), term, ty), (ty[i - 1],)

    def _numeral(self, n: int, env: Env, expected) -> Tuple[Term, TypeSeq]:
        name = str(n)
        if any(not c.args for c in self.sig.constructors_named(name)):
            return self._construct(name, (), env, expected)
        candidates = []
        for decl in self.sig.datatypes.values():
            zero = self.sig.constructor(decl.name, "0")
            succ = self.sig.constructor(decl.name, "S")
            if zero is not None and succ is not None and zero.args == () and succ.args == (decl.name,):
                candidates.append(decl.name)
        if expected is not None:
            candidates = [c for c in candidates if (c,) == tuple(expected)]
        if len(candidates) != 1:
            raise TypingError(f"cannot read {n} as a numeral of {fmt_types(expected or ())}")
        c = candidates[0]
        out: Term = App(f"{c}.0")
        for _ in range(n):
            out = App(f"{c}.S", (out,))
        return out, (c,)

    def _snapshot(self) -> Tuple:
        return tuple((h, h.type) for h in self._holes)

    @staticmethod
    def _restore(snapshot: Tuple):
        for h, ty in snapshot:
            h.type = ty

    def _construct(self, name: str, args: Sequence[STerm], env: Env, expected) -> Tuple[Term, TypeSeq]:
        named = self.sig.constructors_named(name)
        cands = [c for c in named if len(c.args) == len(args)]
        if not cands:
            if named:
                raise TypingError(f"{name} expects {len(named[0].args)} arguments, got {len(args)}")
            if not args:
                raise TypingError(f"unbound variable {name}")
            raise TypingError(f"unknown function {name}")
        if expected is not None:
            if len(expected) != 1:
                raise TypingError(f"{name} builds a single value, expected {fmt_types(expected)}")
            fitting = [c for c in cands if c.result == expected[0]]
            if not fitting:
                raise TypingError(f"expected {expected[0]} but {name} constructs {cands[0].result}")
            cands = fitting
        if len(cands) == 1:
            return self._con_app(cands[0], args, env)
        found, errors = [], []
        for con in cands:
            before = self._snapshot()
            try:
                out = self._con_app(con, args, env)
                found.append((con, out, self._snapshot()))
            except (TypingError, SurfaceError) as e:
                errors.append(e)
            self._restore(before)
        if len(found) == 1:
            con, out, after = found[0]
            self._restore(after)
            return out
        if not found:
            raise errors[0]
        types = ", ".join(con.result for con, _, _ in found)
        raise TypingError(
            f"cannot tell which {name} is meant ({types}); annotate a binder or the fold"
        )

    def _con_app(self, con: ConstructorDecl, args: Sequence[STerm], env: Env) -> Tuple[Term, TypeSeq]:
        terms = [self.elab(a, env, (ty,))[0] for a, ty in zip(args, con.args)]
        return App(con.symbol, tuple(terms)), (con.result,)

    def _bind(self, binders: Sequence[SBinder], types: Sequence, env: Env) -> Env:
        names = [b.name for b in binders]
        if len(set(names)) != len(names):
            raise SurfaceError(f"duplicate binder in {', '.join(names)}")
        for b, ty in zip(binders, types):
            if b.type is not None and not isinstance(ty, _Hole) and b.type != ty:
                raise TypingError(f"binder {b.name} annotated {b.type} but has type {ty}")
            if b.type is not None and b.type not in self.sig.base_types:
                raise SurfaceError(f"unknown type {b.type}")
        inner = dict(env)
        inner.update(zip(names, types))
        return inner

    def _cycle(self, t: SCycle, env: Env, expected) -> Tuple[Term, TypeSeq]:
        names = tuple(b.name for b in t.binders)
        if expected is not None:
            if len(expected) != len(names):
                raise TypingError(
                    f"cycle binding {len(names)} variables where {fmt_types(expected)} is expected"
                )
            types = tuple(expected)
        elif all(b.type is not None for b in t.binders):
            types = tuple(b.type for b in t.binders)
        else:
            holes = [_Hole(b.name) if b.type is None else b.type for b in t.binders]
            self._holes.extend(h for h in holes if isinstance(h, _Hole))
            body, ty = self.elab(t.body, self._bind(t.binders, holes, env), None)
            if len(ty) != len(names):
                raise TypingError(
                    f"cycle binding {len(names)} variables has a body of type {fmt_types(ty)}"
                )
            for h, body_ty in zip(holes, ty):
                if isinstance(h, _Hole):
                    if h.type is not None and h.type != body_ty:
                        raise TypingError(f"{h.name} is used at {h.type} but the cycle has type {body_ty}")
                    h.type = body_ty
                elif h != body_ty:
                    raise TypingError(f"binder annotated {h} but the cycle has type {body_ty}")
            return cy(names, body, ty), ty
        body, _ = self.elab(t.body, self._bind(t.binders, types, env), types)
        return cy(names, body, types), types

    def _compose(self, t: SCompose, env: Env, expected) -> Tuple[Term, TypeSeq]:
        annotated = None
        if all(b.type is not None for b in t.binders):
            annotated = tuple(b.type for b in t.binders)
        arg, arg_ty = self.elab(t.arg, env, annotated)
        if len(arg_ty) != len(t.binders):
            raise TypingError(
                f"composition binds {len(t.binders)} variables to {format_sterm(t.arg)} of type {fmt_types(arg_ty)}"
            )
        body, ty = self.elab(t.body, self._bind(t.binders, arg_ty, env), expected)
        return at(tuple(b.name for b in t.binders), body, arg, arg_ty), ty

    # ------------------------------------------------------------------
    # folds
    # ------------------------------------------------------------------

    def _fold_source(self, ty: TypeSeq, what: str) -> str:
        if len(ty) == 0 or len(set(ty)) != 1 or ty[0] not in self.sig.datatypes:
            raise TypingError(f"fold over {what} of type {fmt_types(ty)}; folds consume a datatype")
        return ty[0]

    def _structure(
        self, source: str, targets: TypeSeq, items: Sequence[SLam], env: Env
    ) -> List[Term]:
        decl = self.sig.datatypes[source]
        if len(items) != len(decl.constructors):
            names = ", ".join(c.name for c in decl.constructors)
            raise SurfaceError(
                f"fold over {source} needs {len(decl.constructors)} structure terms ({names}), got {len(items)}"
            )
        structure = []
        for item, con in zip(items, decl.constructors):
            bt = self.sig.structure_binder_types(con, targets)
            if len(item.binders) != len(bt):
                raise SurfaceError(
                    f"structure term for {con.name} binds {len(item.binders)} variables, needs {len(bt)}"
                )
            body, _ = self.elab(item.body, self._bind(item.binders, bt, env), targets)
            structure.append(lam(tuple(b.name for b in item.binders), body, bt))
        return structure

    def _fold_targets(self, source: str, t: SFold, env: Env, width: int, expected) -> TypeSeq:
        decl = self.sig.datatypes[source]
        for item, con in zip(t.items, decl.constructors):
            if item.binders or con.args:
                continue
            before = self._snapshot()
            try:
                return self.elab(item.body, env, None)[1]
            except (TypingError, SurfaceError):
                self._restore(before)
        if expected is not None and len(expected) % width == 0:
            k = len(expected) // width
            targets = tuple(expected[:k])
            if targets * width == tuple(expected):
                return targets
        raise TypingError(f"cannot infer the result type of this fold; write fold[{source} -> ...]")

    def _fold(self, t: SFold, env: Env, expected) -> Tuple[Term, TypeSeq]:
        if t.ann is not None:
            self._check_ann(t.ann)
            arg, arg_ty = self.elab(t.arg, env, (t.ann.source,))
        else:
            arg, arg_ty = self.elab(t.arg, env, None)
        source = self._fold_source(arg_ty, format_sterm(t.arg))
        if t.ann is not None:
            targets = t.ann.targets
        else:
            targets = self._fold_targets(source, t, env, len(arg_ty), expected)
        structure = self._structure(source, targets, t.items, env)
        symbol = self.sig.fold_symbol(source, targets)
        return self.sig.make_fold(symbol, structure, (), arg, ()), targets * len(arg_ty)

    def _kfold(self, t: SKFold, env: Env) -> Tuple[Term, TypeSeq]:
        self._check_ann(t.ann)
        source, targets = t.ann.source, t.ann.targets
        structure = self._structure(source, targets, t.items, env)
        names = tuple(b.name for b in t.binders)
        inner = self._bind(t.binders, (source,) * len(names), env)
        body, body_ty = self.elab(t.body, inner, None)
        self._fold_source(body_ty, format_sterm(t.body))
        if len(t.params) != len(names) * len(targets):
            raise TypingError(
                f"fold with {len(names)} binders needs {len(names) * len(targets)} parameters, got {len(t.params)}"
            )
        params = [
            self.elab(p, env, (targets[i % len(targets)],))[0] for i, p in enumerate(t.params)
        ]
        symbol = self.sig.fold_symbol(source, targets)
        term = self.sig.make_fold(symbol, structure, names, body, params, (source,) * len(names))
        return term, targets * len(body_ty)

    def _check_ann(self, ann):
        if ann.source not in self.sig.datatypes:
            raise SurfaceError(f"fold source {ann.source} is not a ctype")
        for ty in ann.targets:
            if ty not in self.sig.base_types:
                raise SurfaceError(f"unknown type {ty}")

    # ------------------------------------------------------------------
    # primitive recursion
    # ------------------------------------------------------------------

    def _pattern(self, fun: FunRec, eq: Equation, source: str):
        lhs = eq.lhs
        if not (isinstance(lhs, SCall) and lhs.name == fun.name and len(lhs.args) == 1):
            raise SurfaceError(f"equation of {fun.name} must have the form {fun.name}(pattern)", eq.line)
        pat = lhs.args[0]
        if isinstance(pat, SCall):
            name, args = pat.name, pat.args
        elif isinstance(pat, SInfix):
            name, args = pat.op, (pat.left, pat.right)
        elif isinstance(pat, (SVar, SConst)):
            name, args = pat.name, ()
        elif isinstance(pat, SNum):
            name, args = str(pat.value), ()
        else:
            raise SurfaceError(f"{format_sterm(pat)} is not a constructor pattern", eq.line)
        con = self.sig.constructor(source, name)
        if con is None:
            raise SurfaceError(f"{name} is not a constructor of {source}", eq.line)
        if len(args) != len(con.args) or not all(isinstance(a, SVar) for a in args):
            raise SurfaceError(
                f"pattern for {con.name} must apply it to {len(con.args)} distinct variables", eq.line
            )
        names = tuple(a.name for a in args)
        if len(set(names)) != len(names):
            raise SurfaceError(f"repeated variable in pattern {format_sterm(pat)}", eq.line)
        return con, names

    def _primrec(self, fun: FunRec, decl: Optional[FunSig]) -> Definition:
        if decl is None or len(decl.args) != 1 or decl.args[0] not in self.sig.datatypes:
            raise SurfaceError(
                f"`fun {fun.name} by recursion` needs a signature `fun {fun.name} : C -> B` over a ctype C",
                fun.line,
            )
        source, targets = decl.args[0], decl.result
        by_con: Dict[str, Tuple[Equation, Tuple[str, ...]]] = {}
        for eq in fun.equations:
            con, names = self._pattern(fun, eq, source)
            if con.symbol in by_con:
                raise SurfaceError(f"second equation for {fun.name}({con.name} ...)", eq.line)
            by_con[con.symbol] = (eq, names)
        full = tuple(targets) + (source,)
        structure = []
        for con in self.sig.datatypes[source].constructors:
            if con.symbol not in by_con:
                raise SurfaceError(f"{fun.name} has no equation for {con.name}", fun.line)
            eq, names = by_con[con.symbol]
            binders: List[str] = []
            types: List[str] = []
            env: Env = {}
            results: Dict[str, Tuple[str, ...]] = {}
            for x, a in zip(names, con.args):
                if a == source:
                    vs = tuple(fresh(f"{x}_v") for _ in targets)
                    results[x] = vs
                    binders.extend(vs + (x,))
                    types.extend(full)
                else:
                    binders.append(x)
                    types.append(a)
                env[x] = a
            self._rec = (fun.name, results, tuple(targets))
            try:
                rhs, _ = self.elab(eq.rhs, env, tuple(targets))
            finally:
                self._rec = None
            rebuilt = App(con.symbol, tuple(Var(x) for x in names))
            structure.append(lam(binders, tup(rhs, rebuilt), types))
        symbol = self.sig.fold_symbol(source, full)
        fold = self.sig.make_fold(symbol, structure, (), Var("t"), ())
        ys = tuple(fresh("v") for _ in targets) + (fresh("w"),)
        body = at(ys, tup(*(Var(y) for y in ys[:-1])), fold, full)
        return Definition(("t",), body, tuple(targets))

    # ------------------------------------------------------------------

    def _free_names(self, t: STerm, bound: frozenset) -> Set[str]:
        """Variables of a spec equation: names that are neither bound, functions
        nor nullary constructors."""
        if isinstance(t, SVar):
            if t.name in bound or t.name in self.program.funs:
                return set()
            if any(not c.args for c in self.sig.constructors_named(t.name)):
                return set()
            return {t.name}
        out: Set[str] = set()
        if isinstance(t, SCall):
            for a in t.args:
                out |= self._free_names(a, bound)
        elif isinstance(t, STuple):
            for a in t.items:
                out |= self._free_names(a, bound)
        elif isinstance(t, SInfix):
            out = self._free_names(t.left, bound) | self._free_names(t.right, bound)
        elif isinstance(t, SCycle):
            out = self._free_names(t.body, bound | {b.name for b in t.binders})
        elif isinstance(t, SCompose):
            out = self._free_names(t.arg, bound)
            out |= self._free_names(t.body, bound | {b.name for b in t.binders})
        elif isinstance(t, (SFold, SKFold)):
            for item in t.items:
                out |= self._free_names(item.body, bound | {b.name for b in item.binders})
            if isinstance(t, SFold):
                out |= self._free_names(t.arg, bound)
            else:
                out |= self._free_names(t.body, bound | {b.name for b in t.binders})
                for p in t.params:
                    out |= self._free_names(p, bound)
        return out


# ---------------------------------------------------------------------------
# whole files
# ---------------------------------------------------------------------------


def elaborate_signature(sf: SourceFile) -> Signature:
    sig = Signature()
    for decl in sf.of_kind(CtypeDecl):
        for con in decl.constructors:
            for a in con.args:
                if a == decl.name or a in sig.datatypes:
                    continue
                if a in PRIMITIVE_TYPES:
                    sig.add_primitive(a)
                    continue
                raise SurfaceError(f"unknown type {a} in constructor {con.name}", decl.line)
        try:
            sig.add_datatype(
                DatatypeDecl(
                    decl.name,
                    [ConstructorDecl(c.name, c.args, decl.name) for c in decl.constructors],
                    decl.axbr,
                )
            )
        except KernelError as e:
            raise SurfaceError(str(e), decl.line) from None
    return sig


def elaborate_fun(
    name: str,
    program: Program,
    arg_types: Sequence[str],
    expected: Optional[TypeSeq] = None,
) -> Definition:
    """Instantiate function `name` at the given argument types."""
    return program.elaborator.definition(name, tuple(arg_types), expected)


def _called(t) -> Set[str]:
    """Every name a surface term applies or mentions."""
    out: Set[str] = set()
    if isinstance(t, (SVar, SCall)):
        out.add(t.name)
    if dataclasses.is_dataclass(t):
        for f in dataclasses.fields(t):
            value = getattr(t, f.name)
            for v in value if isinstance(value, tuple) else (value,):
                out |= _called(v)
    return out


@contextlib.contextmanager
def _located(line: int):
    """Attach a line number to errors raised while elaborating one item."""
    try:
        yield
    except SurfaceError as e:
        if e.line:
            raise
        raise SurfaceError(str(e), line) from None
    except TypingError as e:
        if str(e).startswith("line "):
            raise
        raise TypingError(f"line {line}: {e}") from None
    except KernelError as e:
        raise SurfaceError(str(e), line) from None


def elaborate(sf: SourceFile) -> Program:
    sig = elaborate_signature(sf)
    program = Program(sig, sf)
    program.sigs = {s.name: s for s in sf.of_kind(FunSig)}
    for s in program.sigs.values():
        for ty in s.args + s.result:
            if ty not in sig.base_types:
                raise SurfaceError(f"unknown type {ty} in the signature of {s.name}", s.line)
    all_funs = {f.name for f in sf.items if isinstance(f, (FunDef, FunRec))}
    checker = TypeChecker(sig)
    elab = program.elaborator
    for item in sf.items:
        if isinstance(item, (FunDef, FunRec)):
            body_terms = [item.body] if isinstance(item, FunDef) else [
                t for eq in item.equations for t in (eq.lhs, eq.rhs)
            ]
            declared = set(program.funs) | {item.name}
            for t in body_terms:
                later = (_called(t) & all_funs) - declared
                if later:
                    raise SurfaceError(
                        f"{item.name} uses {', '.join(sorted(later))} before its declaration", item.line
                    )
            program.funs[item.name] = item
            decl = program.sigs.get(item.name)
            if decl is None and isinstance(item, FunRec):
                raise SurfaceError(
                    f"`fun {item.name} by recursion` needs a signature `fun {item.name} : C -> B`",
                    item.line,
                )
            if decl is not None:
                with _located(item.line):
                    elaborate_fun(item.name, program, decl.args)
        elif isinstance(item, SpecDef):
            for eq in item.equations:
                with _located(eq.line):
                    spec = elab.equation(eq)
                    checker.infer({}, spec.var_types, spec.lhs, spec.type)
                    checker.infer({}, spec.var_types, spec.rhs, spec.type)
                program.specs.append(spec)
        elif isinstance(item, Directive):
            with _located(item.line):
                program.commands.append(_command(elab, checker, item))
    logging.info(
        f"elaborated {sf.path}: {len(sig.datatypes)} ctypes, {len(program.funs)} functions, "
        f"{len(program.specs)} spec equations, {len(program.commands)} directives"
    )
    return program


def _command(elab: Elaborator, checker: TypeChecker, item: Directive) -> Command:
    if item.kind == "gscheck":
        return Command("gscheck", (), (), item.line, "gscheck")
    first, ty = elab.closed(item.terms[0])
    terms = [first]
    if item.kind in ("prove", "bisim"):
        terms.append(elab.closed(item.terms[1], ty)[0])
    for term in terms:
        checker.infer({}, {}, term, ty)
    sep = {"prove": " = ", "bisim": " ~ "}.get(item.kind, "")
    text = sep.join(format_sterm(t) for t in item.terms)
    return Command(item.kind, tuple(terms), ty, item.line, text)


def load_text(text: str, path: str = "<string>") -> Program:
    return elaborate(parse(text, path))
