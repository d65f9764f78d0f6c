# Copyright (c) Meta Platforms, Inc. and affiliates.
# All rights reserved.

# This source code is licensed under the license found in the
# LICENSE file in the root directory of this source tree.

"""
Parsing of .cyc source files into a surface AST.

The grammar lives next to this file in `grammar.lark`. Items carry the line
they start on so later stages can report positions; the line never takes part
in equality, which keeps parse(print(parse(src))) == parse(src) meaningful.
"""

import functools
import logging
from dataclasses import dataclass, field
from typing import Dict, Optional, Set, Tuple, Union

import lark as L

# infix spellings that denote the same constructor name
OP_ALIASES = {"∨": "\\/", "∧": "/\\", "∷": "::"}


def canonical_op(op: str) -> str:
    return OP_ALIASES.get(op, op)


class SurfaceError(ValueError):
    def __init__(self, message: str, line: int = 0, column: int = 0):
        self.line = line
        self.column = column
        where = f"line {line}" + (f", column {column}" if column else "")
        super().__init__(f"{where}: {message}" if line else message)


# ---------------------------------------------------------------------------
# surface terms
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SBinder:
    name: str
    type: Optional[str] = None


@dataclass(frozen=True)
class SVar:
    name: str


@dataclass(frozen=True)
class SCall:
    name: str
    args: Tuple["STerm", ...]


@dataclass(frozen=True)
class SNum:
    value: int


@dataclass(frozen=True)
class SStr:
    payload: str


@dataclass(frozen=True)
class SConst:
    name: str


@dataclass(frozen=True)
class STuple:
    items: Tuple["STerm", ...]


@dataclass(frozen=True)
class SCycle:
    binders: Tuple[SBinder, ...]
    body: "STerm"


@dataclass(frozen=True)
class SCompose:
    binders: Tuple[SBinder, ...]
    body: "STerm"
    arg: "STerm"


@dataclass(frozen=True)
class SInfix:
    op: str
    left: "STerm"
    right: "STerm"


@dataclass(frozen=True)
class SLam:
    """A structure term with its binders, `k. x. plus(k, x)`."""

    binders: Tuple[SBinder, ...]
    body: "STerm"


@dataclass(frozen=True)
class FoldAnn:
    source: str
    targets: Tuple[str, ...]


@dataclass(frozen=True)
class SFold:
    ann: Optional[FoldAnn]
    items: Tuple[SLam, ...]
    arg: "STerm"


@dataclass(frozen=True)
class SKFold:
    """Kernel fold with its parameter binders and parameters spelled out."""

    ann: FoldAnn
    items: Tuple[SLam, ...]
    binders: Tuple[SBinder, ...]
    body: "STerm"
    params: Tuple["STerm", ...]


STerm = Union[SVar, SCall, SNum, SStr, SConst, STuple, SCycle, SCompose, SInfix, SFold, SKFold]


# ---------------------------------------------------------------------------
# items
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConDecl:
    name: str
    args: Tuple[str, ...]
    result: str


@dataclass(frozen=True)
class CtypeDecl:
    name: str
    constructors: Tuple[ConDecl, ...]
    axbr: Optional[Tuple[str, str]] = None
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class FunSig:
    name: str
    args: Tuple[str, ...]
    result: Tuple[str, ...]
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class FunDef:
    name: str
    # None when declared without parentheses, `fun g = ...`
    params: Optional[Tuple[str, ...]]
    body: STerm
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Equation:
    lhs: STerm
    rhs: STerm
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class FunRec:
    """`fun f by recursion` followed by one equation f(d(x..)) = rhs per constructor."""

    name: str
    equations: Tuple[Equation, ...]
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class SpecDef:
    equations: Tuple[Equation, ...]
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Directive:
    kind: str
    terms: Tuple[STerm, ...] = ()
    line: int = field(default=0, compare=False)


Item = Union[CtypeDecl, FunSig, FunDef, FunRec, SpecDef, Directive]


@dataclass(frozen=True)
class SourceFile:
    items: Tuple[Item, ...] = ()
    path: str = field(default="<string>", compare=False)

    def of_kind(self, kind):
        return [item for item in self.items if isinstance(item, kind)]


# ---------------------------------------------------------------------------
# parse tree -> AST
# ---------------------------------------------------------------------------


def _unescape(s: str) -> str:
    out = []
    it = iter(s[1:-1])
    for ch in it:
        if ch == "\\":
            nxt = next(it, "")
            out.append({"n": "\n", "t": "\t"}.get(nxt, nxt))
        else:
            out.append(ch)
    return "".join(out)


class ToAst(L.Transformer):
    def start(self, items):
        return SourceFile(tuple(items))

    # declarations

    @L.v_args(meta=True)
    def ctype(self, meta, children):
        name = str(children[0])
        decls = tuple(c for c in children[1:] if isinstance(c, ConDecl))
        axioms = [c for c in children[1:] if isinstance(c, list)]
        axbr = None
        for axiom, operands in axioms[0] if axioms else []:
            if axiom == "AxCy":
                if operands:
                    raise SurfaceError("AxCy takes no arguments", meta.line)
            elif axiom == "AxBr":
                if not operands:
                    raise SurfaceError("AxBr needs a unit and a branch constructor", meta.line)
                axbr = operands
            else:
                raise SurfaceError(f"unknown axiom scheme {axiom}", meta.line)
        return CtypeDecl(name, decls, axbr, line=meta.line)

    def con_decl(self, children):
        name = children[0]
        args = children[1] if len(children) == 3 else ()
        return ConDecl(name, tuple(args), str(children[-1]))

    def arg_types(self, children):
        return children[0]

    def con_name(self, children):
        return canonical_op(str(children[0]))

    def axioms(self, children):
        return list(children)

    def axiom(self, children):
        operands = tuple(children[1:]) if len(children) == 3 else None
        return str(children[0]), operands

    def type_list(self, children):
        return tuple(str(c) for c in children)

    @L.v_args(meta=True)
    def fun_sig(self, meta, children):
        return FunSig(str(children[0]), children[1], children[2], line=meta.line)

    @L.v_args(meta=True)
    def fun_def(self, meta, children):
        params = children[1] if len(children) == 3 else None
        return FunDef(str(children[0]), params, children[-1], line=meta.line)

    def params(self, children):
        return tuple(str(c) for c in children)

    @L.v_args(meta=True)
    def fun_rec(self, meta, children):
        return FunRec(str(children[0]), tuple(children[1:]), line=meta.line)

    @L.v_args(meta=True)
    def spec(self, meta, children):
        return SpecDef(tuple(children), line=meta.line)

    @L.v_args(meta=True)
    def equation(self, meta, children):
        return Equation(children[0], children[1], line=meta.line)

    @L.v_args(meta=True)
    def eval(self, meta, children):
        return Directive("eval", tuple(children), line=meta.line)

    @L.v_args(meta=True)
    def prove(self, meta, children):
        return Directive("prove", tuple(children), line=meta.line)

    @L.v_args(meta=True)
    def bisim(self, meta, children):
        return Directive("bisim", tuple(children), line=meta.line)

    @L.v_args(meta=True)
    def gscheck(self, meta, children):
        return Directive("gscheck", (), line=meta.line)

    # terms

    def var(self, children):
        return SVar(str(children[0]))

    def call(self, children):
        args = children[1] if len(children) == 2 else ()
        return SCall(str(children[0]), args)

    def num(self, children):
        return SNum(int(children[0]))

    def string(self, children):
        return SStr(_unescape(str(children[0])))

    def const(self, children):
        return SConst(str(children[0]))

    def stuple(self, children):
        return STuple(children[0] if children else ())

    def args(self, children):
        return tuple(children)

    def infix_app(self, children):
        left, op, right = children
        return SInfix(canonical_op(str(op)), left, right)

    def cons_app(self, children):
        left, op, right = children
        return SInfix(canonical_op(str(op)), left, right)

    def cycle(self, children):
        return SCycle(children[0], children[1])

    def compose(self, children):
        return SCompose(children[0], children[1], children[2])

    def binders(self, children):
        return tuple(children)

    def binder(self, children):
        return SBinder(str(children[0]), str(children[1]) if len(children) == 2 else None)

    def fold_ann(self, children):
        return FoldAnn(str(children[0]), children[1])

    def fold_items(self, children):
        return tuple(children)

    def fold_item(self, children):
        return SLam(tuple(children[:-1]), children[-1])

    def kbody(self, children):
        if len(children) == 2:
            return children[0], children[1]
        return (), children[0]

    def fold(self, children):
        if isinstance(children[0], FoldAnn):
            return SFold(children[0], children[1], children[2])
        return SFold(None, children[0], children[1])

    def kfold(self, children):
        ann, items, (binders, body) = children[:3]
        params = children[3] if len(children) == 4 else ()
        return SKFold(ann, items, binders, body, params)


@functools.lru_cache()
def _parser() -> L.Lark:
    return L.Lark.open(
        "grammar.lark",
        rel_to=__file__,
        parser="earley",
        lexer="dynamic",
        propagate_positions=True,
    )


def parse(text: str, path: str = "<string>") -> SourceFile:
    try:
        tree = _parser().parse(text)
    except L.UnexpectedInput as e:
        line = max(getattr(e, "line", 0), 0)
        column = max(getattr(e, "column", 0), 0)
        context = e.get_context(text).rstrip() if line else ""
        raise SurfaceError(f"syntax error in {path}\n{context}", line, column) from None
    try:
        sf = ToAst().transform(tree)
    except L.exceptions.VisitError as e:
        if isinstance(e.orig_exc, SurfaceError):
            raise e.orig_exc from None
        raise
    sf = SourceFile(sf.items, path)
    check_source(sf)
    logging.debug(f"parsed {path}: {len(sf.items)} items")
    return sf


def parse_term(text: str) -> STerm:
    """Parse a single term, given as the body of an `eval` directive."""
    sf = parse(f"eval {text}")
    if len(sf.items) != 1:
        raise SurfaceError(f"expected a single term, got {text!r}")
    return sf.items[0].terms[0]


def check_source(sf: SourceFile):
    """Duplicate declarations and AxBr operands."""
    types: Set[str] = set()
    funs: Dict[str, int] = {}
    sigs: Set[str] = set()
    for item in sf.items:
        if isinstance(item, CtypeDecl):
            if item.name in types:
                raise SurfaceError(f"duplicate ctype {item.name}", item.line)
            types.add(item.name)
            seen: Dict[str, ConDecl] = {}
            for con in item.constructors:
                if con.name in seen:
                    raise SurfaceError(
                        f"duplicate constructor {con.name} in {item.name}", item.line
                    )
                if con.result != item.name:
                    raise SurfaceError(
                        f"constructor {con.name} of {item.name} returns {con.result}", item.line
                    )
                seen[con.name] = con
            if item.axbr is not None:
                _check_axbr(item, seen)
        elif isinstance(item, FunSig):
            if item.name in sigs:
                raise SurfaceError(f"duplicate signature for {item.name}", item.line)
            sigs.add(item.name)
        elif isinstance(item, (FunDef, FunRec)):
            if item.name in funs:
                raise SurfaceError(
                    f"duplicate definition of {item.name} (first on line {funs[item.name]})",
                    item.line,
                )
            funs[item.name] = item.line


def _check_axbr(item: CtypeDecl, cons: Dict[str, ConDecl]):
    unit, branch = item.axbr
    for name in (unit, branch):
        if name not in cons:
            raise SurfaceError(
                f"AxBr({unit}, {branch}) names {name}, which is not a constructor of {item.name}",
                item.line,
            )
    if cons[unit].args != ():
        raise SurfaceError(f"AxBr unit {unit} must be nullary", item.line)
    if cons[branch].args != (item.name, item.name):
        raise SurfaceError(
            f"AxBr branch {branch} must have arity {item.name}, {item.name} -> {item.name}",
            item.line,
        )
