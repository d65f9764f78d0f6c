# Copyright (c) Meta Platforms, Inc. and affiliates.
# All rights reserved.

# This source code is licensed under the license found in the
# LICENSE file in the root directory of this source tree.

"""
Printing of kernel terms, rules and surface ASTs in the surface syntax.

Kernel terms print so that they parse back: bound variables get readable
names (base name plus primes), binary constructors spelled as operators print
infix, and cycle binders carry a `^Type` annotation whenever the body alone
does not tell their type.
"""

import re
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple

from cycfold.modeling.kernel import (
    Abs,
    App,
    AT,
    base_name,
    CY,
    free_vars,
    Literal,
    MetaApp,
    Term,
    TUPLE,
    Var,
)
from cycfold.modeling.signature import Signature
from cycfold.surface.parser import (
    CtypeDecl,
    Directive,
    FunDef,
    FunRec,
    FunSig,
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
    SVar,
)

INFIX_OPS = ("+", "\\/", "/\\", "|")
CONS_OPS = ("::",)
KEYWORDS = frozenset(
    "ctype where with axioms fun by recursion spec eval prove bisim gscheck cy fold".split()
)
_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_?]*(-[A-Za-z0-9_?]+)*")

# precedence levels: infix < cons < atom
INFIX, CONS, ATOM = 0, 1, 2


def quote(payload: str) -> str:
    escaped = payload.replace("\\", "\\\\").replace('"', '\\"')
    return '"' + escaped.replace("\n", "\\n").replace("\t", "\\t") + '"'


def _op_level(name: str) -> Optional[int]:
    if name in INFIX_OPS:
        return INFIX
    if name in CONS_OPS:
        return CONS
    return None


def _wrap(s: str, level: int, needed: int) -> str:
    return f"({s})" if level > needed else s


def _con_name(name: str) -> str:
    return f"({name})" if _op_level(name) is not None else name


def _clean(name: str) -> str:
    base = base_name(name).rstrip("'")
    if not _IDENT.fullmatch(base) or base in KEYWORDS:
        return "x"
    return base


class _TermPrinter:
    def __init__(self, sig: Optional[Signature], taken: FrozenSet[str]):
        self.sig = sig
        self.taken = set(taken)

    def name_for(self, name: str, env: Dict[str, str]) -> str:
        base = _clean(name)
        visible = set(env.values()) | self.taken
        candidate = base
        while candidate in visible:
            candidate += "'"
        return candidate

    def bind(self, binders: Sequence[str], env: Dict[str, str]) -> Tuple[List[str], Dict[str, str]]:
        inner = dict(env)
        names = []
        for b in binders:
            n = self.name_for(b, inner)
            inner[b] = n
            names.append(n)
        return names, inner

    def con(self, symbol: str) -> str:
        if self.sig is None:
            return symbol.split(".", 1)[-1] if "." in symbol else symbol
        return self.sig.display_name(symbol)

    def self_typed(self, t: Term) -> bool:
        """Whether an unannotated cycle body determines its own type."""
        if isinstance(t, Literal):
            return True
        if not isinstance(t, App):
            return False
        if t.symbol == TUPLE:
            return all(self.self_typed(a) for a in t.args)
        if t.symbol in (CY, AT) or t.symbol.startswith("fold["):
            return False
        if self.sig is None:
            return True
        name = self.sig.display_name(t.symbol)
        return len(self.sig.constructors_named(name)) == 1

    def binders(self, names, types, annotate: bool) -> str:
        if annotate and types is not None:
            return ", ".join(f"{n}^{ty}" for n, ty in zip(names, types))
        return ", ".join(names)

    def show(self, t: Term, env: Dict[str, str], level: int = INFIX) -> str:
        if isinstance(t, Var):
            return env.get(t.name, t.name)
        if isinstance(t, Literal):
            return quote(t.payload)
        if isinstance(t, MetaApp):
            if not t.args:
                return f"?{t.name}"
            return f"?{t.name}[{', '.join(self.show(a, env) for a in t.args)}]"
        if isinstance(t, Abs):
            names, inner = self.bind(t.binders, env)
            return f"{', '.join(names)}. {self.show(t.body, inner)}"
        assert isinstance(t, App)
        if t.symbol == TUPLE:
            return f"<{', '.join(self.show(a, env) for a in t.args)}>"
        if t.symbol == CY and isinstance(t.args[0], Abs):
            body = t.args[0]
            names, inner = self.bind(body.binders, env)
            annotate = not self.self_typed(body.body)
            return f"cy({self.binders(names, body.types, annotate)}. {self.show(body.body, inner)})"
        if t.symbol == AT and isinstance(t.args[0], Abs):
            fn, arg = t.args
            names, inner = self.bind(fn.binders, env)
            return f"({', '.join(names)}. {self.show(fn.body, inner)}) @ {self.show(arg, env, ATOM)}"
        if self.sig is not None and self.sig.is_fold(t.symbol):
            return self.fold(t, env)
        name = self.con(t.symbol)
        if not t.args:
            return _con_name(name)
        op = _op_level(name)
        if op == INFIX and len(t.args) == 2:
            s = f"{self.show(t.args[0], env, INFIX)} {name} {self.show(t.args[1], env, CONS)}"
            return _wrap(s, level, INFIX)
        if op == CONS and len(t.args) == 2:
            s = f"{self.show(t.args[0], env, ATOM)} {name} {self.show(t.args[1], env, CONS)}"
            return _wrap(s, level, CONS)
        return f"{_con_name(name)}({', '.join(self.show(a, env) for a in t.args)})"

    def item(self, e: Term, env: Dict[str, str]) -> str:
        if isinstance(e, Abs):
            names, inner = self.bind(e.binders, env)
            return "".join(f"{n}. " for n in names) + self.show(e.body, inner)
        return self.show(e, env)

    def fold(self, t: App, env: Dict[str, str]) -> str:
        parts = self.sig.fold_parts(t)
        ann = f"fold[{parts.source} -> {', '.join(parts.targets)}]"
        items = ", ".join(self.item(e, env) for e in parts.structure)
        if not parts.binders and not parts.params:
            return f"{ann} ({items}) {self.show(parts.body, env, ATOM)}"
        names, inner = self.bind(parts.binders, env)
        body = self.show(parts.body, inner)
        if names:
            body = f"{', '.join(names)}. {body}"
        params = ", ".join(self.show(p, env) for p in parts.params)
        return f"{ann}({items}; {body}; {params})"


def format_term(t: Term, sig: Optional[Signature] = None) -> str:
    free = free_vars(t)
    printer = _TermPrinter(sig, free)
    env = {v: v for v in free}
    return printer.show(t, env)


def format_rule(rule, sig: Optional[Signature] = None) -> str:
    free = free_vars(rule.lhs) | free_vars(rule.rhs)
    printer = _TermPrinter(sig, free)
    env = {v: v for v in free}
    out = f"({rule.name}) {printer.show(rule.lhs, env)}  ->  {printer.show(rule.rhs, env)}"
    if rule.guard_text:
        out += f"  if {rule.guard_text}"
    return out


# ---------------------------------------------------------------------------
# surface AST
# ---------------------------------------------------------------------------


def _sbinders(binders: Sequence[SBinder]) -> str:
    return ", ".join(b.name if b.type is None else f"{b.name}^{b.type}" for b in binders)


def _sitem(item: SLam) -> str:
    prefix = "".join(
        f"{b.name}. " if b.type is None else f"{b.name}^{b.type}. " for b in item.binders
    )
    return prefix + format_sterm(item.body)


def format_sterm(t: STerm, level: int = INFIX) -> str:
    if isinstance(t, SVar):
        return t.name
    if isinstance(t, SNum):
        return str(t.value)
    if isinstance(t, SStr):
        return quote(t.payload)
    if isinstance(t, SConst):
        return t.name
    if isinstance(t, SCall):
        return f"{t.name}({', '.join(format_sterm(a) for a in t.args)})"
    if isinstance(t, STuple):
        return f"<{', '.join(format_sterm(a) for a in t.items)}>"
    if isinstance(t, SCycle):
        return f"cy({_sbinders(t.binders)}. {format_sterm(t.body)})"
    if isinstance(t, SCompose):
        return f"({_sbinders(t.binders)}. {format_sterm(t.body)}) @ {format_sterm(t.arg, ATOM)}"
    if isinstance(t, SInfix):
        if _op_level(t.op) == CONS:
            s = f"{format_sterm(t.left, ATOM)} {t.op} {format_sterm(t.right, CONS)}"
            return _wrap(s, level, CONS)
        s = f"{format_sterm(t.left, INFIX)} {t.op} {format_sterm(t.right, CONS)}"
        return _wrap(s, level, INFIX)
    if isinstance(t, SFold):
        ann = "" if t.ann is None else f"[{t.ann.source} -> {', '.join(t.ann.targets)}]"
        items = ", ".join(_sitem(e) for e in t.items)
        return f"fold{ann} ({items}) {format_sterm(t.arg, ATOM)}"
    if isinstance(t, SKFold):
        ann = f"[{t.ann.source} -> {', '.join(t.ann.targets)}]"
        items = ", ".join(_sitem(e) for e in t.items)
        body = format_sterm(t.body)
        if t.binders:
            body = f"{_sbinders(t.binders)}. {body}"
        params = ", ".join(format_sterm(p) for p in t.params)
        return f"fold{ann}({items}; {body}; {params})"
    raise TypeError(f"not a surface term: {t!r}")


def _format_item(item) -> str:
    if isinstance(item, CtypeDecl):
        lines = [f"ctype {item.name} where"]
        for con in item.constructors:
            args = f"{', '.join(con.args)} -> " if con.args else ""
            lines.append(f"  {_con_name(con.name)} : {args}{con.result}")
        axioms = "AxCy"
        if item.axbr is not None:
            axioms += f", AxBr({_con_name(item.axbr[0])}, {_con_name(item.axbr[1])})"
        lines.append(f"  with axioms {axioms}")
        return "\n".join(lines)
    if isinstance(item, FunSig):
        return f"fun {item.name} : {', '.join(item.args)} -> {', '.join(item.result)}"
    if isinstance(item, FunDef):
        params = "" if item.params is None else f"({', '.join(item.params)})"
        return f"fun {item.name}{params} = {format_sterm(item.body)}"
    if isinstance(item, (FunRec, SpecDef)):
        head = f"fun {item.name} by recursion" if isinstance(item, FunRec) else "spec"
        eqs = [f"  {format_sterm(eq.lhs)} = {format_sterm(eq.rhs)}" for eq in item.equations]
        return "\n".join([head] + eqs)
    if isinstance(item, Directive):
        if item.kind == "eval":
            return f"eval {format_sterm(item.terms[0])}"
        if item.kind == "prove":
            return f"prove {format_sterm(item.terms[0])} = {format_sterm(item.terms[1])}"
        if item.kind == "bisim":
            return f"bisim {format_sterm(item.terms[0])} ~ {format_sterm(item.terms[1])}"
        return item.kind
    raise TypeError(f"not a source item: {item!r}")


def format_source(sf: SourceFile) -> str:
    return "\n\n".join(_format_item(item) for item in sf.items) + "\n"
