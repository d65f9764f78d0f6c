# Copyright (c) Meta Platforms, Inc. and affiliates.
# All rights reserved.

# This source code is licensed under the license found in the
# LICENSE file in the root directory of this source tree.

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from cycfold.modeling.kernel import (
    Abs,
    App,
    AT,
    CY,
    KernelError,
    Literal,
    MetaApp,
    Term,
    TUPLE,
    TypeSeq,
    Var,
)

# base types whose inhabitants are literal payloads rather than constructor terms
PRIMITIVE_TYPES = ("String",)

FOLD_PREFIX = "fold["


@dataclass(frozen=True)
class BaseType:
    name: str
    primitive: bool = False


@dataclass(frozen=True)
class MetaArity:
    """Arity of a first-order metavariable: args -> result."""

    args: TypeSeq
    result: TypeSeq


@dataclass(frozen=True)
class Arity:
    """Second-order arity (a1 -> b1), ..., (am -> bm) -> result."""

    args: Tuple[Tuple[TypeSeq, TypeSeq], ...]
    result: TypeSeq


@dataclass(frozen=True)
class ConstructorDecl:
    name: str
    args: TypeSeq
    result: str

    @property
    def symbol(self) -> str:
        return f"{self.result}.{self.name}"

    def recursive_positions(self) -> Tuple[int, ...]:
        return tuple(i for i, a in enumerate(self.args) if a == self.result)


@dataclass
class DatatypeDecl:
    name: str
    constructors: List[ConstructorDecl] = field(default_factory=list)
    # (unit, branch) constructor names when declared with AxBr
    axbr: Optional[Tuple[str, str]] = None


@dataclass(frozen=True)
class FoldParts:
    symbol: str
    source: str
    targets: TypeSeq
    structure: Tuple[Term, ...]
    binders: Tuple[str, ...]
    binder_types: Optional[TypeSeq]
    body: Term
    params: Tuple[Term, ...]

    @property
    def k(self) -> int:
        return len(self.targets)


def fold_symbol(source: str, targets: Sequence[str]) -> str:
    return f"{FOLD_PREFIX}{source}->{','.join(targets)}]"


def parse_fold_symbol(symbol: str) -> Tuple[str, TypeSeq]:
    assert symbol.startswith(FOLD_PREFIX) and symbol.endswith("]"), symbol
    source, targets = symbol[len(FOLD_PREFIX) : -1].split("->")
    return source, tuple(t for t in targets.split(",") if t)


def is_fold_symbol(symbol: str) -> bool:
    return symbol.startswith(FOLD_PREFIX)


class Signature:
    """
    Base types, their constructors and the fold symbols used by a program.

    Constructor symbols are qualified by their result type ("CNat.S") since the
    surface language allows the same constructor name in several datatypes.
    Fold symbols are registered lazily, one per (source, targets) pair.
    """

    def __init__(self):
        self.base_types: Dict[str, BaseType] = {}
        self.datatypes: Dict[str, DatatypeDecl] = {}
        self.constructors: Dict[str, ConstructorDecl] = {}
        self.folds: Dict[str, Tuple[str, TypeSeq]] = {}

    def add_primitive(self, name: str):
        if name not in self.base_types:
            self.base_types[name] = BaseType(name, primitive=True)

    def add_datatype(self, decl: DatatypeDecl):
        if decl.name in self.base_types:
            raise KernelError(f"duplicate type {decl.name}")
        self.base_types[decl.name] = BaseType(decl.name)
        self.datatypes[decl.name] = decl
        for con in decl.constructors:
            if con.symbol in self.constructors:
                raise KernelError(f"duplicate constructor {con.name} in {decl.name}")
            self.constructors[con.symbol] = con

    def is_constructor(self, symbol: str) -> bool:
        return symbol in self.constructors

    def is_fold(self, symbol: str) -> bool:
        return is_fold_symbol(symbol)

    def is_primitive(self, type_name: str) -> bool:
        bt = self.base_types.get(type_name)
        return bt is not None and bt.primitive

    def constructors_named(self, name: str) -> List[ConstructorDecl]:
        return [c for c in self.constructors.values() if c.name == name]

    def constructor(self, type_name: str, name: str) -> Optional[ConstructorDecl]:
        return self.constructors.get(f"{type_name}.{name}")

    def axbr(self, type_name: str) -> Optional[Tuple[str, str]]:
        """(unit symbol, branch symbol) of an AxBr type, else None."""
        decl = self.datatypes.get(type_name)
        if decl is None or decl.axbr is None:
            return None
        unit, branch = decl.axbr
        return f"{type_name}.{unit}", f"{type_name}.{branch}"

    def fold_symbol(self, source: str, targets: Sequence[str]) -> str:
        if source not in self.datatypes:
            raise KernelError(f"fold source {source} is not a declared datatype")
        for t in targets:
            if t not in self.base_types:
                raise KernelError(f"unknown fold target type {t}")
        symbol = fold_symbol(source, targets)
        if symbol not in self.folds:
            logging.debug(f"registering {symbol}")
            self.folds[symbol] = (source, tuple(targets))
        return symbol

    def structure_binder_types(self, con: ConstructorDecl, targets: TypeSeq) -> TypeSeq:
        """Binder types of the structure term e_d: every recursive argument
        contributes one binder per target component."""
        out: List[str] = []
        for a in con.args:
            if a == con.result:
                out.extend(targets)
            else:
                out.append(a)
        return tuple(out)

    def fold_parts(self, t: App) -> FoldParts:
        source, targets = parse_fold_symbol(t.symbol)
        m = len(self.datatypes[source].constructors)
        if len(t.args) < m + 1:
            raise KernelError(f"{t.symbol} applied to {len(t.args)} arguments")
        structure = t.args[:m]
        body = t.args[m]
        params = t.args[m + 1 :]
        if isinstance(body, Abs):
            return FoldParts(
                t.symbol, source, targets, structure, body.binders, body.types, body.body, params
            )
        return FoldParts(t.symbol, source, targets, structure, (), (), body, params)

    def make_fold(
        self,
        symbol: str,
        structure: Sequence[Term],
        binders: Sequence[str],
        body: Term,
        params: Sequence[Term],
        binder_types: Optional[Sequence[str]] = None,
    ) -> App:
        if len(binders) > 0:
            if binder_types is None:
                source, _ = parse_fold_symbol(symbol)
                binder_types = (source,) * len(binders)
            body = Abs(tuple(binders), body, tuple(binder_types))
        return App(symbol, tuple(structure) + (body,) + tuple(params))

    def width(self, t: Term, meta: Optional[Dict[str, MetaArity]] = None) -> int:
        """Number of components of the type of `t`, read off the syntax."""
        if isinstance(t, (Var, Literal)):
            return 1
        if isinstance(t, Abs):
            return self.width(t.body, meta)
        if isinstance(t, MetaApp):
            if meta is None or t.name not in meta:
                raise KernelError(f"width of metavariable {t.name} is unknown")
            return len(meta[t.name].result)
        assert isinstance(t, App)
        if t.symbol == TUPLE:
            return sum(self.width(a, meta) for a in t.args)
        if t.symbol == CY:
            return len(t.args[0].binders)
        if t.symbol == AT:
            return self.width(t.args[0], meta)
        if self.is_fold(t.symbol):
            parts = self.fold_parts(t)
            return self.width(parts.body, meta) * parts.k
        if t.symbol in self.constructors:
            return 1
        raise KernelError(f"unknown symbol {t.symbol}")

    def display_name(self, symbol: str) -> str:
        con = self.constructors.get(symbol)
        return con.name if con is not None else symbol

    def __repr__(self):
        types = ", ".join(self.base_types)
        return f"Signature(types=[{types}], folds={len(self.folds)})"
