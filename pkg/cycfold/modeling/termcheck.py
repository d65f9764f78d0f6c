# Copyright (c) Meta Platforms, Inc. and affiliates.
# All rights reserved.

# This source code is licensed under the license found in the
# LICENSE file in the root directory of this source tree.

"""
General Schema termination check for second-order rules.

Every rule f(l1, ..., ln) -> r is accepted when r belongs to the computable
closure of its left-hand side. The closure is searched top-down on r, one
clause per node, producing a derivation tree that can be replayed. The
signature is first refined: cycle binders get a dedicated variable type
Var_c, and cy is split into one symbol cy^m per binder count.
"""

import functools
import logging
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Optional, Sequence, Set, Tuple, Union

import networkx as nx

from cycfold.modeling.kernel import (
    Abs,
    alpha_eq,
    App,
    AT,
    CY,
    Literal,
    merge_abs,
    MetaApp,
    positions,
    Term,
    TUPLE,
    TypeSeq,
    Var,
)
from cycfold.modeling.rules import RewriteRule, RuleSet
from cycfold.modeling.signature import MetaArity, Signature


@dataclass(frozen=True)
class Arrow:
    args: TypeSeq
    result: str


RType = Union[str, Arrow]


def var_type(c: str) -> str:
    return f"Var_{c}"


def product(types: Sequence[str]) -> str:
    if len(types) == 1:
        return types[0]
    return "(" + "*".join(types) + ")"


def cy_symbol(m: int) -> str:
    return f"{CY}^{m}"


def refined_symbol(t: App) -> str:
    if t.symbol == CY:
        return cy_symbol(len(t.args[0].binders))
    return t.symbol


def components(ty: str) -> List[str]:
    """Base types of a product type, or the type itself."""
    if ty.startswith("(") and ty != "()":
        return ty[1:-1].split("*")
    return [ty]


def occurrences(b: str, ty: RType, positive: bool = True) -> Iterator[bool]:
    """Polarities of the occurrences of base type b in ty."""
    if isinstance(ty, str):
        for c in components(ty):
            if c == b:
                yield positive
        return
    for a in ty.args:
        yield from occurrences(b, a, not positive)
    yield from occurrences(b, ty.result, positive)


def occurs_positively(b: str, ty: RType) -> bool:
    pol = [p for c in components(b) for p in occurrences(c, ty)]
    return len(pol) > 0 and all(pol)


@dataclass(frozen=True)
class SymbolDecl:
    name: str
    args: Tuple[RType, ...]
    result: str


class RefinedSignature:
    def __init__(self, sig: Signature, refined: bool = True):
        self.sig = sig
        self.refined = refined
        self.defined: Set[str] = set()
        self.symbols: Set[str] = set()
        self.cy_widths: Set[int] = set()
        # (constructor name, declared type) pairs used for the type order
        self.constructor_decls: List[SymbolDecl] = []
        self.precedence = nx.DiGraph()
        self.type_order = nx.DiGraph()
        self.positive: Dict[str, bool] = {}

    def is_constructor(self, name: str) -> bool:
        # @ is never a constructor, whatever the rules
        return name not in self.defined and name != AT

    @functools.lru_cache(maxsize=128)
    def greater(self, f: str, g: str) -> bool:
        if f not in self.precedence or g not in self.precedence:
            return False
        return g in nx.descendants(self.precedence, f)

    def precedence_well_founded(self) -> bool:
        return nx.is_directed_acyclic_graph(self.precedence)

    def type_order_well_founded(self) -> bool:
        # the strict part lives on the condensation, a finite DAG
        return nx.is_directed_acyclic_graph(nx.condensation(self.type_order))

    def binder_type(self, c: str) -> str:
        return var_type(c) if self.refined else c

    def arity(self, t: App, meta: Optional[Dict[str, MetaArity]] = None) -> Optional[SymbolDecl]:
        """Declared type of the head of `t` at the instance `t` uses."""
        name = refined_symbol(t)
        if t.symbol == CY:
            types = t.args[0].types
            if types is None:
                return None
            return SymbolDecl(
                name,
                (Arrow(tuple(self.binder_type(c) for c in types), product(types)),),
                product(types),
            )
        if t.symbol == TUPLE:
            types = []
            for a in t.args:
                ty = self._result_type(a, meta)
                if ty is None:
                    return None
                types.append(ty)
            return SymbolDecl(name, tuple(types), product(types) if types else "()")
        if t.symbol == AT:
            # (x:sigma. t : tau) @ s : tau, the argument at the binder types
            fn = t.args[0]
            if not isinstance(fn, Abs) or fn.types is None:
                return None
            body = self._result_type(fn.body, meta)
            if body is None:
                return None
            binders = Arrow(tuple(self.binder_type(c) for c in fn.types), body)
            return SymbolDecl(name, (binders, product(fn.types)), body)
        if self.sig.is_fold(t.symbol):
            parts = self.sig.fold_parts(t)
            args: List[RType] = []
            decl = self.sig.datatypes[parts.source]
            for con in decl.constructors:
                bt = self.sig.structure_binder_types(con, parts.targets)
                target = product(parts.targets)
                args.append(Arrow(tuple(self.binder_type(b) for b in bt), target) if bt else target)
            try:
                w = self.sig.width(parts.body, meta)
            except ValueError:
                return None
            body_ty = product((parts.source,) * w)
            n = len(parts.binders)
            args.append(Arrow((self.binder_type(parts.source),) * n, body_ty) if n else body_ty)
            args.extend(parts.targets[j % parts.k] for j in range(len(parts.params)))
            return SymbolDecl(name, tuple(args), product(parts.targets * w))
        con = self.sig.constructors.get(t.symbol)
        if con is None:
            return None
        return SymbolDecl(name, tuple(con.args), con.result)

    def _result_type(self, t: Term, meta) -> Optional[str]:
        if isinstance(t, Literal):
            return t.type
        if isinstance(t, MetaApp):
            if meta is None or t.name not in meta:
                return None
            return product(meta[t.name].result)
        if isinstance(t, App):
            decl = self.arity(t, meta)
            return None if decl is None else decl.result
        return None

    def __repr__(self):
        return (
            f"RefinedSignature(refined={self.refined}, defined={sorted(self.defined)}, "
            f"cy widths={sorted(self.cy_widths)})"
        )


def _collect(rules: Sequence[RewriteRule]) -> Tuple[Set[str], Set[str], Set[int]]:
    defined, symbols, widths = set(), set(), set()
    for rule in rules:
        assert isinstance(rule.lhs, App), f"rule {rule.name} has no head symbol"
        defined.add(refined_symbol(rule.lhs))
        for side in (rule.lhs, rule.rhs):
            for _, s in positions(side):
                if isinstance(s, App):
                    symbols.add(refined_symbol(s))
                    if s.symbol == CY:
                        widths.add(len(s.args[0].binders))
    return defined, symbols, widths


def refine_signature(
    sig: Signature,
    rules: Sequence[RewriteRule] = (),
    refined: bool = True,
) -> RefinedSignature:
    """
    Build the refined signature for a list of rule instances: constructors are
    the symbols heading no left-hand side, and the precedence is
    fold, @ > cy^m > cy^n (m > n) > every other symbol.
    """
    rsig = RefinedSignature(sig, refined)
    defined, symbols, widths = _collect(rules)
    symbols |= set(sig.constructors) | {TUPLE}
    rsig.defined = defined
    rsig.symbols = symbols
    rsig.cy_widths = widths

    cys = sorted((s for s in symbols if s.startswith(f"{CY}^")), key=lambda s: int(s.split("^")[1]))
    tops = sorted(s for s in symbols if s == AT or sig.is_fold(s))
    others = sorted(s for s in symbols if s not in cys and s not in tops)
    g = rsig.precedence
    g.add_nodes_from(symbols)
    for f in tops:
        for s in cys + others:
            g.add_edge(f, s)
    for i, hi in enumerate(cys):
        for lo in cys[:i]:
            g.add_edge(hi, lo)
        for s in others:
            g.add_edge(hi, s)

    decls: List[SymbolDecl] = []
    for con in sig.constructors.values():
        if con.symbol not in defined:
            decls.append(SymbolDecl(con.symbol, tuple(con.args), con.result))
    for c in sig.datatypes:
        if refined:
            decls.append(SymbolDecl(f"v_{c}", (var_type(c),), c))
        if cy_symbol(1) not in defined:
            decls.append(SymbolDecl(cy_symbol(1), (Arrow((rsig.binder_type(c),), c),), c))
    rsig.constructor_decls = decls

    to = rsig.type_order
    to.add_nodes_from(sig.base_types)
    for d in decls:
        to.add_node(d.result)
        for a in d.args:
            for b in _base_types(a):
                to.add_edge(b, d.result)
    for b in sorted(to.nodes):
        rsig.positive[b] = _positive(rsig, b)
    logging.debug(f"{rsig}: positivity {rsig.positive}")
    return rsig


def _base_types(ty: RType) -> List[str]:
    if isinstance(ty, str):
        return [ty]
    return list(ty.args) + [ty.result]


def _positive(rsig: RefinedSignature, b: str) -> bool:
    """No type equivalent to b under the type order occurs negatively in the
    argument types of a constructor of b."""
    to = rsig.type_order
    cls = {b}
    for comp in nx.strongly_connected_components(to):
        if b in comp:
            cls = set(comp)
    for d in rsig.constructor_decls:
        if d.result != b:
            continue
        for a in cls:
            for ty in d.args:
                if not all(occurrences(a, ty)):
                    return False
    return True


# ---------------------------------------------------------------------------
# accessibility and covered subterms
# ---------------------------------------------------------------------------


def accessible_terms(
    t: Term, rsig: RefinedSignature, meta: Optional[Dict[str, MetaArity]] = None
) -> List[Term]:
    acc: List[Term] = [t]
    i = 0
    while i < len(acc):
        u = acc[i]
        i += 1
        new: List[Term] = []
        if isinstance(u, Abs):
            new.append(u.body)
        elif isinstance(u, App):
            name = refined_symbol(u)
            if rsig.is_constructor(name):
                new.extend(u.args)
            else:
                decl = rsig.arity(u, meta)
                if decl is not None:
                    for a, ty in zip(u.args, decl.args):
                        if occurs_positively(decl.result, ty):
                            new.append(a)
        for n in new:
            if n not in acc:
                acc.append(n)
    return acc


def accessible(
    z: str, t: Term, rsig: RefinedSignature, meta: Optional[Dict[str, MetaArity]] = None
) -> bool:
    for u in accessible_terms(t, rsig, meta):
        if isinstance(u, MetaApp) and u.name == z:
            names = [a.name for a in u.args if isinstance(a, Var)]
            if len(names) == len(u.args) and len(set(names)) == len(names):
                return True
    return False


def covered_subterms(t: Term) -> Iterator[Term]:
    """Strip a prefix of the leading abstractions, then descend through
    function symbols; each endpoint, rewrapped in the stripped binders."""
    t = merge_abs(t)
    prefixes: List[Tuple[Tuple[str, ...], Optional[TypeSeq], Term]] = [((), (), t)]
    if isinstance(t, Abs):
        prefixes.append((t.binders, t.types, t.body))
    for binders, types, s in prefixes:
        stack = [s]
        while stack:
            u = stack.pop()
            if binders:
                yield merge_abs(Abs(binders, u, types))
            else:
                yield u
            if isinstance(u, App):
                stack.extend(reversed(u.args))


def covered_subterm(t: Term, u: Term, strict: bool = False) -> bool:
    if strict and alpha_eq(merge_abs(t), merge_abs(u)):
        return False
    target = merge_abs(u)
    return any(alpha_eq(c, target) for c in covered_subterms(t))


def lex_smaller(lhs_args: Sequence[Term], rhs_args: Sequence[Term]) -> bool:
    """Lexicographic extension of the strict covered-subterm relation."""
    for l, r in zip(lhs_args, rhs_args):
        if alpha_eq(merge_abs(l), merge_abs(r)):
            continue
        return covered_subterm(l, r, strict=True)
    return False


# ---------------------------------------------------------------------------
# computable closure
# ---------------------------------------------------------------------------

CLAUSES = {
    "1": "accessible metavariable",
    "2": "variable",
    "3": "constructor",
    "4": "application",
    "5": "abstraction",
    "6": "smaller head symbol",
    "7": "recursive call on covered subterms",
}


@dataclass
class DerivationNode:
    clause: str
    term: Term
    children: List["DerivationNode"] = field(default_factory=list)

    def clauses(self) -> Set[str]:
        out = {self.clause}
        for c in self.children:
            out |= c.clauses()
        return out

    def size(self) -> int:
        return 1 + sum(c.size() for c in self.children)


@dataclass(frozen=True)
class Obligation:
    clause: str
    term: Term
    message: str


@dataclass
class RuleReport:
    rule: RewriteRule
    passed: bool
    derivation: Optional[DerivationNode] = None
    failure: Optional[Obligation] = None

    @property
    def clauses(self) -> List[str]:
        if self.derivation is None:
            return []
        return sorted(self.derivation.clauses(), key=int)


@dataclass
class GSReport:
    type_order_well_founded: bool
    precedence_well_founded: bool
    positive: Dict[str, bool]
    rules: List[RuleReport]

    @property
    def constructors_positive(self) -> bool:
        return all(self.positive.values())

    @property
    def passed(self) -> bool:
        return (
            self.type_order_well_founded
            and self.precedence_well_founded
            and self.constructors_positive
            and all(r.passed for r in self.rules)
        )

    def failures(self) -> List[RuleReport]:
        return [r for r in self.rules if not r.passed]


class _Closure:
    def __init__(self, rule: RewriteRule, rsig: RefinedSignature):
        assert isinstance(rule.lhs, App), f"rule {rule.name} has no head symbol"
        self.rule = rule
        self.rsig = rsig
        self.head = refined_symbol(rule.lhs)
        self.lhs_args = rule.lhs.args
        self.failure: Optional[Obligation] = None

    def fail(self, clause: str, t: Term, message: str) -> None:
        if self.failure is None:
            self.failure = Obligation(clause, t, message)
        return None

    def meta_accessible(self, z: str) -> bool:
        return any(accessible(z, a, self.rsig, self.rule.meta) for a in self.lhs_args)

    def derive_all(self, ts: Sequence[Term]) -> Optional[List[DerivationNode]]:
        out = []
        for t in ts:
            d = self.derive(t)
            if d is None:
                return None
            out.append(d)
        return out

    def derive(self, t: Term) -> Optional[DerivationNode]:
        if isinstance(t, Var):
            return DerivationNode("2", t)
        if isinstance(t, Abs):
            kids = self.derive_all([t.body])
            return None if kids is None else DerivationNode("5", t, kids)
        if isinstance(t, Literal):
            return DerivationNode("3", t)
        if isinstance(t, MetaApp):
            if not self.meta_accessible(t.name):
                return self.fail("1", t, f"metavariable {t.name} is not accessible")
            kids = self.derive_all(t.args)
            return None if kids is None else DerivationNode("1", t, kids)
        assert isinstance(t, App)
        name = refined_symbol(t)
        if t.symbol == AT:
            kids = self.derive_all(t.args)
            return None if kids is None else DerivationNode("4", t, kids)
        if self.rsig.is_constructor(name):
            kids = self.derive_all(t.args)
            return None if kids is None else DerivationNode("3", t, kids)
        if self.rsig.greater(self.head, name):
            kids = self.derive_all(t.args)
            return None if kids is None else DerivationNode("6", t, kids)
        if name == self.head:
            if not lex_smaller(self.lhs_args, t.args):
                return self.fail("7", t, f"arguments of {name} are not smaller than the left-hand side")
            kids = self.derive_all(t.args)
            return None if kids is None else DerivationNode("7", t, kids)
        return self.fail("6", t, f"{self.head} is not above {name} in the precedence")

    def replay(self, node: DerivationNode) -> bool:
        """Re-check every clause cited by a derivation."""
        t = node.term
        ok = {
            "1": lambda: isinstance(t, MetaApp) and self.meta_accessible(t.name),
            "2": lambda: isinstance(t, Var),
            "3": lambda: isinstance(t, Literal)
            or (isinstance(t, App) and self.rsig.is_constructor(refined_symbol(t))),
            "4": lambda: isinstance(t, App) and t.symbol == AT,
            "5": lambda: isinstance(t, Abs),
            "6": lambda: isinstance(t, App) and self.rsig.greater(self.head, refined_symbol(t)),
            "7": lambda: isinstance(t, App)
            and refined_symbol(t) == self.head
            and lex_smaller(self.lhs_args, t.args),
        }[node.clause]()
        return ok and all(self.replay(c) for c in node.children)


def check_rule_gs(rule: RewriteRule, rsig: RefinedSignature) -> RuleReport:
    closure = _Closure(rule, rsig)
    derivation = closure.derive(rule.rhs)
    if derivation is None:
        failure = closure.failure
        logging.info(f"GS: rule {rule.name} fails clause ({failure.clause}): {failure.message}")
        return RuleReport(rule, False, None, closure.failure)
    return RuleReport(rule, True, derivation)


def replay(report: RuleReport, rsig: RefinedSignature) -> bool:
    if not report.passed:
        return False
    return _Closure(report.rule, rsig).replay(report.derivation)


def check_system(
    rules: Union[RuleSet, Sequence[RewriteRule]],
    rsig: Optional[RefinedSignature] = None,
    max_width: int = 2,
    refined: bool = True,
) -> GSReport:
    if isinstance(rules, RuleSet):
        sig = rules.sig
        instances = rules.instances(max_width)
    else:
        instances = list(rules)
        sig = rsig.sig if rsig is not None else None
    assert sig is not None, "a signature is needed"
    if rsig is None:
        rsig = refine_signature(sig, instances, refined)
    reports = [check_rule_gs(r, rsig) for r in instances]
    report = GSReport(
        rsig.type_order_well_founded(),
        rsig.precedence_well_founded(),
        dict(rsig.positive),
        reports,
    )
    logging.info(
        f"GS: {len(reports) - len(report.failures())}/{len(reports)} rules pass, "
        f"positive={report.constructors_positive}, precedence well-founded={report.precedence_well_founded}"
    )
    return report
