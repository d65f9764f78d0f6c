# Copyright (c) Meta Platforms, Inc. and affiliates.
# All rights reserved.

# This source code is licensed under the license found in the
# LICENSE file in the root directory of this source tree.

"""
Charts of cyclic values and strong bisimulation between them.

A value term is translated into a finite graph whose nodes carry a set of
labelled hyperedges. Placeholders for cycle binders and the branch/unit
constructors of AxBr types are epsilon nodes, which are removed by closure.
Equivalence is the coarsest stable partition, computed by naive partition
refinement over interned edge signatures.
"""

import hashlib
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from cycfold.modeling.kernel import (
    Abs,
    App,
    canonical,
    free_vars,
    is_at,
    is_cy,
    is_tuple,
    lam,
    Literal,
    MetaApp,
    Term,
    TypeSeq,
    Var,
)
from cycfold.modeling.signature import Signature
from cycfold.modeling.typecheck import TypeChecker

VAR_LABEL = "var:"
FOLD_LABEL = "fold#"
LITERAL_LABEL = "lit"


class ChartError(ValueError):
    pass


@dataclass(frozen=True, order=True)
class Edge:
    label: str
    payload: Tuple[str, ...]
    children: Tuple[int, ...]


@dataclass
class ChartNode:
    id: int
    type: str
    divergent: bool = False
    edges: Tuple[Edge, ...] = ()


@dataclass
class Chart:
    nodes: List[ChartNode]
    roots: Tuple[int, ...]
    # free variables or stuck folds were turned into uninterpreted labels
    uninterpreted: bool = False

    def __len__(self):
        return len(self.nodes)

    def root_types(self) -> TypeSeq:
        return tuple(self.nodes[r].type for r in self.roots)

    def to_json(self, sig: Optional[Signature] = None) -> Dict:
        show = sig.display_name if sig is not None else (lambda s: s)
        return {
            "nodes": [
                {
                    "id": n.id,
                    "type": n.type,
                    "divergent": n.divergent,
                    "edges": [
                        {
                            "label": show(e.label),
                            "payload": list(e.payload),
                            "children": list(e.children),
                        }
                        for e in n.edges
                    ],
                }
                for n in self.nodes
            ],
            "roots": list(self.roots),
        }


class _ChartBuilder:
    def __init__(self, sig: Signature, var_types: Dict[str, str]):
        self.sig = sig
        self.var_types = var_types
        self.types: List[str] = []
        self.edges: List[List[Tuple[str, Tuple[str, ...], Tuple[int, ...]]]] = []
        self.eps: List[List[int]] = []
        self.free: Dict[str, int] = {}
        self.uninterpreted = False

    def node(self, type_: str) -> int:
        self.types.append(type_)
        self.edges.append([])
        self.eps.append([])
        return len(self.types) - 1

    def build(self, t: Term, env: Dict[str, int], expected: Optional[TypeSeq]) -> List[int]:
        if isinstance(t, Var):
            if t.name in env:
                return [env[t.name]]
            if t.name not in self.free:
                ty = self.var_types.get(t.name) or (expected[0] if expected else "?")
                n = self.node(ty)
                self.edges[n].append((VAR_LABEL + t.name, (), ()))
                self.free[t.name] = n
                self.uninterpreted = True
            return [self.free[t.name]]
        if isinstance(t, Literal):
            n = self.node(t.type)
            self.edges[n].append((LITERAL_LABEL, (t.payload,), ()))
            return [n]
        if isinstance(t, (Abs, MetaApp)):
            raise ChartError(f"{type(t).__name__} is not a value")
        if is_tuple(t):
            roots: List[int] = []
            offset = 0
            for a in t.args:
                w = self.sig.width(a)
                sub = None if expected is None else tuple(expected[offset : offset + w])
                roots.extend(self.build(a, env, sub))
                offset += w
            return roots
        if is_cy(t):
            body = t.args[0]
            types = body.types if body.types is not None else expected
            if types is None:
                types = ("?",) * len(body.binders)
            holders = [self.node(ty) for ty in types]
            inner = dict(env)
            inner.update(zip(body.binders, holders))
            roots = self.build(body.body, inner, tuple(types))
            if len(roots) != len(holders):
                raise ChartError(f"cycle binds {len(holders)} variables but has {len(roots)} roots")
            for h, r in zip(holders, roots):
                self.eps[h].append(r)
            return holders
        if is_at(t):
            fn, arg = t.args
            args = self.build(arg, env, fn.types)
            if len(args) != len(fn.binders):
                raise ChartError(
                    f"composition binds {len(fn.binders)} variables to {len(args)} components"
                )
            inner = dict(env)
            inner.update(zip(fn.binders, args))
            return self.build(fn.body, inner, expected)
        if self.sig.is_fold(t.symbol):
            return self.stuck_fold(t, env)
        return [self.constructor(t, env)]

    def constructor(self, t: App, env) -> int:
        con = self.sig.constructors.get(t.symbol)
        if con is None:
            raise ChartError(f"unknown symbol {t.symbol}")
        n = self.node(con.result)
        axbr = self.sig.axbr(con.result)
        if axbr is not None and t.symbol == axbr[0]:
            return n
        kids = [self.build(a, env, (ty,))[0] for a, ty in zip(t.args, con.args)]
        if axbr is not None and t.symbol == axbr[1]:
            self.eps[n].extend(kids)
            return n
        payload: List[str] = []
        children: List[int] = []
        for a, k in zip(t.args, kids):
            if isinstance(a, Literal):
                payload.append(a.payload)
            else:
                children.append(k)
        self.edges[n].append((t.symbol, tuple(payload), tuple(children)))
        return n

    def stuck_fold(self, t: App, env) -> List[int]:
        # the fold is abstracted over the environment variables it depends on
        used = sorted(free_vars(t) & set(env))
        fp = hashlib.sha1(repr(canonical(lam(used, t))).encode()).hexdigest()[:12]
        kids = tuple(env[v] for v in used)
        parts = self.sig.fold_parts(t)
        width = self.sig.width(t)
        roots = []
        for j in range(width):
            n = self.node(parts.targets[j % parts.k])
            self.edges[n].append((f"{FOLD_LABEL}{fp}.{j}", (), kids))
            roots.append(n)
        self.uninterpreted = True
        return roots

    def finish(self, roots: Sequence[int]) -> Chart:
        rep = self._representatives()
        closure = self._closures()
        order: Dict[int, int] = {}
        queue: List[int] = []

        def visit(raw: int):
            if raw not in order:
                order[raw] = len(order)
                queue.append(raw)

        for r in roots:
            visit(rep[r])
        raw_edges: Dict[int, set] = {}
        i = 0
        while i < len(queue):
            raw = queue[i]
            i += 1
            edges = set()
            for m in closure[raw]:
                for label, payload, kids in self.edges[m]:
                    mapped = tuple(rep[k] for k in kids)
                    for k in mapped:
                        visit(k)
                    edges.add((label, payload, mapped))
            raw_edges[raw] = edges
        nodes: List[ChartNode] = []
        for raw in queue:
            ty = self.types[raw]
            edges = tuple(
                sorted(Edge(l, p, tuple(order[k] for k in ks)) for l, p, ks in raw_edges[raw])
            )
            divergent = not edges and self.sig.axbr(ty) is None and not self.sig.is_primitive(ty)
            nodes.append(ChartNode(order[raw], ty, divergent, edges))
        return Chart(nodes, tuple(order[rep[r]] for r in roots), self.uninterpreted)

    def _representatives(self) -> List[int]:
        """Follow single-epsilon forwarders to the node they stand for."""
        rep = list(range(len(self.types)))
        for n in range(len(self.types)):
            seen = [n]
            m = n
            while len(self.eps[m]) == 1 and not self.edges[m]:
                m = self.eps[m][0]
                if m in seen:
                    m = min(seen)
                    break
                seen.append(m)
            rep[n] = m
        return rep

    def _closures(self) -> List[List[int]]:
        out = []
        for n in range(len(self.types)):
            seen = {n}
            stack = [n]
            while stack:
                m = stack.pop()
                for k in self.eps[m]:
                    if k not in seen:
                        seen.add(k)
                        stack.append(k)
            out.append(sorted(seen))
        return out


def term_to_chart(
    t: Term,
    sig: Signature,
    var_types: Optional[Dict[str, str]] = None,
    types: Optional[TypeSeq] = None,
) -> Chart:
    var_types = dict(var_types or {})
    for v in free_vars(t):
        var_types.setdefault(v, "?")
    if types is None:
        try:
            types = TypeChecker(sig).infer({}, {k: v for k, v in var_types.items() if v != "?"}, t)
        except ValueError:
            types = None
    builder = _ChartBuilder(sig, var_types)
    roots = builder.build(t, {}, types)
    return builder.finish(roots)


def disjoint_union(c1: Chart, c2: Chart) -> Tuple[Chart, int]:
    offset = len(c1.nodes)
    nodes = list(c1.nodes)
    for n in c2.nodes:
        nodes.append(
            ChartNode(
                n.id + offset,
                n.type,
                n.divergent,
                tuple(Edge(e.label, e.payload, tuple(k + offset for k in e.children)) for e in n.edges),
            )
        )
    roots = c1.roots + tuple(r + offset for r in c2.roots)
    return Chart(nodes, roots, c1.uninterpreted or c2.uninterpreted), offset


@dataclass
class Partition:
    blocks: np.ndarray
    # block assignment after every refinement round, starting with the initial one
    rounds: List[np.ndarray] = field(default_factory=list)

    @property
    def history(self) -> List[int]:
        return [int(r.max()) + 1 if len(r) else 0 for r in self.rounds]

    def num_blocks(self) -> int:
        return self.history[-1] if self.rounds else 0

    def same(self, a: int, b: int) -> bool:
        return bool(self.blocks[a] == self.blocks[b])

    def split_round(self, a: int, b: int) -> int:
        for r, blocks in enumerate(self.rounds):
            if blocks[a] != blocks[b]:
                return r
        return -1

    def groups(self) -> List[List[int]]:
        out: Dict[int, List[int]] = {}
        for i, b in enumerate(self.blocks.tolist()):
            out.setdefault(b, []).append(i)
        return [out[b] for b in sorted(out)]


def _relabel(keys: List) -> np.ndarray:
    interned: Dict = {}
    ids = np.array([interned.setdefault(k, len(interned)) for k in keys], dtype=np.int64)
    if len(ids) == 0:
        return ids
    _, inverse = np.unique(ids, return_inverse=True)
    return inverse.astype(np.int64)


def refine(chart: Chart) -> Partition:
    """Coarsest partition stable under (label, payload, child blocks) signatures."""
    blocks = _relabel([(n.type, n.divergent) for n in chart.nodes])
    rounds = [blocks]
    while True:
        keys = []
        for n in chart.nodes:
            edges = frozenset(
                (e.label, e.payload, tuple(int(blocks[c]) for c in e.children)) for e in n.edges
            )
            keys.append((int(blocks[n.id]), edges))
        new = _relabel(keys)
        if len(new) == 0 or new.max() == blocks.max():
            break
        blocks = new
        rounds.append(blocks)
    part = Partition(blocks, rounds)
    logging.debug(f"partition refinement: {len(rounds)} rounds, blocks {part.history}")
    return part


@dataclass(frozen=True)
class PathStep:
    label: str
    payload: Tuple[str, ...]
    index: int
    left: int
    right: int


@dataclass(frozen=True)
class Mismatch:
    # "label": an edge label present on one side only
    # "divergent": one node diverges and the other does not
    # "type": node types differ
    kind: str
    left: int
    right: int
    label: str = ""
    payload: Tuple[str, ...] = ()
    side: str = ""


@dataclass
class DistinguishingPath:
    root: int
    steps: List[PathStep]
    final: Mismatch

    def pairs(self) -> List[Tuple[int, int]]:
        return [(s.left, s.right) for s in self.steps] + [(self.final.left, self.final.right)]

    def validate(self, c1: Chart, c2: Chart) -> bool:
        """Replay the path in both charts and check the final mismatch."""
        pairs = self.pairs()
        if pairs[0] != (c1.roots[self.root], c2.roots[self.root]):
            return False
        for s, (nl, nr) in zip(self.steps, pairs[1:]):
            if not (_has_step(c1, s.left, s, nl) and _has_step(c2, s.right, s, nr)):
                return False
        f = self.final
        a, b = c1.nodes[f.left], c2.nodes[f.right]
        if f.kind == "type":
            return a.type != b.type
        if f.kind == "divergent":
            return a.divergent != b.divergent
        has_a = any((e.label, e.payload) == (f.label, f.payload) for e in a.edges)
        has_b = any((e.label, e.payload) == (f.label, f.payload) for e in b.edges)
        return has_a != has_b and has_a == (f.side == "left")

    def to_json(self, sig: Optional[Signature] = None) -> Dict:
        show = sig.display_name if sig is not None else (lambda s: s)
        return {
            "root": self.root,
            "steps": [
                {
                    "label": show(s.label),
                    "payload": list(s.payload),
                    "index": s.index,
                    "left": s.left,
                    "right": s.right,
                }
                for s in self.steps
            ],
            "final": {
                "kind": self.final.kind,
                "label": show(self.final.label) if self.final.label else "",
                "payload": list(self.final.payload),
                "side": self.final.side,
                "left": self.final.left,
                "right": self.final.right,
            },
        }


def _has_step(chart: Chart, node: int, s: PathStep, target: int) -> bool:
    return any(
        (e.label, e.payload) == (s.label, s.payload)
        and s.index < len(e.children)
        and e.children[s.index] == target
        for e in chart.nodes[node].edges
    )


@dataclass
class BisimResult:
    equal: bool
    partition: Partition
    union: Chart
    offset: int
    path: Optional[DistinguishingPath] = None


def _distinguish(union: Chart, part: Partition, offset: int, root: int, a: int, b: int):
    """
    Walk down from a split pair of nodes. A pair split in round r has edge
    signatures that differ under the blocks of round r - 1, so either a label
    is missing on one side or some child pair was split earlier.
    """
    steps: List[PathStep] = []
    while True:
        r = part.split_round(a, b)
        assert r >= 0, "walking into a pair of equivalent nodes"
        na, nb = union.nodes[a], union.nodes[b]
        if r == 0:
            kind = "type" if na.type != nb.type else "divergent"
            return DistinguishingPath(root, steps, Mismatch(kind, a, b - offset))
        prev = part.rounds[r - 1]
        found = None
        for side, x, y in (("left", na, nb), ("right", nb, na)):
            for e in x.edges:
                same_label = [f for f in y.edges if (f.label, f.payload) == (e.label, e.payload)]
                if not same_label:
                    final = Mismatch("label", a, b - offset, e.label, e.payload, side)
                    return DistinguishingPath(root, steps, final)
                blocks_e = tuple(int(prev[c]) for c in e.children)
                if any(tuple(int(prev[c]) for c in f.children) == blocks_e for f in same_label):
                    continue
                f = same_label[0]
                for i, (c, d) in enumerate(zip(e.children, f.children)):
                    if prev[c] != prev[d]:
                        found = (e, i, c, d) if side == "left" else (e, i, d, c)
                        break
                if found is not None:
                    break
            if found is not None:
                break
        assert found is not None, "blocks split without a witnessing edge"
        e, i, c, d = found
        steps.append(PathStep(e.label, e.payload, i, a, b - offset))
        a, b = c, d


def compare(c1: Chart, c2: Chart) -> BisimResult:
    if len(c1.roots) != len(c2.roots):
        raise ChartError(f"comparing {len(c1.roots)} roots with {len(c2.roots)}")
    if c1.root_types() != c2.root_types():
        raise ChartError(f"root types {c1.root_types()} and {c2.root_types()} differ")
    union, offset = disjoint_union(c1, c2)
    part = refine(union)
    for i, (r1, r2) in enumerate(zip(c1.roots, c2.roots)):
        if not part.same(r1, r2 + offset):
            path = _distinguish(union, part, offset, i, r1, r2 + offset)
            return BisimResult(False, part, union, offset, path)
    return BisimResult(True, part, union, offset)


def bisimilar(c1: Chart, c2: Chart) -> bool:
    return compare(c1, c2).equal


def eq_mod_bisim(
    s: Term, t: Term, sig: Signature, var_types: Optional[Dict[str, str]] = None
) -> bool:
    return bisimilar(term_to_chart(s, sig, var_types), term_to_chart(t, sig, var_types))
