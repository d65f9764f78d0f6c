# Copyright (c) Meta Platforms, Inc. and affiliates.
# All rights reserved.

# This source code is licensed under the license found in the
# LICENSE file in the root directory of this source tree.

import itertools
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from cycfold.modeling.kernel import (
    App,
    at,
    cy,
    lam,
    Literal,
    subst_vars,
    Term,
    tup,
    TypeSeq,
    Var,
)
from cycfold.modeling.signature import Signature

Env = Sequence[Tuple[str, str]]

AXIOMS = ("sub", "SP", "dinat1", "dinatn", "bekic", "CI")
BRANCH_AXIOMS = ("del", "unitL", "unitR", "assoc", "comm", "degen")


class TermGenerator:
    """
    Random well-typed terms over a signature, driven by a numpy generator.

    `value` draws cyclic values (constructors, cycles, compositions and
    variables from the environment); `fold_term` wraps a random value in a
    fold with random structure terms; `axiom_instance` instantiates one of the
    cycle or branching axiom schemes with random values.
    """

    def __init__(
        self,
        sig: Signature,
        seed: Optional[int] = 0,
        max_depth: int = 3,
        literals: Sequence[str] = ("alice", "bob", "carol"),
    ):
        self.sig = sig
        self.rng = np.random.default_rng(seed)
        self.max_depth = max_depth
        self.literals = tuple(literals)
        self._names = itertools.count()

    def choice(self, seq):
        return seq[int(self.rng.integers(len(seq)))]

    def name(self, prefix: str) -> str:
        return f"{prefix}{next(self._names)}"

    def value(self, c: str, depth: Optional[int] = None, env: Env = ()) -> Term:
        depth = self.max_depth if depth is None else depth
        vars_ = [v for v, ty in env if ty == c]
        if self.sig.is_primitive(c):
            if vars_ and self.rng.random() < 0.3:
                return Var(self.choice(vars_))
            return Literal(self.choice(self.literals), c)
        cons = self.sig.datatypes[c].constructors
        if depth <= 0:
            if vars_ and self.rng.random() < 0.5:
                return Var(self.choice(vars_))
            leaves = [d for d in cons if all(self.sig.is_primitive(a) for a in d.args)]
            if leaves:
                d = self.choice(leaves)
                return App(d.symbol, tuple(self.value(a, 0, env) for a in d.args))
            if vars_:
                return Var(self.choice(vars_))
            x = self.name("x")
            return cy((x,), Var(x), (c,))
        r = self.rng.random()
        if r < 0.15 and vars_:
            return Var(self.choice(vars_))
        if r < 0.35:
            x = self.name("x")
            return cy((x,), self.value(c, depth - 1, list(env) + [(x, c)]), (c,))
        if r < 0.42:
            y = self.name("y")
            body = self.value(c, depth - 1, list(env) + [(y, c)])
            return at((y,), body, self.value(c, depth - 1, env), (c,))
        d = self.choice(cons)
        return App(d.symbol, tuple(self.value(a, depth - 1, env) for a in d.args))

    def values(self, types: TypeSeq, depth: Optional[int] = None, env: Env = ()) -> Term:
        return tup(*(self.value(c, depth, env) for c in types))

    def context(self, holes: Sequence[str], hole_type: str, result: TypeSeq, depth=None):
        """Random body abstracted over `holes`, as a metavariable assignment."""
        depth = self.max_depth if depth is None else depth
        env = [(h, hole_type) for h in holes]
        return tuple(holes), self.values(result, depth, env)

    def fold_term(self, source: str, targets: TypeSeq, depth: Optional[int] = None) -> Term:
        symbol = self.sig.fold_symbol(source, targets)
        structure = []
        for con in self.sig.datatypes[source].constructors:
            bt = self.sig.structure_binder_types(con, targets)
            zs = tuple(self.name("z") for _ in bt)
            body = self.values(targets, 1, list(zip(zs, bt)))
            structure.append(lam(zs, body, bt))
        return self.sig.make_fold(symbol, structure, (), self.value(source, depth), ())

    def axiom_instance(self, scheme: str, c: str) -> Tuple[Term, Term]:
        return getattr(self, f"_axiom_{scheme}")(c)

    @staticmethod
    def _apply(ctx, args: Sequence[Term]) -> Term:
        binders, body = ctx
        return subst_vars(body, dict(zip(binders, args)))

    def _axiom_sub(self, c):
        n = int(self.rng.integers(1, 3))
        ys = tuple(self.name("y") for _ in range(n))
        t = self.context(ys, c, (c,))
        ss = [self.value(c) for _ in range(n)]
        return at(ys, t[1], tup(*ss), (c,) * n), self._apply(t, ss)

    def _axiom_SP(self, c):
        ys = (self.name("y"), self.name("y"))
        t = self.values((c, c))
        lhs = tup(at(ys, Var(ys[0]), t, (c, c)), at(ys, Var(ys[1]), t, (c, c)))
        return lhs, t

    def _axiom_dinat1(self, c):
        x, z, h = self.name("x"), self.name("z"), self.name("h")
        s = self.context((h,), c, (c,), 2)
        t = self.context((h,), c, (c,), 2)
        lhs = cy((x,), self._apply(s, [self._apply(t, [Var(x)])]), (c,))
        rhs = self._apply(s, [cy((z,), self._apply(t, [self._apply(s, [Var(z)])]), (c,))])
        return lhs, rhs

    def _axiom_dinatn(self, c):
        hs = (self.name("h"), self.name("h"))
        xs = (self.name("x"), self.name("x"))
        zs = (self.name("z"), self.name("z"))
        s = self.context(hs, c, (c, c), 2)
        t = self.context(hs, c, (c, c), 2)

        def project(inner: Term) -> List[Term]:
            ys = (self.name("y"), self.name("y"))
            return [at(ys, Var(ys[i]), inner, (c, c)) for i in range(2)]

        lhs = cy(xs, self._apply(s, project(self._apply(t, [Var(x) for x in xs]))), (c, c))
        inner = cy(zs, self._apply(t, project(self._apply(s, [Var(z) for z in zs]))), (c, c))
        rhs = at(zs, self._apply(s, [Var(z) for z in zs]), inner, (c, c))
        return lhs, rhs

    def _axiom_bekic(self, c):
        x, y = self.name("x"), self.name("y")
        t = self.context((x, y), c, (c,), 2)[1]
        s = self.context((x, y), c, (c,), 2)[1]
        a = cy((x,), at((y,), t, cy((y,), s, (c,)), (c,)), (c,))
        b = cy((y,), at((x,), s, a, (c,)), (c,))
        return cy((x, y), tup(t, s), (c, c)), tup(a, b)

    def _axiom_CI(self, c):
        ys = (self.name("y"), self.name("y"))
        t = self.context(ys, c, (c,), 2)
        rhos = [[Var(self.choice(ys)) for _ in ys] for _ in ys]
        lhs = cy(ys, tup(*(self._apply(t, rho) for rho in rhos)), (c, c))
        y = self.name("y")
        diag = cy((y,), self._apply(t, [Var(y), Var(y)]), (c,))
        return lhs, tup(diag, diag)

    def _branch(self, c) -> Tuple[str, str]:
        axbr = self.sig.axbr(c)
        assert axbr is not None, f"{c} has no branching axioms"
        return axbr

    def _axiom_del(self, c):
        unit, branch = self._branch(c)
        x = self.name("x")
        t = self.value(c)
        return cy((x,), App(branch, (Var(x), t)), (c,)), t

    def _axiom_unitL(self, c):
        unit, branch = self._branch(c)
        t = self.value(c)
        return App(branch, (App(unit), t)), t

    def _axiom_unitR(self, c):
        unit, branch = self._branch(c)
        t = self.value(c)
        return App(branch, (t, App(unit))), t

    def _axiom_assoc(self, c):
        unit, branch = self._branch(c)
        s, t, u = self.value(c), self.value(c), self.value(c)
        return (
            App(branch, (App(branch, (s, t)), u)),
            App(branch, (s, App(branch, (t, u)))),
        )

    def _axiom_comm(self, c):
        unit, branch = self._branch(c)
        s, t = self.value(c), self.value(c)
        return App(branch, (s, t)), App(branch, (t, s))

    def _axiom_degen(self, c):
        unit, branch = self._branch(c)
        t = self.value(c)
        return App(branch, (t, t)), t

    def schemes(self, c: str) -> Tuple[str, ...]:
        if self.sig.axbr(c) is not None:
            return AXIOMS + BRANCH_AXIOMS
        return AXIOMS


def random_bindings(gen: TermGenerator, var_types: Dict[str, str]) -> Dict[str, Term]:
    return {v: gen.value(ty) for v, ty in sorted(var_types.items())}
