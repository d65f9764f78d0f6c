# Copyright (c) Meta Platforms, Inc. and affiliates.
# All rights reserved.

# This source code is licensed under the license found in the
# LICENSE file in the root directory of this source tree.

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from cycfold.modeling.kernel import positions, Position, replace_at, Term
from cycfold.modeling.rules import RuleSet

LEFTMOST_OUTERMOST = "leftmost_outermost"
RANDOM = "random"


class FuelExhaustedError(RuntimeError):
    def __init__(self, message: str, trace: "Trace"):
        super().__init__(message)
        self.trace = trace


@dataclass(frozen=True)
class Step:
    rule: str
    position: Position
    before: Term
    after: Term
    rule_key: Tuple = ()


@dataclass
class Trace:
    start: Term
    steps: List[Step] = field(default_factory=list)
    final: Optional[Term] = None
    # number of steps, also kept when individual steps are not recorded
    count: int = 0

    def rules_used(self) -> List[str]:
        return [s.rule for s in self.steps]


def redexes(t: Term, rules: RuleSet):
    """Every (position, rule, contractum) in leftmost-outermost order."""
    for pos, s in positions(t):
        for rule, out in rules.matches_at(s):
            yield pos, rule, out


def step(t: Term, rules: RuleSet) -> Optional[Tuple[Term, Step]]:
    """Contract the leftmost-outermost redex; at one position the first rule in
    list order wins."""
    for pos, s in positions(t):
        hit = rules.rewrite_root(s)
        if hit is None:
            continue
        rule, out = hit
        after = replace_at(t, pos, out)
        return after, Step(rule.name, pos, t, after, rule.key)
    return None


class Rewriter:
    """
    Normalizes terms with a rule set under a step budget.

    The default strategy contracts the leftmost-outermost redex. The random
    strategy picks uniformly among all redexes and is used to check that
    FOLDr normal forms do not depend on the strategy.
    """

    def __init__(
        self,
        rules: RuleSet,
        fuel: int = 1000000,
        strategy: str = LEFTMOST_OUTERMOST,
        seed: Optional[int] = None,
    ):
        assert strategy in (LEFTMOST_OUTERMOST, RANDOM), f"unknown strategy {strategy}"
        assert fuel > 0
        self.rules = rules
        self.fuel = fuel
        self.strategy = strategy
        self.rng = np.random.default_rng(seed)

    def step(self, t: Term) -> Optional[Tuple[Term, Step]]:
        if self.strategy == LEFTMOST_OUTERMOST:
            return step(t, self.rules)
        found = list(redexes(t, self.rules))
        if not found:
            return None
        pos, rule, out = found[int(self.rng.integers(len(found)))]
        after = replace_at(t, pos, out)
        return after, Step(rule.name, pos, t, after, rule.key)

    def normalize(self, t: Term, record: bool = True) -> Trace:
        trace = Trace(start=t)
        current = t
        while True:
            hit = self.step(current)
            if hit is None:
                break
            if trace.count >= self.fuel:
                trace.final = current
                raise FuelExhaustedError(
                    f"no normal form within {self.fuel} steps using {self.rules.name}", trace
                )
            current, s = hit
            trace.count += 1
            if record:
                trace.steps.append(s)
        trace.final = current
        logging.debug(f"{self.rules.name}: normal form after {trace.count} steps")
        return trace


def normalize(t: Term, rules: RuleSet, fuel: int = 1000000) -> Trace:
    return Rewriter(rules, fuel).normalize(t)


def normal_form(t: Term, rules: RuleSet, fuel: int = 1000000) -> Term:
    return Rewriter(rules, fuel).normalize(t, record=False).final
