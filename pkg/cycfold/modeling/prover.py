# Copyright (c) Meta Platforms, Inc. and affiliates.
# All rights reserved.

# This source code is licensed under the license found in the
# LICENSE file in the root directory of this source tree.

import enum
import logging
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

from cycfold.modeling.analysis import bad_subterm, open_fold
from cycfold.modeling.bisim import Chart, compare, DistinguishingPath, Partition, term_to_chart
from cycfold.modeling.kernel import Term
from cycfold.modeling.rewrite import Rewriter, Trace
from cycfold.modeling.rules import RuleSet
from cycfold.modeling.typecheck import fmt_types, TypeChecker, TypingError


class VerdictKind(enum.Enum):
    EQUAL = "Equal"
    NOT_EQUAL = "NotEqual"
    REFUSED = "Refused"


EXIT_CODES = {VerdictKind.EQUAL: 0, VerdictKind.NOT_EQUAL: 1, VerdictKind.REFUSED: 2}


@dataclass
class Verdict:
    kind: VerdictKind
    reason: str = ""
    # offending subterm of a refused side
    subterm: Optional[Term] = None
    # uninterpreted labels (free variables, stuck folds) took part in the comparison
    incomplete: bool = False
    traces: Tuple[Optional[Trace], Optional[Trace]] = (None, None)
    charts: Tuple[Optional[Chart], Optional[Chart]] = (None, None)
    partition: Optional[Partition] = None
    path: Optional[DistinguishingPath] = None

    @property
    def exit_code(self) -> int:
        return EXIT_CODES[self.kind]

    @property
    def equal(self) -> bool:
        return self.kind == VerdictKind.EQUAL

    def __str__(self):
        out = self.kind.value
        if self.reason:
            out += f" ({self.reason})"
        if self.incomplete:
            out += " [incomplete]"
        return out


class Prover:
    """
    Decides s = t on the good-term set T: both sides are normalized with FOLDr
    and the normal forms are compared by bisimulation of their charts. Terms
    outside T are refused with the offending subterm.
    """

    def __init__(self, foldr: RuleSet, fuel: int = 1000000):
        self.foldr = foldr
        self.sig = foldr.sig
        self.fuel = fuel
        self.checker = TypeChecker(self.sig)

    def prove(self, s: Term, t: Term, var_types: Optional[Dict[str, str]] = None) -> Verdict:
        var_types = var_types or {}
        ty_s = self.checker.infer({}, var_types, s)
        ty_t = self.checker.infer({}, var_types, t)
        if ty_s != ty_t:
            raise TypingError(f"sides have types {fmt_types(ty_s)} and {fmt_types(ty_t)}")
        for side in (s, t):
            bad = open_fold(side, self.sig)
            if bad is not None:
                return self._refuse("open-fold", bad)
        rewriter = Rewriter(self.foldr, self.fuel)
        traces = (rewriter.normalize(s), rewriter.normalize(t))
        for trace in traces:
            bad = bad_subterm(trace.final, self.sig)
            if bad is not None:
                v = self._refuse("bad-term", bad.cycle)
                v.traces = traces
                return v
        charts = (
            term_to_chart(traces[0].final, self.sig, var_types, ty_s),
            term_to_chart(traces[1].final, self.sig, var_types, ty_t),
        )
        result = compare(*charts)
        verdict = Verdict(
            VerdictKind.EQUAL if result.equal else VerdictKind.NOT_EQUAL,
            incomplete=charts[0].uninterpreted or charts[1].uninterpreted,
            traces=traces,
            charts=charts,
            partition=result.partition,
            path=result.path,
        )
        logging.info(
            f"prove: {verdict} after {traces[0].count} + {traces[1].count} steps, "
            f"{result.partition.num_blocks()} blocks"
        )
        return verdict

    def _refuse(self, reason: str, subterm: Term) -> Verdict:
        logging.info(f"prove: refused, {reason}")
        return Verdict(VerdictKind.REFUSED, reason, subterm)


def prove(
    s: Term,
    t: Term,
    foldr: RuleSet,
    fuel: int = 1000000,
    var_types: Optional[Dict[str, str]] = None,
) -> Verdict:
    return Prover(foldr, fuel).prove(s, t, var_types)
