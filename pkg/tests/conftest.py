# Copyright (c) Meta Platforms, Inc. and affiliates.
# All rights reserved.

# This source code is licensed under the license found in the
# LICENSE file in the root directory of this source tree.

import os

import numpy as np
import pytest

from cycfold.build_cycfold import build_engine
from cycfold.surface.elaborate import load_text

CORPUS_DIR = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "corpus")
CORPUS_FILES = sorted(f for f in os.listdir(CORPUS_DIR) if f.endswith(".cyc"))

NAT_LIST = """
ctype CNat where
  0 : CNat
  S : CNat -> CNat
  with axioms AxCy

ctype CList where
  [] : CList
  :: : CNat, CList -> CList
  with axioms AxCy

fun plus : CNat, CNat -> CNat
fun plus(m, n) = fold (n, x. S(x)) m

fun sum : CList -> CNat
fun sum(t) = fold (0, k. x. plus(k, x)) t

fun mapinc : CList -> CList
fun mapinc(t) = fold ([], l. s. S(l) :: s) t
"""

TREE_BOOL = """
ctype CTree where
  ∅ : CTree
  a : CTree -> CTree
  b : CTree -> CTree
  + : CTree, CTree -> CTree
  with axioms AxCy, AxBr(∅, +)

ctype Bool where
  true : Bool
  false : Bool
  /\\ : Bool, Bool -> Bool
  with axioms AxCy, AxBr(true, /\\)

fun isEmpty : CTree -> Bool
fun isEmpty(t) = fold (true, x. false, x. false, x. y. x /\\ y) t
"""


def corpus_path(name: str) -> str:
    return os.path.join(CORPUS_DIR, name)


@pytest.fixture(scope="session")
def engine():
    return build_engine()


@pytest.fixture(scope="session")
def corpus(engine):
    """Loader for corpus programs, each file elaborated once per session."""
    cache = {}

    def load(name: str):
        if name not in cache:
            cache[name] = engine.load(corpus_path(name))
        return cache[name]

    return load


@pytest.fixture
def nat():
    return load_text(NAT_LIST, "nat.cyc")


@pytest.fixture
def tree():
    return load_text(TREE_BOOL, "tree.cyc")


@pytest.fixture
def rng():
    return np.random.default_rng(0)
