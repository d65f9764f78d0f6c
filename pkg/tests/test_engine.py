# Copyright (c) Meta Platforms, Inc. and affiliates.
# All rights reserved.

# This source code is licensed under the license found in the
# LICENSE file in the root directory of this source tree.

import os

import pytest

from cycfold.build_cycfold import build_engine, engine_overrides, FOLDR_ONLY_CONFIG
from cycfold.engine import CycFoldEngine, FoldrConf, RewriteConf
from cycfold.modeling.kernel import alpha_eq
from cycfold.modeling.rewrite import LEFTMOST_OUTERMOST, RANDOM
from cycfold.surface.elaborate import Command


def test_default_config(monkeypatch):
    monkeypatch.delenv("CYCFOLD_FUEL", raising=False)
    engine = build_engine()
    assert isinstance(engine, CycFoldEngine)
    assert engine.rewrite_conf == RewriteConf(1000000, LEFTMOST_OUTERMOST, None)
    assert engine.foldr_conf == FoldrConf(composition_rule=True, simp=True)
    assert engine.gs_conf.max_width == 2
    assert engine.spec_conf.samples == 0


def test_overrides():
    engine = build_engine(hydra_overrides_extra=engine_overrides(["rewrite.fuel=500", "rewrite.strategy=random"]))
    assert engine.rewrite_conf.fuel == 500
    assert engine.rewrite_conf.strategy == RANDOM
    assert engine_overrides(["foldr.simp = false"]) == ["++engine.foldr.simp=false"]
    with pytest.raises(ValueError, match="key=value"):
        engine_overrides(["fuel"])


def test_fuel_from_the_environment(monkeypatch):
    monkeypatch.setenv("CYCFOLD_FUEL", "123")
    assert build_engine().rewrite_conf.fuel == 123


def test_foldr_only_config(nat):
    engine = build_engine(FOLDR_ONLY_CONFIG)
    assert not engine.foldr_conf.simp
    assert engine.eval_rules(nat).names == engine.foldr(nat).names
    assert build_engine().eval_rules(nat).names[-2:] == ["10r", "13r"]


def test_engine_without_config(nat):
    engine = CycFoldEngine(rewrite={"fuel": 10}, foldr={"composition_rule": False})
    assert engine.rewrite_conf.fuel == 10
    assert "6r" not in engine.foldr(nat).names


def test_config_packages_are_declared():
    setup_py = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "setup.py")
    with open(setup_py) as f:
        text = f.read()
    for package in ("hydra-core", "omegaconf", "iopath"):
        assert f'"{package}>=' in text, package


def test_evaluate(engine, corpus):
    program = corpus("isempty.cyc")
    results = [engine.evaluate(program, c.terms[0]).term for c in program.commands if c.kind == "eval"]
    expected = [program.term(s) for s in ("true", "true", "false")]
    assert results == expected

    program = corpus("aa.cyc")
    results = [engine.evaluate(program, c.terms[0]).term for c in program.commands]
    expected = [program.term(s) for s in ("true", "false", "true", "true", "false", "true")]
    assert results == expected


def test_foldr_only_evaluation_is_bisimilar(engine, corpus):
    program = corpus("sum.cyc")
    foldr_only = build_engine(FOLDR_ONLY_CONFIG)
    for cmd in program.commands:
        full = engine.evaluate(program, cmd.terms[0]).term
        plain = foldr_only.evaluate(program, cmd.terms[0]).term
        assert engine.prove(program, full, plain).equal


def test_run_directives(engine, corpus):
    program = corpus("eq12.cyc")
    reports = engine.run_directives(program)
    assert [r.exit_code for r in reports] == [0, 0, 0, 1]
    assert [r.summary for r in reports] == ["Equal", "true", "Equal", "NotEqual"]
    assert [r.kind for r in reports] == ["prove", "bisim", "prove", "prove"]
    assert "path" in reports[3].details
    out = reports[0].to_json()
    assert out["kind"] == "prove"
    assert out["verdict"] == "Equal"
    assert out["input"] == program.commands[0].text

    reports = engine.run_directives(corpus("mapinc.cyc"))
    assert [r.exit_code for r in reports] == [0, 0, 2]
    assert reports[2].details["reason"] == "bad-term"


def test_eval_report_with_trace(engine, corpus):
    program = corpus("sum.cyc")
    report = engine.run_command(program, program.commands[0], trace=True)
    assert report.exit_code == 0
    assert report.details["steps"] == len(report.details["trace"]) > 0
    assert sum(report.details["rules"].values()) == report.details["steps"]
    trace = report.details["trace"]
    assert [s["step"] for s in trace] == list(range(1, len(trace) + 1))
    assert alpha_eq(program.term(report.summary), program.term("cy(x. S(S(S(x))))"))


def test_eval_report_marks_unique_normal_forms(engine, corpus):
    program = corpus("sum.cyc")
    report = engine.run_command(program, program.commands[0])
    assert report.details["unique"] is False
    report = build_engine(FOLDR_ONLY_CONFIG).run_command(program, program.commands[0])
    assert report.details["unique"] is True


def test_bisim_report_options(engine, corpus):
    program = corpus("eq12.cyc")
    report = engine.run_command(program, program.commands[1], chart=True, partition=True)
    assert report.details["bisimilar"]
    assert len(report.details["charts"]) == 2
    assert report.details["partition"][-1] == report.details["blocks"]
    groups = report.details["groups"]
    assert len(groups) == report.details["blocks"]
    c1, c2 = report.details["charts"]
    expected = [f"1:{n['id']}" for n in c1["nodes"]] + [f"2:{n['id']}" for n in c2["nodes"]]
    assert sorted(n for g in groups for n in g) == sorted(expected)


def test_gscheck_report(engine, corpus):
    program = corpus("isempty.cyc")
    gscheck = Command("gscheck", (), (), 0, "gscheck")
    report = engine.run_command(program, gscheck)
    assert report.exit_code == 0
    assert report.summary == "passed"
    report = engine.run_command(program, gscheck, fixpoint=True)
    assert report.exit_code == 1
    assert report.summary.startswith("failed: fix (clause 7")


def test_fuel_exhaustion_is_reported(corpus):
    program = corpus("sum.cyc")
    engine = build_engine(hydra_overrides_extra=["++engine.rewrite.fuel=1"])
    report = engine.run_command(program, program.commands[0])
    assert report.exit_code == 2
    assert "error" in report.details
    assert report.summary.startswith("error:")


def test_dump_rules(engine, nat):
    lines = engine.dump_rules(nat, max_width=1)
    assert lines[0].startswith("(1r) ")
    assert any(line.startswith("(7r) ") and "if every |s_i| = 1" in line for line in lines)
