from __future__ import annotations

import pytest

from smalideob.cfg import build_cfg
from smalideob.corpus import english_corpus
from smalideob.frontend import parse_smali, program_from_classes
from smalideob.oracle import ObfuscationScheme, SchemeKind, obfuscate_program
from smalideob.pipeline import (
    AllCandidatesFailed, AnalysisOptions, analyze_method, deobfuscate_program, run_candidates,
)
from smalideob.reporter import obfuscation_fraction, slice_size_distribution
from smalideob.scanner import find_deob_candidates, find_string_literals, is_excluded_class
from smalideob.vm import ExecBudget

HELPERS = """\
.class public Lt/P;
.super Ljava/lang/Object;

.method public static spin(Ljava/lang/String;)Ljava/lang/String;
    .locals 0
  :top
    goto :top
.end method

.method public static empty(Ljava/lang/String;)Ljava/lang/String;
    .locals 0
    const-string p0, ""
    return-object p0
.end method

.method public static id(Ljava/lang/String;)Ljava/lang/String;
    .locals 0
    return-object p0
.end method
"""


def _program(first: str, second: str):
    main = parse_smali(f"""\
.class public Lt/M;
.super Ljava/lang/Object;

.method public static run()V
    .locals 3
    const-string v0, "abc"
    invoke-static {{v0}}, Lt/P;->{first}(Ljava/lang/String;)Ljava/lang/String;
    move-result-object v1
    invoke-static {{v0}}, Lt/P;->{second}(Ljava/lang/String;)Ljava/lang/String;
    move-result-object v2
    return-void
.end method
""")
    program = program_from_classes([main, parse_smali(HELPERS)])
    method = main.methods[0]
    cfg = build_cfg(method)
    lit = find_string_literals(method)[0]
    return program, method, cfg, lit, find_deob_candidates(method, cfg, lit)


BUDGET = ExecBudget(max_steps=5000)


def test_falls_back_after_empty_output():
    program, method, cfg, lit, cands = _program("empty", "id")
    assert len(cands) == 2
    out = run_candidates(program, method, lit, cands, budget=BUDGET, cfg=cfg)
    assert out.candidate is cands[1]
    assert out.succeeded and out.result.output == "abc"


def test_falls_back_after_rejection():
    main = parse_smali("""\
.class public Lt/N;
.super Ljava/lang/Object;

.method public static run()V
    .locals 3
    const-string v0, "abc"
    const-string v1, "other"
    invoke-static {v1}, Lt/P;->id(Ljava/lang/String;)Ljava/lang/String;
    move-result-object v1
    invoke-static {v0}, Lt/P;->id(Ljava/lang/String;)Ljava/lang/String;
    move-result-object v2
    return-void
.end method
""")
    program = program_from_classes([main, parse_smali(HELPERS)])
    method = main.methods[0]
    cfg = build_cfg(method)
    lit = find_string_literals(method)[0]
    cands = find_deob_candidates(method, cfg, lit)
    out = run_candidates(program, method, lit, cands, budget=BUDGET)
    assert out.candidate is cands[1]
    assert out.result.output == "abc"
    with pytest.raises(AllCandidatesFailed) as info:
        run_candidates(program, method, lit, cands[:1], budget=BUDGET)
    assert info.value.outcomes[0].status == "Rejected"
    assert info.value.outcomes[0].detail.startswith("LiteralIndependent")


def test_all_candidates_fail():
    program, method, cfg, lit, cands = _program("spin", "spin")
    with pytest.raises(AllCandidatesFailed) as info:
        run_candidates(program, method, lit, cands, budget=BUDGET)
    assert [o.status for o in info.value.outcomes] == ["Timeout", "Timeout"]


def test_analyze_method_records():
    program, method, *_ = _program("empty", "id")
    [r] = analyze_method(program, method, "app", AnalysisOptions(budget=BUDGET))
    assert (r.status, r.output, r.candidate_count, r.condition) == ("Ok", "abc", 2, "StaticStringCall")
    assert r.duration is None
    [s] = analyze_method(program, method, "app", AnalysisOptions(scan_only=True))
    assert (s.status, s.output, s.slice_size) == ("Scanned", None, None)


def test_parallel_run_matches_serial(tmp_path):
    program, _ = obfuscate_program(english_corpus(8, classes=6),
                                   ObfuscationScheme(SchemeKind.CAESAR_SHIFT, junk_conditionals=1), 3)
    serial = list(deobfuscate_program(program, "app"))
    parallel = list(deobfuscate_program(program, "app", workers=2, dump_dir=tmp_path))
    assert serial == parallel
    assert all(r.status == "Ok" for r in serial)
    assert len(list(tmp_path.rglob("*.smali"))) == len(serial)


@pytest.fixture(scope="module")
def scheme_runs():
    source = english_corpus(2, classes=5, library_classes=3)
    runs = {}
    for kind in SchemeKind:
        program, truth = obfuscate_program(source, ObfuscationScheme(kind, junk_conditionals=2), 1)
        runs[kind] = (program, truth, list(deobfuscate_program(program, kind.value)))
    return source, runs


def test_schemes_have_distinct_modal_slice_sizes(scheme_runs):
    _, runs = scheme_runs
    modes = {}
    for kind, (_, _, records) in runs.items():
        sizes = slice_size_distribution(records)
        modes[kind] = max(sizes, key=sizes.get)
    assert len(set(modes.values())) == len(modes), modes


def test_each_condition_is_exercised(scheme_runs):
    _, runs = scheme_runs
    conditions = {r.condition for _, _, records in runs.values() for r in records}
    assert conditions == {"StaticStringCall", "ConstructorInit", "CheckCastToString"}


def test_fraction_over_non_library_literals(scheme_runs):
    source, runs = scheme_runs
    libraries = [d for d in source.classes if is_excluded_class(d)]
    assert libraries
    for program, truth, records in runs.values():
        assert obfuscation_fraction(records)[records[0].app] >= 95.0
        # library classes produce no records at all
        assert not {r.cls for r in records} & set(libraries)
        assert len(records) == len(truth)


def test_first_candidate_resolves_most_literals(scheme_runs):
    _, runs = scheme_runs
    first = fallback = 0
    for program, _, _ in runs.values():
        for cls, method in program.iter_methods():
            if is_excluded_class(cls.descriptor):
                continue
            cfg = build_cfg(method)
            for lit in find_string_literals(method):
                cands = find_deob_candidates(method, cfg, lit)
                if not cands:
                    continue
                try:
                    out = run_candidates(program, method, lit, cands, cfg=cfg)
                except AllCandidatesFailed:
                    continue
                if out.candidate is cands[0]:
                    first += 1
                else:
                    fallback += 1
    assert first >= fallback
    assert first > 0
