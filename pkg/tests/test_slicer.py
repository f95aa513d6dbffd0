from __future__ import annotations

from dataclasses import replace

import pytest
from hypothesis import given, settings, strategies as st

from helpers import rdg_is_acyclic, synthetic_agreement, versions_increase
from smalideob import opcodes as ops
from smalideob.cfg import build_cfg
from smalideob.corpus import random_method
from smalideob.frontend import SmaliProgram, parse_smali
from smalideob.scanner import SlicingCriterion, find_deob_candidates, find_string_literals
from smalideob.vm import Interpreter
from smalideob.slicer import (
    LiteralIndependent, NoPath, PathLimits, RdgNode, UnresolvableRegister, build_rdg,
    compute_slice, criterion_reaches_literal, emit_slice, enumerate_paths, resolve_undefined,
    slice_candidate,
)


def _method(body: str, header: str = ".method public static f()V", regs: str = ".locals 4"):
    text = (".class public Lt/A;\n.super Ljava/lang/Object;\n\n"
            f"{header}\n    {regs}\n{body}\n.end method\n")
    return parse_smali(text).methods[0]


@pytest.fixture()
def ex(example_method, example_cfg):
    lit = find_string_literals(example_method)[0]
    cand = find_deob_candidates(example_method, example_cfg, lit)[0]
    return example_method, example_cfg, lit, cand


def test_example_paths(ex):
    _, cfg, lit, cand = ex
    paths = enumerate_paths(cfg, lit.stmt_index, cand.anchor)
    assert sorted(p.statements for p in paths) == [
        (2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14),
        (2, 3, 4, 5, 6, 8, 9, 10, 11, 12, 13, 14),
    ]


def test_example_rdg(ex):
    method, cfg, lit, cand = ex
    for path in enumerate_paths(cfg, lit.stmt_index, cand.anchor):
        rdg = build_rdg(method, path)
        # v0 is written by 4, 5, 10, 11, 12 and 14 on both paths
        assert rdg.node("v0") == RdgNode("v0", 6)
        assert rdg.undefined == {"v1", "v2"}
        assert criterion_reaches_literal(rdg, cand.criterion, lit)
        assert RdgNode("v3", 1) in rdg.reachable(rdg.node("v0"))
        assert rdg_is_acyclic(rdg)
        assert versions_increase(rdg)


def test_example_slice_then_prefix(ex):
    method, cfg, lit, cand = ex
    paths = enumerate_paths(cfg, lit.stmt_index, cand.anchor)
    sl = compute_slice(method, cfg, lit, cand, paths, [build_rdg(method, p) for p in paths])
    assert 0 not in sl.indices and 1 not in sl.indices
    assert sl.undefined == {"v1", "v2"}
    assert not sl.closed
    full = resolve_undefined(method, cfg, sl, lit)
    assert full.prefix == {0, 1}
    assert full.closed
    assert full.indices == tuple(range(15))
    assert full.size == 12
    done = emit_slice(full)
    emit = [s for s in done.statements if s.opcode == ops.EMIT]
    assert len(emit) == 1 and emit[0].registers == ("v0",)
    assert done.statements[-1].opcode == ops.EMIT
    assert emit_slice(done) is done
    assert "emit-string v0" in done.to_smali()


def test_slice_is_subset_of_method(ex):
    method, cfg, _, cand = ex
    sl = slice_candidate(method, cfg, cand)
    originals = [s for s in sl.statements if s.opcode != ops.EMIT]
    assert all(method.statements[s.index] == s for s in originals)
    assert [s.index for s in originals] == sorted(s.index for s in originals)


def test_parameter_without_definition_is_unresolvable():
    m = _method("""\
    const-string v0, "abc"
    invoke-static {v0, v2}, La;->f(Ljava/lang/String;I)Ljava/lang/String;
    move-result-object v1
    return-void""", header=".method public static f(I)V", regs=".locals 2")
    cfg = build_cfg(m)
    cand = find_deob_candidates(m, cfg, find_string_literals(m)[0])[0]
    with pytest.raises(UnresolvableRegister):
        slice_candidate(m, cfg, cand)


def test_literal_independent_candidate():
    m = _method("""\
    const-string v0, "abc"
    const-string v2, ""
    invoke-static {v2}, La;->f(Ljava/lang/String;)Ljava/lang/String;
    move-result-object v1
    return-void""")
    cfg = build_cfg(m)
    cand = find_deob_candidates(m, cfg, find_string_literals(m)[0])[0]
    with pytest.raises(LiteralIndependent):
        slice_candidate(m, cfg, cand)


def test_no_path():
    m = _method("""\
    goto :end
    const-string v0, "abc"
  :end
    return-void""")
    with pytest.raises(NoPath):
        enumerate_paths(build_cfg(m), 2, 1)


LOOP = """\
    const/4 v1, 0
    const-string v0, "abc"
  :top
    if-nez v1, :out
    add-int/lit8 v1, v1, 1
    goto :top
  :out
    invoke-static {v0}, La;->f(Ljava/lang/String;)Ljava/lang/String;
    move-result-object v2
    return-void"""


def test_loop_budget_bounds_paths():
    cfg = build_cfg(_method(LOOP))
    once = enumerate_paths(cfg, 1, 6, PathLimits(loop_budget=1))
    twice = enumerate_paths(cfg, 1, 6, PathLimits(loop_budget=2))
    assert len(once) == 2
    assert len(twice) == 3
    for p in twice:
        assert p.statements[0] == 1 and p.statements[-1] == 6


def test_path_cap_monotone():
    cfg = build_cfg(_method(LOOP))
    counts = [len(enumerate_paths(cfg, 1, 6, PathLimits(max_paths=k, loop_budget=3)))
              for k in range(1, 6)]
    assert counts == [1, 2, 3, 4, 4]


def test_bfs_queue_cap_gives_same_paths():
    syn = random_method(11)
    cfg = build_cfg(syn.method)
    wide = enumerate_paths(cfg, syn.literal_index, syn.call_index + 1)
    narrow = enumerate_paths(cfg, syn.literal_index, syn.call_index + 1, PathLimits(bfs_queue_cap=1))
    assert sorted(p.statements for p in wide) == sorted(p.statements for p in narrow)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 100_000))
def test_rdg_invariants_on_random_paths(seed):
    syn = random_method(seed)
    cfg = build_cfg(syn.method)
    for path in enumerate_paths(cfg, 0, syn.call_index + 1):
        rdg = build_rdg(syn.method, path)
        assert rdg_is_acyclic(rdg)
        assert versions_increase(rdg)
        for dependent, dependency in rdg.edges:
            assert rdg.def_step[dependent] > rdg.def_step.get(dependency, -1)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 100_000))
def test_slice_agrees_with_method(seed):
    out, full, sl = synthetic_agreement(seed)
    if out is not None:
        assert out == full
        assert set(sl.indices) <= set(range(len(random_method(seed).method.statements)))


DIAMONDS = """\
    const/4 v0, 1
  {blocks}
    return-void"""


def _brute_paths(cfg, s, t):
    """Exhaustive DFS over an acyclic CFG."""
    if s == t:
        return 1
    return sum(_brute_paths(cfg, n, t) for n in cfg.successors[s])


def test_three_sequential_diamonds_give_eight_paths():
    blocks = "\n".join(f"""\
    if-eqz v0, :else{k}
    add-int/lit8 v0, v0, 1
    goto :join{k}
  :else{k}
    add-int/lit8 v0, v0, 2
  :join{k}
    nop""" for k in range(3))
    m = _method(DIAMONDS.format(blocks=blocks))
    cfg = build_cfg(m)
    end = len(m.statements) - 1
    paths = enumerate_paths(cfg, 0, end)
    assert len(paths) == 8 == _brute_paths(cfg, 0, end)
    assert len({p.statements for p in paths}) == 8


def test_single_statement_path(example_cfg):
    assert [p.statements for p in enumerate_paths(example_cfg, 5, 5)] == [(5,)]


def test_const_only_path():
    m = _method("    const/4 v0, 1\n    const/4 v1, 2\n    const/4 v2, 3\n    return-void")
    rdg = build_rdg(m, (0, 1, 2))
    assert len(rdg.nodes) == 3 and not rdg.edges and not rdg.undefined


def test_two_address_edges():
    m = _method("    const/4 v0, 1\n    const/4 v1, 2\n    add-int/2addr v1, v0\n    return-void")
    rdg = build_rdg(m, (0, 1, 2))
    assert {(RdgNode("v1", 2), RdgNode("v1", 1)), (RdgNode("v1", 2), RdgNode("v0", 1))} <= rdg.edges


def test_minimal_two_statement_slice():
    m = _method("""\
    const-string v0, "abc"
    invoke-static {v0}, La;->f(Ljava/lang/String;)Ljava/lang/String;
    move-result-object v1
    return-void""")
    cfg = build_cfg(m)
    sl = slice_candidate(m, cfg, find_deob_candidates(m, cfg, find_string_literals(m)[0])[0])
    assert sl.size == 2
    assert sl.indices == (0, 1, 2)


def _perturbed(syn, text: str):
    method = syn.method
    stmts = list(method.statements)
    stmts[syn.literal_index] = replace(stmts[syn.literal_index], literal=text)
    m2 = replace(method, statements=tuple(stmts))
    cls = syn.program.classes[method.class_descriptor]
    program = SmaliProgram(dict(syn.program.classes))
    program.classes[cls.descriptor] = replace(cls, methods=(m2,))
    return program, m2


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 100_000))
def test_literal_dependence_matches_perturbation(seed):
    syn = random_method(seed)
    method = syn.method
    cfg = build_cfg(method)
    lit = [l for l in find_string_literals(method) if l.stmt_index == syn.literal_index][0]
    at = syn.call_index + 1
    base = Interpreter(syn.program).run_until(method, at)
    program2, m2 = _perturbed(syn, lit.value + "Q")
    changed = Interpreter(program2).run_until(m2, at)
    rdgs = [build_rdg(method, p) for p in enumerate_paths(cfg, lit.stmt_index, at)]
    for k in range(8):
        crit = SlicingCriterion(at, f"v{k}")
        reaches = all(criterion_reaches_literal(r, crit, lit) for r in rdgs)
        assert reaches == (base[k] != changed[k]), f"v{k}"
