from __future__ import annotations

from dataclasses import replace

import pytest
from hypothesis import given, settings, strategies as st

from smalideob.corpus import random_method
from smalideob.cfg import DanglingLabel, build_cfg, reachable_from, to_dot
from smalideob.dataflow import OpaqueOpcode, def_use
from smalideob.frontend import SmaliSyntaxError, parse_smali


def _method(body: str, header: str = ".method public static f()V", regs: str = ".locals 6"):
    text = (".class public Lt/A;\n.super Ljava/lang/Object;\n\n"
            f"{header}\n    {regs}\n{body}\n.end method\n")
    return parse_smali(text).methods[0]


def test_example_if_has_two_successors(example_cfg):
    assert example_cfg.successors[6] == (7, 8)
    assert example_cfg.predecessors[8] == (6, 7)
    assert example_cfg.successors[15] == ()
    assert example_cfg.edge_count == 16


def test_goto_switch_and_throw():
    m = _method("""\
    const/4 v0, 1
    packed-switch v0, :sw
    goto :end
  :a
    throw v0
  :b
    nop
  :end
    return-void
  :sw
    .packed-switch 0x0
        :a
        :b
    .end packed-switch""")
    cfg = build_cfg(m)
    assert set(cfg.successors[1]) == {2, 3, 4}
    assert cfg.successors[2] == (5,)
    assert cfg.successors[3] == ()
    assert reachable_from(cfg, 0) == {0, 1, 2, 3, 4, 5}
    assert "n1 -> n3" in to_dot(cfg, m)


def test_dangling_label():
    m = _method("    goto :x\n  :x\n    return-void")
    with pytest.raises(SmaliSyntaxError):
        _method("    goto :nowhere")
    with pytest.raises(DanglingLabel):
        build_cfg(replace(m, labels={}))


def _du(line: str, **kw):
    return def_use(_method("    " + line + "\n    return-void", **kw).statements[0])


def test_def_use_examples():
    assert _du("add-int/2addr v1, v0").defs == ("v1",)
    assert _du("add-int/2addr v1, v0").uses == ("v1", "v0")
    assert _du("add-long v0, v2, v4").defs == ("v0", "v1")
    assert _du("add-long v0, v2, v4").uses == ("v2", "v3", "v4", "v5")
    assert _du("shl-long v0, v2, v4").uses == ("v2", "v3", "v4")
    assert _du("const-wide v0, 0x1L").defs == ("v0", "v1")
    assert _du("aput v0, v1, v2").defs == ("v1",)
    assert _du("if-eqz v3, :x\n  :x").uses == ("v3",)
    call = _du("invoke-static {v0, v1}, La;->f(Ljava/lang/String;[C)Ljava/lang/String;")
    assert call.defs == ("v1",)  # arrays may be written by the callee, strings cannot
    assert call.produces_result
    assert _du("move-result-object v2").takes_result


def test_constructor_mutates_receiver():
    du = _du("invoke-direct {v0, v1}, Ljava/lang/String;-><init>([B)V")
    assert du.defs == ("v0", "v1")
    assert not du.produces_result


def test_opaque_opcode():
    stmt = _method("    frobnicate v0\n    return-void").statements[0]
    with pytest.raises(OpaqueOpcode):
        def_use(stmt)


def _recount(method) -> int:
    """Edge count from per-opcode arity, written without the CFG builder."""
    n = len(method.statements)
    total = 0
    for s in method.statements:
        op = s.opcode
        if op.startswith(("return", "throw")):
            continue
        if op.startswith("goto"):
            total += 1
            continue
        targets = {method.labels[t] for t in s.branch_targets}
        fall = s.index + 1 if s.index + 1 < n else None
        total += len(targets | ({fall} if fall is not None else set()))
    return total


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10**6))
def test_edge_count_matches_recount(seed):
    method = random_method(seed).method
    cfg = build_cfg(method)
    assert cfg.edge_count == _recount(method)
    for a, b in cfg.edges():
        assert 0 <= a < cfg.node_count and 0 <= b < cfg.node_count
        assert a in cfg.predecessors[b]
