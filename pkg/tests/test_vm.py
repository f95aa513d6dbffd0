from __future__ import annotations


import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from reference_arith import expected_binary, expected_unary
from smalideob import opcodes as ops
from smalideob.frontend import MethodRef, SmaliProgram, Statement, parse_smali, print_smali
from smalideob.scanner import SlicingCriterion, find_deob_candidates, find_string_literals
from smalideob.slicer import SliceProgram, slice_candidate
from smalideob.vm import (
    DalvikRuntimeError, ExecBudget, ExecStatus, Interpreter, binop, execute, litop, unop,
)


def _slice(body: str, out: str = "v0", regs: int = 6, cls: str = "Lt/A;") -> SliceProgram:
    text = (f".class public {cls}\n.super Ljava/lang/Object;\n\n"
            f".method public static f()V\n    .registers {regs}\n{body}\n.end method\n")
    m = parse_smali(text).methods[0]
    stmts = m.statements + (Statement(-1, ops.EMIT, (out,)),)
    return SliceProgram(origin=m.ref, statements=stmts, labels=m.labels,
                        criterion=SlicingCriterion(0, out), output_register=out,
                        register_count=m.register_count, anchor=0,
                        indices=tuple(range(len(m.statements))))


def test_example_executes(example, example_method, example_cfg):
    program, truth = example
    lit = find_string_literals(example_method)[0]
    cand = find_deob_candidates(example_method, example_cfg, lit)[0]
    res = execute(slice_candidate(example_method, example_cfg, cand), program)
    assert res.status is ExecStatus.OK
    assert res.output == "0zkzVA" == truth[("Lu/Bjg;", "Bjg()V", 2)]
    assert 0 < res.steps < 200


def test_xor_loop_over_chars():
    sl = _slice("""\
    const-string v0, "ABC"
    invoke-virtual {v0}, Ljava/lang/String;->toCharArray()[C
    move-result-object v1
    const/4 v2, 0
  :top
    array-length v3, v1
    if-ge v2, v3, :done
    aget-char v3, v1, v2
    xor-int/lit8 v3, v3, 0x20
    int-to-char v3, v3
    aput-char v3, v1, v2
    add-int/lit8 v2, v2, 1
    goto :top
  :done
    new-instance v0, Ljava/lang/String;
    invoke-direct {v0, v1}, Ljava/lang/String;-><init>([C)V""")
    res = Interpreter().execute(sl)
    assert (res.status, res.output) == (ExecStatus.OK, "abc")


def test_emitting_a_non_string_is_a_type_error():
    res = Interpreter().execute(_slice("    const/4 v0, 5"))
    assert res.status is ExecStatus.RUNTIME_ERROR
    assert res.error_detail.startswith("TypeError")


LOOP = "  :top\n    add-int/lit8 v1, v1, 1\n    goto :top"


def test_step_budget():
    res = Interpreter(budget=ExecBudget(max_steps=1000)).execute(_slice("    const/4 v1, 0\n" + LOOP))
    assert res.status is ExecStatus.TIMEOUT
    assert res.steps <= 1000


def test_wall_clock_budget_with_fake_clock():
    ticks = iter(range(10**9))
    vm = Interpreter(budget=ExecBudget(wall_clock=50, max_steps=10**9), clock=lambda: next(ticks))
    res = vm.execute(_slice("    const/4 v1, 0\n" + LOOP))
    assert res.status is ExecStatus.TIMEOUT
    assert "wall-clock" in res.error_detail


@pytest.mark.parametrize("body,status,needle", [
    ("    invoke-static {}, Landroid/os/SystemClock;->uptimeMillis()J\n    const-string v0, \"x\"",
     ExecStatus.UNSUPPORTED, "Android"),
    ("    const/4 v1, 0\n    invoke-virtual {v1}, Ljava/lang/String;->length()I\n"
     "    const-string v0, \"x\"", ExecStatus.RUNTIME_ERROR, "NullPointer"),
    ("    const/4 v1, 2\n    new-array v1, v1, [I\n    const/4 v2, 3\n    aget v2, v1, v2\n"
     "    const-string v0, \"x\"", ExecStatus.RUNTIME_ERROR, "ArrayIndexOutOfBounds"),
    ("    add-int/lit8 v1, v2, 1\n    const-string v0, \"x\"", ExecStatus.RUNTIME_ERROR,
     "uninitialized"),
    ("    const/4 v1, 0\n    div-int/2addr v1, v1\n    const-string v0, \"x\"",
     ExecStatus.RUNTIME_ERROR, "divide by zero"),
])
def test_failure_statuses(body, status, needle):
    res = Interpreter().execute(_slice(body))
    assert res.status is status
    assert needle in res.error_detail


def test_call_depth_limit():
    cls = parse_smali("""\
.class public Lt/R;
.super Ljava/lang/Object;

.method public static r()V
    .locals 0
    invoke-static {}, Lt/R;->r()V
    return-void
.end method
""")
    program = SmaliProgram({cls.descriptor: cls})
    res = Interpreter(program, ExecBudget(max_depth=10)).execute(
        _slice("    invoke-static {}, Lt/R;->r()V\n    const-string v0, \"x\""))
    assert res.status is ExecStatus.RUNTIME_ERROR
    assert "depth" in res.error_detail


STATIC = """\
.class public Lt/S;
.super Ljava/lang/Object;

.field public static k:I

.method static constructor <clinit>()V
    .locals 1
    const/16 v0, 0x41
    sput v0, Lt/S;->k:I
    return-void
.end method
"""


def test_class_initializer_runs_lazily_and_execution_is_isolated():
    cls = parse_smali(STATIC)
    program = SmaliProgram({cls.descriptor: cls})
    before = print_smali(cls)
    sl = _slice("""\
    sget v1, Lt/S;->k:I
    add-int/lit8 v2, v1, 1
    sput v2, Lt/S;->k:I
    int-to-char v1, v1
    invoke-static {v1}, Ljava/lang/String;->valueOf(C)Ljava/lang/String;
    move-result-object v0""")
    first = Interpreter(program).execute(sl)
    second = Interpreter(program).execute(sl)
    assert first == second
    assert first.output == "A"
    assert print_smali(program.classes["Lt/S;"]) == before


def test_deterministic_time_and_stack():
    sl = _slice("""\
    invoke-static {}, Ljava/lang/System;->currentTimeMillis()J
    move-result-wide v1
    invoke-static {v1, v2}, Ljava/lang/String;->valueOf(J)Ljava/lang/String;
    move-result-object v0""")
    assert Interpreter().execute(sl).output == "1600000000000"
    sl = _slice("""\
    invoke-static {}, Ljava/lang/Thread;->currentThread()Ljava/lang/Thread;
    move-result-object v1
    invoke-virtual {v1}, Ljava/lang/Thread;->getStackTrace()[Ljava/lang/StackTraceElement;
    move-result-object v1
    const/4 v2, 1
    aget-object v1, v1, v2
    invoke-virtual {v1}, Ljava/lang/StackTraceElement;->getMethodName()Ljava/lang/String;
    move-result-object v0""")
    assert Interpreter().execute(sl).output == "f"


def test_run_until_exposes_registers(example, example_method):
    program, _ = example
    regs = Interpreter(program).run_until(example_method, 4, [0])
    assert regs[0] == 0x1337
    with pytest.raises(DalvikRuntimeError):
        Interpreter(program).run_until(example_method, 99, [0])


def _java_hash(text: str) -> int:
    h = 0
    for ch in text:
        h = (31 * h + ord(ch)) % 2**32
    return h - 2**32 if h >= 2**31 else h


@settings(max_examples=100, deadline=None)
@given(st.text(alphabet=st.characters(min_codepoint=1, max_codepoint=0xD7FF), max_size=40))
def test_string_builtins_match_python(text):
    vm = Interpreter()
    call = lambda ref, *args: vm.call(MethodRef.parse(ref), [text, *args], static=False)
    assert call("Ljava/lang/String;->hashCode()I") == _java_hash(text)
    assert call("Ljava/lang/String;->length()I") == len(text)
    assert call("Ljava/lang/String;->concat(Ljava/lang/String;)Ljava/lang/String;", "!") == text + "!"
    if text:
        assert call("Ljava/lang/String;->charAt(I)C", 0) == ord(text[0])
    assert call("Ljava/lang/String;->indexOf(I)I", ord("a")) == text.find("a")


def test_string_builder_roundtrip():
    sl = _slice("""\
    new-instance v1, Ljava/lang/StringBuilder;
    invoke-direct {v1}, Ljava/lang/StringBuilder;-><init>()V
    const-string v2, "ab"
    invoke-virtual {v1, v2}, Ljava/lang/StringBuilder;->append(Ljava/lang/String;)Ljava/lang/StringBuilder;
    const/16 v2, 0x63
    invoke-virtual {v1, v2}, Ljava/lang/StringBuilder;->append(C)Ljava/lang/StringBuilder;
    invoke-virtual {v1}, Ljava/lang/StringBuilder;->reverse()Ljava/lang/StringBuilder;
    invoke-virtual {v1}, Ljava/lang/StringBuilder;->toString()Ljava/lang/String;
    move-result-object v0""")
    assert Interpreter().execute(sl).output == "cba"


@settings(max_examples=200, deadline=None)
@given(st.integers(-2**31, 2**31 - 1), st.integers(-2**31, 2**31 - 1),
       st.sampled_from(["add-int", "sub-int", "mul-int", "div-int", "rem-int", "shl-int",
                        "shr-int", "ushr-int", "and-int", "or-int", "xor-int"]))
def test_int_binop_matches_reference(a, b, op):
    want = expected_binary(op, [a], [b])[0]
    if want is None:
        with pytest.raises(DalvikRuntimeError):
            binop(op, a, b)
    else:
        assert binop(op, a, b) == want


@settings(max_examples=200, deadline=None)
@given(st.integers(-2**63, 2**63 - 1), st.integers(-2**63, 2**63 - 1),
       st.sampled_from(["add-long", "mul-long", "div-long", "rem-long", "ushr-long"]))
def test_long_binop_matches_reference(a, b, op):
    want = expected_binary(op, [a], [b])[0]
    if want is not None:
        assert binop(op, a, b) == want


def test_reference_formulas_spot_checks():
    # hand-computed Java results
    assert expected_binary("div-int", [-7], [2]) == [-3]
    assert expected_binary("rem-int", [-7], [2]) == [-1]
    assert expected_binary("ushr-int", [-1], [28]) == [15]
    assert expected_binary("shl-int", [1], [33]) == [2]
    assert expected_binary("div-int", [-2**31], [-1]) == [-2**31]
    assert expected_binary("div-int", [1], [0]) == [None]
    assert expected_unary("int-to-char", [-1]) == [0xFFFF]
    nan = int(np.array([np.nan], np.float32).view(np.int32)[0])
    assert expected_unary("float-to-int", [nan]) == [0]
    assert litop("rsub-int", 5, 3) == -2
    assert unop("int-to-byte", 0x1FF) == -1
