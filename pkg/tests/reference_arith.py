"""Dalvik arithmetic written against numpy fixed-width types.

This is deliberately a different formulation from the interpreter: numpy
wraps on overflow by itself, ``fmod`` gives truncated remainders, and
float32 arithmetic is done natively instead of in double precision.
"""

from __future__ import annotations

import numpy as np

from smalideob import opcodes as ops
from smalideob.frontend import Statement
from smalideob.values import WIDE_HI
from smalideob.vm import DalvikRuntimeError, Interpreter

I32 = np.iinfo(np.int32)
I64 = np.iinfo(np.int64)

_TYPES = {"int": (np.int32, np.uint32), "long": (np.int64, np.uint64),
          "float": (np.float32, np.int32), "double": (np.float64, np.int64)}


def _kind(opcode: str) -> str:
    name = opcode.split("/")[0]
    if name == "rsub-int":
        return "int"
    return name.rsplit("-", 1)[1]


def _int_op(name: str, a: np.ndarray, b: np.ndarray, unsigned):
    bits = a.dtype.itemsize * 8
    if name == "add":
        return a + b
    if name == "sub":
        return a - b
    if name == "rsub":
        return b - a
    if name == "mul":
        return a * b
    if name == "and":
        return a & b
    if name == "or":
        return a | b
    if name == "xor":
        return a ^ b
    sh = b & (bits - 1)
    if name == "shl":
        return np.left_shift(a, sh)
    if name == "shr":
        return np.right_shift(a, sh)
    if name == "ushr":
        return np.right_shift(a.view(unsigned), sh.astype(unsigned)).view(a.dtype)
    safe = np.where(b == 0, 1, b).astype(a.dtype)
    rem = np.fmod(a, safe)
    if name == "rem":
        return rem
    if name == "div":
        return (a - rem) // safe
    raise KeyError(name)


def _float_op(name: str, a: np.ndarray, b: np.ndarray):
    return {"add": np.add, "sub": np.subtract, "mul": np.multiply, "div": np.divide,
            "rem": np.fmod}[name](a, b)


def expected_binary(opcode: str, a: list[int], b: list[int]) -> list[int | None]:
    """Raw results for each pair; None where Java throws ArithmeticException."""
    kind = _kind(opcode)
    name = opcode.split("/")[0]
    name = "rsub" if name == "rsub-int" else name.rsplit("-", 1)[0]
    dtype, other = _TYPES[kind]
    with np.errstate(all="ignore"):
        if kind in ("int", "long"):
            x = np.array(a, dtype)
            y = np.array(b, dtype)
            out = _int_op(name, x, y, other).astype(np.int64)
            zero = (y == 0) & (name in ("div", "rem"))
        else:
            x = np.array(a, other).view(dtype)
            y = np.array(b, other).view(dtype)
            out = _float_op(name, x, y).view(other).astype(np.int64)
            zero = np.zeros(len(a), bool)
    return [None if z else int(v) for v, z in zip(out, zero)]


def _f2i(x: np.ndarray, info) -> np.ndarray:
    # NaN -> 0, saturate at the target range, otherwise round toward zero
    hi = float(info.max)
    lo = float(info.min)
    clipped = np.where(np.isnan(x), 0.0, np.clip(x.astype(np.float64), lo, hi))
    t = np.trunc(clipped)
    res = np.where(t >= hi, info.max, np.where(t <= lo, info.min, 0))
    inner = (t > lo) & (t < hi)
    res = np.where(inner, t.astype(np.float64).astype(np.int64, casting="unsafe"), res)
    return res.astype(np.int64)


def expected_unary(opcode: str, a: list[int]) -> list[int]:
    src, dst = opcode.split("-to-") if "-to-" in opcode else (None, None)
    with np.errstate(all="ignore"):
        if src is None:
            name, kind = opcode.split("-")
            dtype, other = _TYPES[kind]
            if kind in ("int", "long"):
                x = np.array(a, dtype)
                out = -x if name == "neg" else ~x
            else:
                out = np.negative(np.array(a, other).view(dtype)).view(other)
            return [int(v) for v in out.astype(np.int64)]
        sdtype, sother = _TYPES[src]
        x = np.array(a, sdtype) if src in ("int", "long") else np.array(a, sother).view(sdtype)
        if dst == "byte":
            out = x.astype(np.int8)
        elif dst == "short":
            out = x.astype(np.int16)
        elif dst == "char":
            out = x.astype(np.uint16)
        elif dst in ("int", "long") and src in ("float", "double"):
            out = _f2i(x, I32 if dst == "int" else I64)
        elif dst in ("int", "long"):
            out = x.astype(_TYPES[dst][0])
        else:
            ddtype, dother = _TYPES[dst]
            out = x.astype(ddtype).view(dother)
        return [int(v) for v in np.asarray(out).astype(np.int64)]


def same(kind: str, got: int, want: int) -> bool:
    """Bitwise equality, with any NaN matching any NaN."""
    if got == want:
        return True
    if kind == "float":
        nan = lambda v: (v & 0x7F800000) == 0x7F800000 and v & 0x7FFFFF
        return bool(nan(got & 0xFFFFFFFF) and nan(want & 0xFFFFFFFF))
    if kind == "double":
        nan = lambda v: (v & 0x7FF0000000000000) == 0x7FF0000000000000 and v & 0xFFFFFFFFFFFFF
        return bool(nan(got & 0xFFFFFFFFFFFFFFFF) and nan(want & 0xFFFFFFFFFFFFFFFF))
    return False


def operand_sample(rng: np.random.Generator, kind: str, n: int) -> list[int]:
    """Mix of edge values, small values and uniform bit patterns."""
    if kind in ("int", "float"):
        info, other = I32, np.int32
    else:
        info, other = I64, np.int64
    edges = [0, 1, -1, 2, info.min, info.max, info.min + 1, info.max - 1]
    if kind in ("float", "double"):
        ftype = np.float32 if kind == "float" else np.float64
        specials = np.array([0.0, -0.0, 1.0, -1.0, np.inf, -np.inf, np.nan, 0.5, 1e30, -3.5,
                             np.finfo(ftype).max, np.finfo(ftype).tiny], ftype)
        edges = [int(v) for v in specials.view(other)]
    out = []
    for _ in range(n):
        r = rng.random()
        if r < 0.15:
            out.append(int(rng.choice(edges)))
        elif r < 0.45:
            if kind in ("float", "double"):
                ftype = np.float32 if kind == "float" else np.float64
                v = np.array([rng.normal(0, 10.0 ** rng.integers(-3, 12))], ftype)
                out.append(int(v.view(other)[0]))
            else:
                out.append(int(rng.integers(-100, 100)))
        else:
            out.append(int(rng.integers(info.min, info.max, endpoint=True)))
    return out


def literal_sample(rng: np.random.Generator, opcode: str, n: int) -> list[int]:
    lo, hi = (-128, 127) if opcode.endswith("lit8") else (-32768, 32767)
    return [int(v) for v in rng.integers(lo, hi, size=n, endpoint=True)]


# ---------------------------------------------------------------------------
# running one opcode through the interpreter


def _wide(kind: str) -> bool:
    return kind in ("long", "double")


def run_binary(vm: Interpreter, opcode: str, a: int, b: int) -> int | None:
    kind = _kind(opcode)
    w = 2 if _wide(kind) else 1
    regs = {}
    if opcode.endswith("/2addr"):
        stmt = Statement(0, opcode, ("v0", f"v{2 * w}"))
        regs[0] = a
        regs[2 * w] = b
    else:
        stmt = Statement(0, opcode, ("v0", f"v{2 * w}", f"v{4 * w}"))
        regs[2 * w] = a
        regs[4 * w] = b
    if w == 2:
        regs.update({k + 1: WIDE_HI for k in list(regs)})
    # shift counts are always a single int register
    if opcode.startswith(("shl-long", "shr-long", "ushr-long")):
        regs.pop(4 * w + 1 if not opcode.endswith("2addr") else 2 * w + 1, None)
    try:
        return vm.run_snippet([stmt, Statement(1, "return-void")], 10, regs)[0]
    except DalvikRuntimeError:
        return None


def run_literal(vm: Interpreter, opcode: str, a: int, lit: int) -> int | None:
    stmt = Statement(0, opcode, ("v0", "v1"), literal=lit)
    try:
        return vm.run_snippet([stmt, Statement(1, "return-void")], 4, {1: a})[0]
    except DalvikRuntimeError:
        return None


def run_unary(vm: Interpreter, opcode: str, a: int) -> int:
    src = opcode.split("-to-")[0] if "-to-" in opcode else opcode.split("-")[1]
    regs = {2: a}
    if _wide(src):
        regs[3] = WIDE_HI
    stmt = Statement(0, opcode, ("v0", "v2"))
    return vm.run_snippet([stmt, Statement(1, "return-void")], 6, regs)[0]


def unary_kinds(opcode: str) -> tuple[str, str]:
    if "-to-" in opcode:
        src, dst = opcode.split("-to-")
        return src, dst
    kind = opcode.split("-")[1]
    return kind, kind


BINARY = tuple(sorted(ops.BINARY_OPS)) + tuple(sorted(op + "/2addr" for op in ops.BINARY_OPS))
LITERAL = tuple(sorted(ops.LIT8_OPS + ops.LIT16_OPS))
UNARY = tuple(sorted(ops.UNARY_OPS))
