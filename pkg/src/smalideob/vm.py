"""Dalvik-subset interpreter for extracted slices.

Slices run in a fresh frame shaped like their origin method.  Static calls
into the analyzed corpus are interpreted recursively; ``java.*`` core
methods come from the table in :mod:`smalideob.builtins`.  Anything touching
``Landroid/`` fails loudly rather than being stubbed.
"""

from __future__ import annotations

import enum
import math
import time
from dataclasses import dataclass

from . import opcodes as ops
from .frontend import MethodDef, MethodRef, SmaliProgram, Statement, parse_signature, type_words
from .values import (
    INT_MAX, INT_MIN, LONG_MAX, LONG_MIN, UNINIT, WIDE_HI, ArrayVal, ClassVal, ObjectVal,
    PendingString, StringBuilderVal, bits_to_double, bits_to_float, double_to_bits,
    float_to_bits, i8, i16, i32, i64, is_null, java_div, java_f2i, java_fcmp, java_fdiv,
    java_fmod, java_rem, long_to_float32, runtime_class, u16,
)


class ExecStatus(str, enum.Enum):
    OK = "Ok"
    TIMEOUT = "Timeout"
    UNSUPPORTED = "UnsupportedOpcode"
    RUNTIME_ERROR = "RuntimeError"


@dataclass(frozen=True)
class ExecBudget:
    wall_clock: float = 5.0
    max_steps: int = 10_000_000
    max_depth: int = 64


@dataclass(frozen=True)
class ExecResult:
    status: ExecStatus
    output: str | None = None
    steps: int = 0
    error_detail: str | None = None

    @property
    def ok(self) -> bool:
        return self.status is ExecStatus.OK


class VmError(Exception):
    status = ExecStatus.RUNTIME_ERROR


class Timeout(VmError):
    status = ExecStatus.TIMEOUT


class Unsupported(VmError):
    status = ExecStatus.UNSUPPORTED


class DalvikRuntimeError(VmError):
    status = ExecStatus.RUNTIME_ERROR


class _Return(Exception):
    def __init__(self, value):
        self.value = value


class _Emit(Exception):
    def __init__(self, value):
        self.value = value


class _Break(Exception):
    def __init__(self, regs):
        self.regs = regs


class _Code:
    """Statements with pre-decoded register numbers and label positions."""

    __slots__ = ("ref", "stmts", "regs", "labels", "register_count")

    def __init__(self, ref: MethodRef, stmts, labels: dict[str, int], register_count: int):
        self.ref = ref
        self.stmts = tuple(stmts)
        self.regs = tuple(tuple(int(r[1:]) for r in s.registers) for s in self.stmts)
        self.labels = labels
        self.register_count = register_count


class Frame:
    __slots__ = ("code", "regs", "pc", "result")

    def __init__(self, code: _Code):
        self.code = code
        self.regs = [UNINIT] * max(code.register_count, 1)
        self.pc = 0
        self.result = UNINIT


_ARRAY_STORE = {
    "": lambda v: v, "-wide": lambda v: v, "-object": lambda v: v,
    "-boolean": lambda v: v & 1, "-byte": i8, "-char": u16, "-short": i16,
}


def _store_for_kind(kind: str):
    return {"Z": lambda v: v & 1, "B": i8, "C": u16, "S": i16,
            "I": i32, "F": i32, "J": i64, "D": i64}.get(kind, lambda v: v)


def _int_binop(name: str, a: int, b: int, wide: bool) -> int:
    wrap = i64 if wide else i32
    bits = 63 if wide else 31
    if name == "add":
        return wrap(a + b)
    if name == "sub":
        return wrap(a - b)
    if name == "mul":
        return wrap(a * b)
    if name in ("div", "rem"):
        if b == 0:
            raise DalvikRuntimeError("ArithmeticException: divide by zero")
        return wrap(java_div(a, b) if name == "div" else java_rem(a, b))
    if name == "and":
        return a & b
    if name == "or":
        return a | b
    if name == "xor":
        return a ^ b
    if name == "shl":
        return wrap(a << (b & bits))
    if name == "shr":
        return a >> (b & bits)
    if name == "ushr":
        mask = (1 << (bits + 1)) - 1
        return wrap((a & mask) >> (b & bits))
    raise Unsupported(name)


def _float_binop(name: str, a: float, b: float) -> float:
    if name == "add":
        return a + b
    if name == "sub":
        return a - b
    if name == "mul":
        return a * b
    if name == "div":
        return java_fdiv(a, b)
    return java_fmod(a, b)


def binop(opcode: str, a: int, b: int) -> int:
    """Apply a binary arithmetic opcode to raw register bit patterns."""
    name = opcode.split("/")[0]
    op, kind = name.rsplit("-", 1)
    if kind == "int":
        return _int_binop(op, a, b, False)
    if kind == "long":
        return _int_binop(op, a, b, True)
    if kind == "float":
        return float_to_bits(_float_binop(op, bits_to_float(a), bits_to_float(b)))
    return double_to_bits(_float_binop(op, bits_to_double(a), bits_to_double(b)))


def litop(opcode: str, a: int, lit: int) -> int:
    name = opcode.split("/")[0]
    if name == "rsub-int":
        return i32(lit - a)
    return _int_binop(name[:-4], a, lit, False)


def unop(opcode: str, a: int) -> int:
    if opcode == "neg-int":
        return i32(-a)
    if opcode == "not-int":
        return i32(~a)
    if opcode == "neg-long":
        return i64(-a)
    if opcode == "not-long":
        return i64(~a)
    if opcode == "neg-float":
        return i32(a ^ (1 << 31))
    if opcode == "neg-double":
        return i64(a ^ (1 << 63))
    if opcode == "int-to-long":
        return a
    if opcode == "int-to-float":
        return float_to_bits(float(a))
    if opcode == "int-to-double":
        return double_to_bits(float(a))
    if opcode == "long-to-int":
        return i32(a)
    if opcode == "long-to-float":
        return float_to_bits(long_to_float32(a))
    if opcode == "long-to-double":
        return double_to_bits(float(a))
    if opcode == "float-to-int":
        return java_f2i(bits_to_float(a), INT_MIN, INT_MAX)
    if opcode == "float-to-long":
        return java_f2i(bits_to_float(a), LONG_MIN, LONG_MAX)
    if opcode == "float-to-double":
        return double_to_bits(bits_to_float(a))
    if opcode == "double-to-int":
        return java_f2i(bits_to_double(a), INT_MIN, INT_MAX)
    if opcode == "double-to-long":
        return java_f2i(bits_to_double(a), LONG_MIN, LONG_MAX)
    if opcode == "double-to-float":
        return float_to_bits(bits_to_double(a))
    if opcode == "int-to-byte":
        return i8(a)
    if opcode == "int-to-char":
        return u16(a)
    if opcode == "int-to-short":
        return i16(a)
    raise Unsupported(opcode)


def _is_wide_binop(opcode: str) -> bool:
    kind = opcode.split("/")[0].rsplit("-", 1)[1]
    return kind in ("long", "double")


_IF_TESTS = {
    "eq": lambda a, b: a == b, "ne": lambda a, b: a != b, "lt": lambda a, b: a < b,
    "ge": lambda a, b: a >= b, "gt": lambda a, b: a > b, "le": lambda a, b: a <= b,
}


def _ref_eq(a, b) -> bool:
    if isinstance(a, int) and isinstance(b, int):
        return a == b
    return a is b


class Interpreter:
    """One execution context: static state, call stack and budget counters."""

    def __init__(self, program: SmaliProgram | None = None, budget: ExecBudget = ExecBudget(),
                 clock=time.monotonic):
        from . import builtins

        self.program = program or SmaliProgram()
        self.budget = budget
        self.clock = clock
        self.builtins = builtins.BUILTINS
        self.builtin_statics = builtins.STATIC_FIELDS
        self.statics: dict[tuple[str, str], object] = {}
        self.initialized: set[str] = set()
        self.stack: list[MethodRef] = []
        self.steps = 0
        self.deadline = math.inf
        self._codes: dict[int, tuple[MethodDef, _Code]] = {}
        self._breakpoint: tuple[MethodRef, int] | None = None
        self._handlers = self._build_handlers()

    # -- public entry points -------------------------------------------------

    def execute(self, slice_) -> ExecResult:
        """Run an emitted slice and report what it printed."""
        self._start()
        code = _Code(slice_.origin, slice_.statements, slice_.labels, slice_.register_count)
        self.stack = [slice_.origin]
        try:
            self._run(Frame(code))
        except _Emit as emitted:
            value = emitted.value
            if not isinstance(value, str):
                return ExecResult(ExecStatus.RUNTIME_ERROR, None, self.steps,
                                  f"TypeError: emitted value is {runtime_class(value)}, not String")
            return ExecResult(ExecStatus.OK, value, self.steps)
        except _Return:
            return ExecResult(ExecStatus.RUNTIME_ERROR, None, self.steps,
                              "slice returned before emitting")
        except VmError as exc:
            return ExecResult(exc.status, None, self.steps, f"{type(exc).__name__}: {exc}")
        except RecursionError:
            return ExecResult(ExecStatus.RUNTIME_ERROR, None, self.steps, "host recursion limit")
        return ExecResult(ExecStatus.RUNTIME_ERROR, None, self.steps, "no output emitted")

    def call(self, ref: MethodRef, args: list, static: bool = True) -> object:
        """Invoke a corpus or built-in method with Java-level arguments."""
        self._start()
        self.stack = []
        try:
            return self._invoke_ref("invoke-static" if static else "invoke-direct", ref, args)
        except _Return as ret:
            return ret.value

    def run_until(self, method: MethodDef, stmt_index: int, args: list | None = None) -> list:
        """Interpret ``method`` and return its registers right after ``stmt_index`` first completes."""
        self._start()
        self._breakpoint = (method.ref, stmt_index)
        self.stack = [method.ref]
        try:
            self._run(self._frame_for(method, args or []))
        except _Break as hit:
            return hit.regs
        except _Return:
            pass
        finally:
            self._breakpoint = None
        raise DalvikRuntimeError(f"statement {stmt_index} never completed")

    def run_snippet(self, statements, register_count: int, regs: dict[int, object]) -> list:
        """Execute bare statements (no labels) and return the final register file."""
        self._start()
        code = _Code(MethodRef("Lsnippet;", "run", "()V"), statements, {}, register_count)
        frame = Frame(code)
        for k, v in regs.items():
            frame.regs[k] = v
        try:
            self._run(frame)
        except _Return:
            pass
        return frame.regs

    # -- machinery -----------------------------------------------------------

    def _start(self) -> None:
        self.steps = 0
        self.deadline = self.clock() + self.budget.wall_clock

    def code_for(self, method: MethodDef) -> _Code:
        cached = self._codes.get(id(method))
        if cached is not None and cached[0] is method:
            return cached[1]
        code = _Code(method.ref, method.statements, method.labels, method.register_count)
        self._codes[id(method)] = (method, code)
        return code

    def _frame_for(self, method: MethodDef, args: list) -> Frame:
        frame = Frame(self.code_for(method))
        params, _ = parse_signature(method.signature)
        types = ([] if method.is_static else ["L"]) + params
        if len(types) != len(args):
            raise DalvikRuntimeError(f"{method.ref}: expected {len(types)} args, got {len(args)}")
        k = method.register_count - method.param_words
        for t, v in zip(types, args):
            frame.regs[k] = v
            if type_words(t) == 2:
                frame.regs[k + 1] = WIDE_HI
            k += type_words(t)
        return frame

    def _run(self, frame: Frame):
        code = frame.code
        stmts = code.stmts
        handlers = self._handlers
        budget = self.budget
        bp = self._breakpoint
        n = len(stmts)
        while True:
            pc = frame.pc
            if pc >= n:
                raise DalvikRuntimeError(f"{code.ref}: fell off the end of the code")
            stmt = stmts[pc]
            self.steps += 1
            if self.steps > budget.max_steps:
                self.steps = budget.max_steps
                raise Timeout(f"step budget of {budget.max_steps} exhausted")
            if not self.steps & 0xFF and self.clock() > self.deadline:
                raise Timeout(f"wall-clock budget of {budget.wall_clock}s exhausted")
            handler = handlers.get(stmt.opcode)
            if handler is None:
                raise Unsupported(f"opcode {stmt.opcode}")
            nxt = handler(frame, stmt, code.regs[pc])
            frame.pc = pc + 1 if nxt is None else nxt
            if bp is not None and bp[1] == stmt.index and bp[0] == code.ref:
                raise _Break(list(frame.regs))

    def _get(self, frame: Frame, k: int):
        v = frame.regs[k]
        if v is UNINIT or v is WIDE_HI:
            raise DalvikRuntimeError(f"read of uninitialized register v{k} at "
                                     f"{frame.code.ref} pc={frame.pc}")
        return v

    def _int(self, frame: Frame, k: int) -> int:
        v = self._get(frame, k)
        if not isinstance(v, int):
            raise DalvikRuntimeError(f"v{k} holds a reference where a primitive is expected")
        return v

    def _set(self, frame: Frame, k: int, v) -> None:
        frame.regs[k] = v

    def _set_wide(self, frame: Frame, k: int, v) -> None:
        frame.regs[k] = v
        frame.regs[k + 1] = WIDE_HI

    def _target(self, frame: Frame, label: str) -> int:
        return frame.code.labels[label]

    # -- class state ---------------------------------------------------------

    def ensure_initialized(self, desc: str) -> None:
        if desc in self.initialized:
            return
        self.initialized.add(desc)
        cls = self.program.classes.get(desc)
        if cls is None:
            return
        if cls.super_descriptor:
            self.ensure_initialized(cls.super_descriptor)
        for f in cls.fields:
            if f.is_static:
                self.statics[(desc, f.name)] = f.initial if f.initial is not None else 0
        for m in cls.methods:
            if m.name == "<clinit>":
                self._call_method(m, [])

    def _static_key(self, ref) -> tuple[str, str]:
        desc = ref.cls
        while desc in self.program.classes:
            cls = self.program.classes[desc]
            if any(f.name == ref.name and f.is_static for f in cls.fields):
                return desc, ref.name
            desc = cls.super_descriptor
        return ref.cls, ref.name

    # -- invocation ----------------------------------------------------------

    def _call_method(self, method: MethodDef, args: list):
        if len(self.stack) >= self.budget.max_depth:
            raise DalvikRuntimeError(f"call depth exceeds {self.budget.max_depth}")
        frame = self._frame_for(method, args)
        self.stack.append(method.ref)
        try:
            self._run(frame)
        except _Return as ret:
            return ret.value
        finally:
            self.stack.pop()
        return None

    def _collect_args(self, frame: Frame, stmt: Statement, regnums) -> list:
        ref = stmt.method_ref
        params, _ = parse_signature(ref.signature)
        types = ([] if ops.base_name(stmt.opcode) == "invoke-static" else ["L"]) + params
        args, k = [], 0
        for t in types:
            if k >= len(regnums):
                raise DalvikRuntimeError(f"{ref}: too few argument registers")
            args.append(self._get(frame, regnums[k]))
            k += type_words(t)
        return args

    def _invoke_ref(self, kind: str, ref: MethodRef, args: list):
        base = ops.base_name(kind)
        if base == "invoke-static":
            method = self.program.resolve_method(ref)
            if method is not None:
                self.ensure_initialized(ref.cls)
                return self._call_method(method, args)
            return self._builtin(ref, args)
        receiver = args[0] if args else 0
        if is_null(receiver):
            raise DalvikRuntimeError(f"NullPointerException: {ref} on null receiver")
        if base in ("invoke-virtual", "invoke-interface") and isinstance(receiver, ObjectVal):
            method = self.program.resolve_method(MethodRef(receiver.cls, ref.name, ref.signature))
            if method is not None:
                return self._call_method(method, args)
        method = self.program.resolve_method(ref)
        if method is not None:
            return self._call_method(method, args)
        return self._builtin(ref, args)

    def _builtin(self, ref: MethodRef, args: list):
        key = str(ref)
        fn = self.builtins.get(key)
        if fn is None and args and not isinstance(args[0], int):
            # virtual dispatch on a modelled receiver type
            alt = f"{runtime_class(args[0])}->{ref.name}{ref.signature}"
            fn = self.builtins.get(alt)
            if fn is None:
                fn = self.builtins.get(f"Ljava/lang/Object;->{ref.name}{ref.signature}")
        if fn is None:
            if ref.cls.startswith("Landroid/"):
                raise Unsupported(f"Android API {ref} is not modelled")
            if ref.cls in self.program.classes:
                raise DalvikRuntimeError(f"NoSuchMethodError: {ref}")
            raise Unsupported(f"unmodelled method {ref}")
        return fn(self, args)

    # -- handlers ------------------------------------------------------------

    def _build_handlers(self):
        h = {}

        def reg(*names):
            def deco(fn):
                for name in names:
                    h[name] = fn
                return fn
            return deco

        get, geti = self._get, self._int

        @reg("nop")
        def _nop(f, s, r):
            return None

        @reg("move", "move/from16", "move/16", "move-object", "move-object/from16", "move-object/16")
        def _move(f, s, r):
            f.regs[r[0]] = get(f, r[1])

        @reg("move-wide", "move-wide/from16", "move-wide/16")
        def _move_wide(f, s, r):
            self._set_wide(f, r[0], get(f, r[1]))

        @reg("move-result", "move-result-object")
        def _move_result(f, s, r):
            if f.result is UNINIT:
                raise DalvikRuntimeError("move-result without a preceding result")
            f.regs[r[0]] = f.result
            f.result = UNINIT

        @reg("move-result-wide")
        def _move_result_wide(f, s, r):
            if f.result is UNINIT:
                raise DalvikRuntimeError("move-result-wide without a preceding result")
            self._set_wide(f, r[0], f.result)
            f.result = UNINIT

        @reg("return-void", "return-void-barrier", "return-void-no-barrier")
        def _return_void(f, s, r):
            raise _Return(None)

        @reg("return", "return-object", "return-wide")
        def _return(f, s, r):
            raise _Return(get(f, r[0]))

        @reg(ops.EMIT)
        def _emit(f, s, r):
            raise _Emit(get(f, r[0]))

        @reg("const/4", "const/16", "const", "const/high16")
        def _const(f, s, r):
            f.regs[r[0]] = i32(s.literal)

        @reg("const-wide/16", "const-wide/32", "const-wide", "const-wide/high16")
        def _const_wide(f, s, r):
            self._set_wide(f, r[0], i64(s.literal))

        @reg("const-string", "const-string/jumbo")
        def _const_string(f, s, r):
            f.regs[r[0]] = s.literal

        @reg("const-class")
        def _const_class(f, s, r):
            f.regs[r[0]] = ClassVal(s.type_ref)

        @reg("monitor-enter", "monitor-exit")
        def _monitor(f, s, r):
            if is_null(get(f, r[0])):
                raise DalvikRuntimeError("NullPointerException: monitor on null")

        @reg("check-cast")
        def _check_cast(f, s, r):
            v = get(f, r[0])
            if not is_null(v) and not self.instance_of(v, s.type_ref):
                raise DalvikRuntimeError(
                    f"ClassCastException: {runtime_class(v)} cannot be cast to {s.type_ref}")

        @reg("instance-of")
        def _instance_of(f, s, r):
            v = get(f, r[1])
            f.regs[r[0]] = int(not is_null(v) and self.instance_of(v, s.type_ref))

        @reg("array-length")
        def _array_length(f, s, r):
            f.regs[r[0]] = len(self._array(f, r[1]).data)

        @reg("new-instance")
        def _new_instance(f, s, r):
            f.regs[r[0]] = self.new_instance(s.type_ref)

        @reg("new-array")
        def _new_array(f, s, r):
            size = geti(f, r[1])
            if size < 0:
                raise DalvikRuntimeError(f"NegativeArraySizeException: {size}")
            if size > 50_000_000:
                raise DalvikRuntimeError(f"OutOfMemoryError: array of {size}")
            f.regs[r[0]] = ArrayVal(s.type_ref[1:], [0] * size)

        @reg("filled-new-array", "filled-new-array/range")
        def _filled_new_array(f, s, r):
            kind = s.type_ref[1:]
            f.result = ArrayVal(kind, [get(f, k) for k in r])

        @reg("fill-array-data")
        def _fill_array_data(f, s, r):
            arr = self._array(f, r[0])
            width, *values = s.payload
            if len(values) > len(arr.data):
                raise DalvikRuntimeError("ArrayIndexOutOfBoundsException: fill-array-data")
            store = _store_for_kind(arr.kind)
            arr.data[:len(values)] = [store(v) for v in values]

        @reg("throw")
        def _throw(f, s, r):
            v = get(f, r[0])
            raise DalvikRuntimeError(f"uncaught exception {runtime_class(v)}")

        @reg("goto", "goto/16", "goto/32")
        def _goto(f, s, r):
            return f.code.labels[s.branch_targets[0]]

        @reg("packed-switch", "sparse-switch")
        def _switch(f, s, r):
            v = geti(f, r[0])
            for key, label in zip(s.payload, s.branch_targets):
                if key == v:
                    return f.code.labels[label]
            return None

        for cmp_name in ("cmpl-float", "cmpg-float", "cmpl-double", "cmpg-double", "cmp-long"):
            @reg(cmp_name)
            def _cmp(f, s, r, _n=cmp_name):
                a, b = geti(f, r[1]), geti(f, r[2])
                if _n == "cmp-long":
                    f.regs[r[0]] = (a > b) - (a < b)
                    return
                conv = bits_to_float if _n.endswith("float") else bits_to_double
                f.regs[r[0]] = java_fcmp(conv(a), conv(b), -1 if _n.startswith("cmpl") else 1)

        for test, fn in _IF_TESTS.items():
            @reg(f"if-{test}")
            def _if(f, s, r, _t=test, _fn=fn):
                a, b = get(f, r[0]), get(f, r[1])
                if _t in ("eq", "ne"):
                    hit = _ref_eq(a, b) == (_t == "eq")
                else:
                    hit = _fn(geti(f, r[0]), geti(f, r[1]))
                return f.code.labels[s.branch_targets[0]] if hit else None

            @reg(f"if-{test}z")
            def _ifz(f, s, r, _t=test, _fn=fn):
                a = get(f, r[0])
                if not isinstance(a, int):
                    a = 1  # non-null reference
                return f.code.labels[s.branch_targets[0]] if _fn(a, 0) else None

        for sfx in ops.ARRAY_SUFFIXES:
            @reg("aget" + sfx)
            def _aget(f, s, r, _sfx=sfx):
                arr = self._array(f, r[1])
                i = geti(f, r[2])
                if not 0 <= i < len(arr.data):
                    raise DalvikRuntimeError(f"ArrayIndexOutOfBoundsException: {i}")
                if _sfx == "-wide":
                    self._set_wide(f, r[0], arr.data[i])
                else:
                    f.regs[r[0]] = arr.data[i]

            @reg("aput" + sfx)
            def _aput(f, s, r, _sfx=sfx):
                arr = self._array(f, r[1])
                i = geti(f, r[2])
                if not 0 <= i < len(arr.data):
                    raise DalvikRuntimeError(f"ArrayIndexOutOfBoundsException: {i}")
                v = get(f, r[0])
                arr.data[i] = _ARRAY_STORE[_sfx](v) if isinstance(v, int) else v

            @reg("iget" + sfx, "iget" + sfx + "-volatile")
            def _iget(f, s, r, _sfx=sfx):
                obj = get(f, r[1])
                if is_null(obj):
                    raise DalvikRuntimeError(f"NullPointerException: iget {s.field_ref}")
                if not isinstance(obj, ObjectVal):
                    raise Unsupported(f"instance field {s.field_ref} on {runtime_class(obj)}")
                v = obj.fields.get(s.field_ref.name, 0)
                if _sfx == "-wide":
                    self._set_wide(f, r[0], v)
                else:
                    f.regs[r[0]] = v

            @reg("iput" + sfx, "iput" + sfx + "-volatile")
            def _iput(f, s, r, _sfx=sfx):
                obj = get(f, r[1])
                if is_null(obj):
                    raise DalvikRuntimeError(f"NullPointerException: iput {s.field_ref}")
                if not isinstance(obj, ObjectVal):
                    raise Unsupported(f"instance field {s.field_ref} on {runtime_class(obj)}")
                v = get(f, r[0])
                obj.fields[s.field_ref.name] = _ARRAY_STORE[_sfx](v) if isinstance(v, int) else v

            @reg("sget" + sfx, "sget" + sfx + "-volatile")
            def _sget(f, s, r, _sfx=sfx):
                v = self.get_static(s.field_ref)
                if _sfx == "-wide":
                    self._set_wide(f, r[0], v)
                else:
                    f.regs[r[0]] = v

            @reg("sput" + sfx, "sput" + sfx + "-volatile")
            def _sput(f, s, r, _sfx=sfx):
                v = get(f, r[0])
                self.put_static(s.field_ref, _ARRAY_STORE[_sfx](v) if isinstance(v, int) else v)

        for kind in ("virtual", "super", "direct", "static", "interface"):
            @reg(f"invoke-{kind}", f"invoke-{kind}/range")
            def _invoke(f, s, r):
                args = self._collect_args(f, s, r)
                result = self._invoke_ref(s.opcode, s.method_ref, args)
                if s.method_ref.name == "<init>" and s.method_ref.cls == "Ljava/lang/String;":
                    # strings are immutable values: rebind every alias of the placeholder
                    pending = args[0]
                    for k, v in enumerate(f.regs):
                        if v is pending:
                            f.regs[k] = result
                    f.result = UNINIT
                    return
                f.result = result if s.method_ref.return_type != "V" else UNINIT

        for name in ops.UNARY_OPS:
            @reg(name)
            def _unary(f, s, r, _n=name):
                v = unop(_n, geti(f, r[1]))
                if _n in ("neg-long", "not-long", "neg-double", "int-to-long", "int-to-double",
                          "float-to-long", "float-to-double", "long-to-double", "double-to-long"):
                    self._set_wide(f, r[0], v)
                else:
                    f.regs[r[0]] = v

        for name in ops.BINARY_OPS:
            wide = _is_wide_binop(name)

            @reg(name)
            def _binary(f, s, r, _n=name, _w=wide):
                v = binop(_n, geti(f, r[1]), geti(f, r[2]))
                if _w:
                    self._set_wide(f, r[0], v)
                else:
                    f.regs[r[0]] = v

            @reg(name + "/2addr")
            def _binary2(f, s, r, _n=name, _w=wide):
                v = binop(_n, geti(f, r[0]), geti(f, r[1]))
                if _w:
                    self._set_wide(f, r[0], v)
                else:
                    f.regs[r[0]] = v

        for name in ops.LIT16_OPS + ops.LIT8_OPS:
            @reg(name)
            def _lit(f, s, r, _n=name):
                f.regs[r[0]] = litop(_n, geti(f, r[1]), s.literal)

        return h

    # -- object helpers ------------------------------------------------------

    def _array(self, frame: Frame, k: int) -> ArrayVal:
        v = self._get(frame, k)
        if is_null(v):
            raise DalvikRuntimeError("NullPointerException: array is null")
        if not isinstance(v, ArrayVal):
            raise DalvikRuntimeError(f"v{k} is not an array")
        return v

    def new_instance(self, desc: str):
        if desc == "Ljava/lang/String;":
            return PendingString()
        if desc in ("Ljava/lang/StringBuilder;", "Ljava/lang/StringBuffer;"):
            return StringBuilderVal(desc)
        if desc in self.program.classes:
            self.ensure_initialized(desc)
            return ObjectVal(desc)
        if desc.startswith("Landroid/"):
            raise Unsupported(f"Android class {desc} is not modelled")
        return ObjectVal(desc)

    def get_static(self, ref):
        if ref.cls in self.program.classes:
            self.ensure_initialized(ref.cls)
            return self.statics.get(self._static_key(ref), 0)
        key = str(ref)
        if key in self.builtin_statics:
            return self.builtin_statics[key]()
        if ref.cls.startswith("Landroid/"):
            raise Unsupported(f"Android field {ref} is not modelled")
        raise Unsupported(f"unmodelled static field {ref}")

    def put_static(self, ref, value) -> None:
        if ref.cls in self.program.classes:
            self.ensure_initialized(ref.cls)
            self.statics[self._static_key(ref)] = value
            return
        raise Unsupported(f"write to external static field {ref}")

    def instance_of(self, v, desc: str) -> bool:
        if desc == "Ljava/lang/Object;":
            return True
        actual = runtime_class(v)
        if actual == desc:
            return True
        if desc == "Ljava/lang/CharSequence;":
            return actual in ("Ljava/lang/String;", "Ljava/lang/StringBuilder;",
                              "Ljava/lang/StringBuffer;")
        if isinstance(v, ArrayVal):
            return desc.startswith("[") and (desc[1:] == v.kind or desc == "[Ljava/lang/Object;"
                                             and v.kind[0] in "L[")
        cur = actual
        while cur in self.program.classes:
            cls = self.program.classes[cur]
            if desc in cls.interfaces:
                return True
            cur = cls.super_descriptor
            if cur == desc:
                return True
        return False

    def stack_trace(self) -> list[MethodRef]:
        """Innermost-first view of the interpreted call stack."""
        return list(reversed(self.stack))


def execute(slice_, program: SmaliProgram, budget: ExecBudget = ExecBudget()) -> ExecResult:
    """Execute an emitted slice in a fresh interpreter."""
    return Interpreter(program, budget).execute(slice_)
