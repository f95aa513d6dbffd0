"""Ground-truth corpus generation by applying known string-obfuscation schemes.

Every non-empty ``const-string`` in a non-library class is replaced by its
ciphertext, followed by key-recovery code, optional opaque conditionals and
a call to a generated decoder.  The original plaintexts are recorded so the
deobfuscation pipeline can be scored exactly.

All decoders take their key from a constant XOR-ed with the result of a
static helper ``T()I`` that always returns the same value, so keys never
appear verbatim in the transformed method.
"""

from __future__ import annotations

import enum
import json
import os
import random
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Mapping

from . import opcodes as ops
from .frontend import (
    MethodDef, MethodRef, SmaliClass, SmaliProgram, Statement, parse_smali, write_program,
)
from .scanner import DEFAULT_EXCLUSIONS, is_excluded_class
from .values import from_units, to_units

MAX_JUNK = 5
SCRATCH = 4
TRUTH_FILE = "ground_truth.jsonl"

_STRING = "Ljava/lang/String;"


class SchemeKind(str, enum.Enum):
    XOR_TWO_KEYS = "XorTwoKeys"
    CAESAR_SHIFT = "CaesarShift"
    BYTE_ARRAY_DECODE = "ByteArrayDecode"
    STATIC_TABLE_LOOKUP = "StaticTableLookup"


@dataclass(frozen=True)
class ObfuscationScheme:
    """A transform family plus optional fixed key material.

    ``params`` keys: ``k1``/``k2`` (XorTwoKeys), ``shift`` (CaesarShift),
    ``key`` (ByteArrayDecode, StaticTableLookup).  Missing keys are drawn
    per literal from the seed.
    """

    kind: SchemeKind
    params: Mapping[str, int] = field(default_factory=dict)
    junk_conditionals: int = 0

    def __post_init__(self):
        object.__setattr__(self, "kind", SchemeKind(self.kind))
        if not 0 <= self.junk_conditionals <= MAX_JUNK:
            raise ValueError(f"junk_conditionals must be in [0, {MAX_JUNK}]")

    def draw_keys(self, rng: random.Random) -> dict[str, int]:
        if self.kind is SchemeKind.XOR_TWO_KEYS:
            keys = {"k1": rng.randint(1, 127), "k2": rng.randint(1, 127)}
        elif self.kind is SchemeKind.CAESAR_SHIFT:
            keys = {"shift": rng.randint(1, 94)}
        elif self.kind is SchemeKind.BYTE_ARRAY_DECODE:
            keys = {"key": rng.randint(1, 255)}
        else:
            keys = {"key": rng.randint(0, 999)}
        keys.update(self.params)
        return keys


# ---------------------------------------------------------------------------
# reference transforms


def xor_two_keys(text: str, k1: int, k2: int) -> str:
    """Per-character XOR with the low 7 bits of alternating keys (self-inverse)."""
    a, b = k1 & 0x7F, k2 & 0x7F
    return "".join(chr(ord(c) ^ (a if i % 2 == 0 else b)) for i, c in enumerate(text))


def caesar_encode(text: str, shift: int) -> str:
    return "".join(chr((ord(c) - 32 + shift) % 95 + 32) if 32 <= ord(c) <= 126 else c
                   for c in text)


def caesar_decode(text: str, shift: int) -> str:
    return caesar_encode(text, -shift)


def bytes_encode(text: str, key: int) -> str:
    data = from_units(text).encode("utf-8")
    return "".join(f"{(b ^ key) & 0xFF:02x}" for b in data)


def bytes_decode(hex_text: str, key: int) -> str:
    data = bytes((int(hex_text[i:i + 2], 16) ^ key) & 0xFF for i in range(0, len(hex_text), 2))
    return to_units(data.decode("utf-8", errors="replace"))


def to_base36(n: int) -> str:
    digits = "0123456789abcdefghijklmnopqrstuvwxyz"
    out = ""
    while True:
        n, d = divmod(n, 36)
        out = digits[d] + out
        if not n:
            return out


def encode(kind: SchemeKind, plain: str, keys: Mapping[str, int], index: int = 0) -> str:
    """Ciphertext literal for ``plain``; ``index`` is the table slot for StaticTableLookup."""
    if kind is SchemeKind.XOR_TWO_KEYS:
        return xor_two_keys(plain, keys["k1"], keys["k2"])
    if kind is SchemeKind.CAESAR_SHIFT:
        return caesar_encode(plain, keys["shift"])
    if kind is SchemeKind.BYTE_ARRAY_DECODE:
        return bytes_encode(plain, keys["key"])
    return to_base36(index + keys["key"])


def decode(kind: SchemeKind, cipher: str, keys: Mapping[str, int], table: list[str] = ()) -> str:
    if kind is SchemeKind.XOR_TWO_KEYS:
        return xor_two_keys(cipher, keys["k1"], keys["k2"])
    if kind is SchemeKind.CAESAR_SHIFT:
        return caesar_decode(cipher, keys["shift"])
    if kind is SchemeKind.BYTE_ARRAY_DECODE:
        return bytes_decode(cipher, keys["key"])
    return table[int(cipher, 36) - keys["key"]]


# ---------------------------------------------------------------------------
# ground truth


@dataclass
class GroundTruth:
    """Plaintext per transformed literal, keyed by (class, method, statement index)."""

    entries: dict[tuple[str, str, int], str] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.entries)

    def __getitem__(self, key: tuple[str, str, int]) -> str:
        return self.entries[key]

    def get(self, key, default=None):
        return self.entries.get(key, default)

    def write(self, path: str | os.PathLike) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for (cls, method, idx), plain in sorted(self.entries.items()):
                fh.write(json.dumps({"class": cls, "method": method, "index": idx,
                                     "plaintext": plain}) + "\n")

    @classmethod
    def read(cls, path: str | os.PathLike) -> "GroundTruth":
        truth = cls()
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    rec = json.loads(line)
                    truth.entries[(rec["class"], rec["method"], rec["index"])] = rec["plaintext"]
        return truth


# ---------------------------------------------------------------------------
# generated support classes

_HELPER = """\
.class public final {cls}
.super Ljava/lang/Object;

.method public static T()I
    .locals 1
    const/16 v0, {tval}
    return v0
.end method
"""

_XOR_DECODER = """
.method public static b(Ljava/lang/String;SS)Ljava/lang/String;
    .locals 5
    invoke-virtual {p0}, Ljava/lang/String;->toCharArray()[C
    move-result-object v0
    const/4 v1, 0x0
    :loop
    array-length v2, v0
    if-ge v1, v2, :done
    aget-char v3, v0, v1
    and-int/lit8 v4, v1, 0x1
    if-nez v4, :odd
    and-int/lit8 v4, p1, 0x7f
    goto :mix
    :odd
    and-int/lit8 v4, p2, 0x7f
    :mix
    xor-int/2addr v3, v4
    int-to-char v3, v3
    aput-char v3, v0, v1
    add-int/lit8 v1, v1, 0x1
    goto :loop
    :done
    new-instance v2, Ljava/lang/String;
    invoke-direct {v2, v0}, Ljava/lang/String;-><init>([C)V
    return-object v2
.end method
"""

_CAESAR_DECODER = """
.method public static c(Ljava/lang/String;I)Ljava/lang/String;
    .locals 6
    invoke-virtual {p0}, Ljava/lang/String;->toCharArray()[C
    move-result-object v0
    const/4 v1, 0x0
    :loop
    array-length v2, v0
    if-ge v1, v2, :done
    aget-char v3, v0, v1
    const/16 v4, 0x20
    if-lt v3, v4, :next
    const/16 v4, 0x7e
    if-gt v3, v4, :next
    add-int/lit8 v3, v3, -0x20
    sub-int/2addr v3, p1
    add-int/lit8 v3, v3, 0x5f
    rem-int/lit8 v3, v3, 0x5f
    add-int/lit8 v3, v3, 0x20
    int-to-char v3, v3
    aput-char v3, v0, v1
    :next
    add-int/lit8 v1, v1, 0x1
    goto :loop
    :done
    new-instance v2, Ljava/lang/String;
    invoke-direct {v2, v0}, Ljava/lang/String;-><init>([C)V
    return-object v2
.end method
"""

_BYTES_DECODER = """
.method public static d(Ljava/lang/String;I)[B
    .locals 7
    invoke-virtual {p0}, Ljava/lang/String;->length()I
    move-result v0
    div-int/lit8 v0, v0, 0x2
    new-array v1, v0, [B
    const/4 v2, 0x0
    const/16 v5, 0x10
    :loop
    if-ge v2, v0, :done
    mul-int/lit8 v3, v2, 0x2
    invoke-virtual {p0, v3}, Ljava/lang/String;->charAt(I)C
    move-result v4
    invoke-static {v4, v5}, Ljava/lang/Character;->digit(CI)I
    move-result v4
    shl-int/lit8 v4, v4, 0x4
    add-int/lit8 v3, v3, 0x1
    invoke-virtual {p0, v3}, Ljava/lang/String;->charAt(I)C
    move-result v6
    invoke-static {v6, v5}, Ljava/lang/Character;->digit(CI)I
    move-result v6
    or-int/2addr v4, v6
    xor-int/2addr v4, p1
    int-to-byte v4, v4
    aput-byte v4, v1, v2
    add-int/lit8 v2, v2, 0x1
    goto :loop
    :done
    return-object v1
.end method
"""

_TABLE_CLASS = """\
.class public final {cls}
.super Ljava/lang/Object;

.field private static final t:[Ljava/lang/String;

.method static constructor <clinit>()V
    .locals 8
    const v0, {nchars}
    new-array v0, v0, [C
    fill-array-data v0, :chars
    const v1, {noffsets}
    new-array v1, v1, [I
    fill-array-data v1, :offsets
    const v2, {nstrings}
    new-array v2, v2, [Ljava/lang/String;
    const/4 v3, 0x0
    :loop
    array-length v4, v2
    if-ge v3, v4, :done
    aget v5, v1, v3
    add-int/lit8 v6, v3, 0x1
    aget v6, v1, v6
    sub-int/2addr v6, v5
    new-instance v7, Ljava/lang/String;
    invoke-direct {{v7, v0, v5, v6}}, Ljava/lang/String;-><init>([CII)V
    aput-object v7, v2, v3
    add-int/lit8 v3, v3, 0x1
    goto :loop
    :done
    sput-object v2, {cls}->t:[Ljava/lang/String;
    return-void

    :chars
    .array-data 2
{chars}
    .end array-data

    :offsets
    .array-data 4
{offsets}
    .end array-data
.end method

.method public static s(Ljava/lang/String;I)Ljava/lang/Object;
    .locals 2
    const/16 v0, 0x24
    invoke-static {{p0, v0}}, Ljava/lang/Integer;->parseInt(Ljava/lang/String;I)I
    move-result v0
    sub-int/2addr v0, p1
    sget-object v1, {cls}->t:[Ljava/lang/String;
    aget-object v1, v1, v0
    return-object v1
.end method
"""

_DECODER_BODIES = {
    SchemeKind.XOR_TWO_KEYS: ("b", "(Ljava/lang/String;SS)Ljava/lang/String;", _XOR_DECODER),
    SchemeKind.CAESAR_SHIFT: ("c", "(Ljava/lang/String;I)Ljava/lang/String;", _CAESAR_DECODER),
    SchemeKind.BYTE_ARRAY_DECODE: ("d", "(Ljava/lang/String;I)[B", _BYTES_DECODER),
}


def _decoder_class(cls: str, kind: SchemeKind) -> SmaliClass:
    body = _DECODER_BODIES[kind][2]
    text = f".class public final {cls}\n.super Ljava/lang/Object;\n{body}"
    return parse_smali(text)


def _table_class(cls: str, table: list[str]) -> SmaliClass:
    units = "".join(table)
    offsets = [0]
    for s in table:
        offsets.append(offsets[-1] + len(s))
    text = _TABLE_CLASS.format(
        cls=cls, nchars=hex(len(units)), noffsets=hex(len(offsets)), nstrings=hex(len(table)),
        chars="\n".join(f"        {hex(ord(c))}s" for c in units),
        offsets="\n".join(f"        {hex(o)}" for o in offsets),
    )
    return parse_smali(text)


def _fresh_descriptor(taken: Iterable[str], base: str) -> str:
    taken = set(taken)
    cand, n = f"L{base};", 0
    while cand in taken:
        n += 1
        cand = f"L{base}{n};"
    return cand


# ---------------------------------------------------------------------------
# method rewriting


class _Builder:
    def __init__(self):
        self.stmts: list[Statement] = []
        self.labels: dict[str, int] = {}

    def add(self, opcode: str, *regs: str, **kw) -> None:
        self.stmts.append(Statement(len(self.stmts), opcode, tuple(regs), **kw))

    def label(self, name: str) -> None:
        self.labels[name] = len(self.stmts)

    def keep(self, stmt: Statement) -> None:
        self.stmts.append(replace(stmt, index=len(self.stmts)))

    def invoke(self, kind: str, regs: list[str], ref: MethodRef) -> None:
        nums = [int(r[1:]) for r in regs]
        if len(nums) <= 5 and all(n < 16 for n in nums):
            self.add(kind, *regs, method_ref=ref)
        else:
            if nums != list(range(nums[0], nums[0] + len(nums))):
                raise ValueError("range invoke needs consecutive registers")
            self.add(kind + "/range", *regs, method_ref=ref)

    def move_object(self, dst: str, src: str) -> None:
        a, b = int(dst[1:]), int(src[1:])
        op = "move-object" if a < 16 and b < 16 else "move-object/from16" if a < 256 else "move-object/16"
        self.add(op, dst, src)


def _shift_registers(stmt: Statement, first_param: int, by: int) -> Statement:
    if not stmt.registers:
        return stmt
    regs = tuple(f"v{int(r[1:]) + by}" if int(r[1:]) >= first_param else r
                 for r in stmt.registers)
    return replace(stmt, registers=regs)


def _small_const(value: int) -> str:
    return "const/16" if -0x8000 <= value <= 0x7FFF else "const"


@dataclass
class _Context:
    scheme: ObfuscationScheme
    rng: random.Random
    tval: int
    helper: MethodRef
    decoder: MethodRef | None
    table_cls: str | None = None
    table: list[str] = field(default_factory=list)


def _emit_junk(b: _Builder, ctx: _Context, scratch: str, count: int, tag: str) -> None:
    for k in range(count):
        name = f"{tag}_j{k}"
        b.invoke("invoke-static", [], ctx.helper)
        b.add("move-result", scratch)
        b.add("if-eqz", scratch, branch_targets=(name,))
        b.add("add-int/lit8", scratch, scratch, literal=1)
        b.label(name)


def _expand_literal(b: _Builder, ctx: _Context, stmt: Statement, scratch: list[str], tag: str,
                    junk: int) -> tuple[int, str]:
    """Append the obfuscated replacement of ``stmt``; return (literal index, plaintext)."""
    plain = stmt.literal
    target = stmt.registers[0]
    s0, s1, s2, s3 = scratch
    kind = ctx.scheme.kind
    keys = ctx.scheme.draw_keys(ctx.rng)
    if kind is SchemeKind.STATIC_TABLE_LOOKUP:
        cipher = encode(kind, plain, keys, index=len(ctx.table))
        ctx.table.append(plain)
        check = decode(kind, cipher, keys, ctx.table)
    else:
        cipher = encode(kind, plain, keys)
        check = decode(kind, cipher, keys)
    if check != plain:
        raise AssertionError(f"{kind.value} does not invert on {plain!r}")
    opcode = "const-string/jumbo" if stmt.opcode.endswith("jumbo") else "const-string"

    if kind is SchemeKind.XOR_TWO_KEYS:
        c1, c2 = keys["k1"] ^ ctx.tval, keys["k2"] ^ ctx.tval
        b.add(_small_const(c1), s1, literal=c1)
        b.add(_small_const(c2), s2, literal=c2)
        lit_index = len(b.stmts)
        b.add(opcode, s0, literal=cipher)
        _emit_junk(b, ctx, s3, max(junk - 1, 0), tag)
        b.invoke("invoke-static", [], ctx.helper)
        b.add("move-result", s3)
        b.add("xor-int/2addr", s3, s1)
        if junk >= 1:
            # an opaque branch shaped like the bundled example around the first key
            name = f"{tag}_k"
            b.add("if-eqz", s3, branch_targets=(name,))
            b.add("add-int/2addr", s1, s3)
            b.label(name)
        b.add("int-to-short", s1, s3)
        b.invoke("invoke-static", [], ctx.helper)
        b.add("move-result", s3)
        b.add("xor-int/2addr", s3, s2)
        b.add("int-to-short", s2, s3)
        b.invoke("invoke-static", [s0, s1, s2], ctx.decoder)
        b.add("move-result-object", target)
        return lit_index, plain

    key = keys["shift"] if kind is SchemeKind.CAESAR_SHIFT else keys["key"]
    c = key ^ ctx.tval
    b.add(_small_const(c), s1, literal=c)
    lit_index = len(b.stmts)
    b.add(opcode, s0, literal=cipher)
    _emit_junk(b, ctx, s3, junk, tag)
    b.invoke("invoke-static", [], ctx.helper)
    b.add("move-result", s3)
    b.add("xor-int/2addr", s1, s3)
    if kind is SchemeKind.BYTE_ARRAY_DECODE:
        b.invoke("invoke-static", [s0, s1], ctx.decoder)
        b.add("move-result-object", s2)
        b.add("new-instance", s1, type_ref=_STRING)
        b.invoke("invoke-direct", [s1, s2], MethodRef(_STRING, "<init>", "([B)V"))
        b.move_object(target, s1)
    elif kind is SchemeKind.CAESAR_SHIFT:
        b.invoke("invoke-static", [s0, s1], ctx.decoder)
        b.add("move-result-object", target)
    else:
        # the table hands back an Object that the caller casts to String
        ref = MethodRef(ctx.table_cls, "s", "(Ljava/lang/String;I)Ljava/lang/Object;")
        b.invoke("invoke-static", [s0, s1], ref)
        b.add("move-result-object", target)
        b.add("check-cast", target, type_ref=_STRING)
    return lit_index, plain


def _rewrite_method(method: MethodDef, ctx: _Context, truth: GroundTruth, junk: int) -> MethodDef:
    sites = [s.index for s in method.statements if s.opcode in ops.CONST_STRING_OPS and s.literal]
    if not sites:
        return method
    first_param = method.register_count - method.param_words
    scratch = [f"v{first_param + k}" for k in range(SCRATCH)]
    by_index: dict[int, list[str]] = {}
    for name, idx in method.labels.items():
        by_index.setdefault(idx, []).append(name)
    b = _Builder()
    key_method = method.name + method.signature
    for stmt in method.statements:
        for name in by_index.get(stmt.index, ()):
            b.label(name)
        stmt = _shift_registers(stmt, first_param, SCRATCH)
        if stmt.opcode in ops.CONST_STRING_OPS and stmt.literal:
            tag = f"obf{stmt.index}"
            lit_index, plain = _expand_literal(b, ctx, stmt, scratch, tag, junk)
            truth.entries[(method.class_descriptor, key_method, lit_index)] = plain
        else:
            b.keep(stmt)
    for name in by_index.get(len(method.statements), ()):
        b.label(name)
    return replace(method, statements=tuple(b.stmts), labels=b.labels,
                   register_count=method.register_count + SCRATCH)


def _obfuscate(program: SmaliProgram, scheme: ObfuscationScheme, seed: int, junk: int,
               exclusions: tuple[str, ...]) -> tuple[SmaliProgram, GroundTruth]:
    rng = random.Random(seed)
    tval = rng.randint(0x100, 0x7F00)
    taken = set(program.classes)
    helper_cls = _fresh_descriptor(taken, "obf/Gate")
    taken.add(helper_cls)
    helper = MethodRef(helper_cls, "T", "()I")
    decoder = None
    extra: list[SmaliClass] = [parse_smali(_HELPER.format(cls=helper_cls, tval=hex(tval)))]
    if scheme.kind is not SchemeKind.STATIC_TABLE_LOOKUP:
        dec_cls = _fresh_descriptor(taken, "obf/Dec")
        taken.add(dec_cls)
        name, sig, _ = _DECODER_BODIES[scheme.kind]
        decoder = MethodRef(dec_cls, name, sig)
        extra.append(_decoder_class(dec_cls, scheme.kind))

    truth = GroundTruth()
    out = SmaliProgram(failures=list(program.failures))
    for desc in sorted(program.classes):
        cls = program.classes[desc]
        if is_excluded_class(desc, exclusions):
            out.classes[desc] = cls
            continue
        ctx = _Context(scheme, rng, tval, helper, decoder)
        if scheme.kind is SchemeKind.STATIC_TABLE_LOOKUP:
            ctx.table_cls = _fresh_descriptor(taken, "obf/Tbl")
        methods = tuple(_rewrite_method(m, ctx, truth, junk) for m in cls.methods)
        out.classes[desc] = replace(cls, methods=methods)
        if ctx.table:
            taken.add(ctx.table_cls)
            extra.append(_table_class(ctx.table_cls, ctx.table))
    for cls in extra:
        out.classes[cls.descriptor] = cls
    return out, truth


def obfuscate_program(program: SmaliProgram, scheme: ObfuscationScheme, seed: int,
                      exclusions: tuple[str, ...] = DEFAULT_EXCLUSIONS
                      ) -> tuple[SmaliProgram, GroundTruth]:
    """Obfuscate every non-empty literal of non-library classes; deterministic in ``seed``."""
    return _obfuscate(program, scheme, seed, scheme.junk_conditionals, exclusions)


def write_corpus(program: SmaliProgram, truth: GroundTruth, root: str | os.PathLike) -> Path:
    """Write the ``.smali`` tree plus the ground-truth record file under ``root``."""
    root = Path(root)
    write_program(program, root)
    truth.write(root / TRUTH_FILE)
    return root


_BUDGET_CLASS = """\
.class public final Lfix/Budget;
.super Ljava/lang/Object;

.method public static greet()V
    .locals 1
    const-string v0, "hello world"
    invoke-static {v0}, Lfix/Budget;->show(Ljava/lang/String;)V
    return-void
.end method

.method public static show(Ljava/lang/String;)V
    .locals 0
    return-void
.end method
"""


def budget_fixture(conditionals: int, seed: int = 0) -> tuple[SmaliProgram, GroundTruth]:
    """One literal whose decoder call sits behind exactly ``conditionals`` if-statements."""
    program = SmaliProgram()
    cls = parse_smali(_BUDGET_CLASS)
    program.classes[cls.descriptor] = cls
    scheme = ObfuscationScheme(SchemeKind.XOR_TWO_KEYS)
    return _obfuscate(program, scheme, seed, conditionals, DEFAULT_EXCLUSIONS)
