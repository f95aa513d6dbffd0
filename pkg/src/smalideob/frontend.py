"""Smali text frontend: IR types, parser, printer and corpus loader."""

from __future__ import annotations

import logging
import os
import re
import struct
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Union

from . import opcodes as ops

log = logging.getLogger(__name__)

Literal = Union[int, str]


class SmaliSyntaxError(ValueError):
    def __init__(self, message: str, lineno: int = 0, path: str | None = None):
        self.lineno = lineno
        self.path = path
        where = f"{path}:" if path else "line "
        super().__init__(f"{where}{lineno}: {message}" if lineno else message)


class UnknownOpcode(SmaliSyntaxError):
    """Raised only in strict mode; by default unknown mnemonics are kept opaque."""


class DuplicateClass(ValueError):
    pass


# ---------------------------------------------------------------------------
# descriptors


_TYPE_RE = re.compile(r"\[*(?:[VZBSCIJFD]|L[^;]+;)")


def split_types(desc: str) -> list[str]:
    """Split a concatenation of type descriptors, e.g. ``Ljava/lang/String;SS``."""
    out, pos = [], 0
    while pos < len(desc):
        m = _TYPE_RE.match(desc, pos)
        if not m:
            raise ValueError(f"bad type list {desc!r}")
        out.append(m.group())
        pos = m.end()
    return out


def parse_signature(sig: str) -> tuple[list[str], str]:
    """``(Ljava/lang/String;SS)Ljava/lang/String;`` -> (params, return type)."""
    if not sig.startswith("(") or ")" not in sig:
        raise ValueError(f"bad method descriptor {sig!r}")
    close = sig.index(")")
    return split_types(sig[1:close]), sig[close + 1:]


def type_words(desc: str) -> int:
    return 2 if desc in ("J", "D") else 1


@dataclass(frozen=True)
class MethodRef:
    cls: str
    name: str
    signature: str

    @property
    def params(self) -> list[str]:
        return parse_signature(self.signature)[0]

    @property
    def return_type(self) -> str:
        return parse_signature(self.signature)[1]

    def __str__(self) -> str:
        return f"{self.cls}->{self.name}{self.signature}"

    @classmethod
    def parse(cls, text: str) -> "MethodRef":
        owner, _, rest = text.partition("->")
        paren = rest.find("(")
        if not owner or paren <= 0:
            raise ValueError(f"bad method reference {text!r}")
        return cls(owner, rest[:paren], rest[paren:])


@dataclass(frozen=True)
class FieldRef:
    cls: str
    name: str
    type: str

    def __str__(self) -> str:
        return f"{self.cls}->{self.name}:{self.type}"

    @classmethod
    def parse(cls, text: str) -> "FieldRef":
        owner, _, rest = text.partition("->")
        name, _, ftype = rest.partition(":")
        if not owner or not name or not ftype:
            raise ValueError(f"bad field reference {text!r}")
        return cls(owner, name, ftype)


# ---------------------------------------------------------------------------
# IR


@dataclass(frozen=True)
class Statement:
    index: int
    opcode: str
    registers: tuple[str, ...] = ()
    literal: Literal | None = None
    method_ref: MethodRef | None = None
    type_ref: str | None = None
    field_ref: FieldRef | None = None
    branch_targets: tuple[str, ...] = ()
    # packed/sparse-switch: case keys aligned with branch_targets;
    # fill-array-data: (element width, *values)
    payload: tuple[int, ...] = ()
    raw: str | None = None  # operand text of opaque statements
    line: int = field(default=0, compare=False)

    @property
    def known(self) -> bool:
        return self.opcode in ops.LAYOUTS or self.opcode == ops.EMIT

    def __str__(self) -> str:
        return format_statement(self)


@dataclass(frozen=True)
class MethodDef:
    name: str
    signature: str
    flags: tuple[str, ...] = ()
    register_count: int = 0
    statements: tuple[Statement, ...] = ()
    labels: dict[str, int] = field(default_factory=dict)
    class_descriptor: str = ""

    @property
    def is_static(self) -> bool:
        return "static" in self.flags

    @property
    def param_words(self) -> int:
        params, _ = parse_signature(self.signature)
        return sum(type_words(p) for p in params) + (0 if self.is_static else 1)

    @property
    def ref(self) -> MethodRef:
        return MethodRef(self.class_descriptor, self.name, self.signature)

    def target(self, label: str) -> int:
        return self.labels[label]

    def __len__(self) -> int:
        return len(self.statements)


@dataclass(frozen=True)
class FieldDef:
    name: str
    type: str
    flags: tuple[str, ...] = ()
    initial: Literal | None = None

    @property
    def is_static(self) -> bool:
        return "static" in self.flags


@dataclass(frozen=True)
class SmaliClass:
    descriptor: str
    super_descriptor: str | None
    methods: tuple[MethodDef, ...] = ()
    source_file: str | None = field(default=None, compare=False)
    flags: tuple[str, ...] = ()
    interfaces: tuple[str, ...] = ()
    fields: tuple[FieldDef, ...] = ()
    source: str | None = None

    def method(self, name: str, signature: str | None = None) -> MethodDef:
        for m in self.methods:
            if m.name == name and (signature is None or m.signature == signature):
                return m
        raise KeyError(f"{self.descriptor}->{name}{signature or ''}")


@dataclass(frozen=True)
class LoadFailure:
    path: str
    error: str


@dataclass
class SmaliProgram:
    classes: dict[str, SmaliClass] = field(default_factory=dict)
    failures: list[LoadFailure] = field(default_factory=list)

    def resolve_method(self, ref: MethodRef) -> MethodDef | None:
        """Find ``ref`` in its class or the nearest in-corpus superclass."""
        desc = ref.cls
        while desc in self.classes:
            cls = self.classes[desc]
            for m in cls.methods:
                if m.name == ref.name and m.signature == ref.signature:
                    return m
            desc = cls.super_descriptor
        return None

    def is_internal(self, ref: MethodRef) -> bool:
        return self.resolve_method(ref) is not None

    def iter_methods(self) -> Iterable[tuple[SmaliClass, MethodDef]]:
        for desc in sorted(self.classes):
            cls = self.classes[desc]
            for m in cls.methods:
                yield cls, m


# ---------------------------------------------------------------------------
# lexing helpers

_ESCAPES = {"n": "\n", "t": "\t", "r": "\r", "b": "\b", "f": "\f",
            '"': '"', "'": "'", "\\": "\\"}


def unescape(body: str) -> str:
    out, i = [], 0
    while i < len(body):
        ch = body[i]
        if ch != "\\":
            out.append(ch)
            i += 1
            continue
        if i + 1 >= len(body):
            raise ValueError("dangling backslash")
        nxt = body[i + 1]
        if nxt == "u":
            out.append(chr(int(body[i + 2:i + 6], 16)))
            i += 6
        elif nxt in _ESCAPES:
            out.append(_ESCAPES[nxt])
            i += 2
        elif nxt in "01234567":
            m = re.match(r"[0-7]{1,3}", body[i + 1:])
            out.append(chr(int(m.group(), 8)))
            i += 1 + m.end()
        else:
            raise ValueError(f"unknown escape \\{nxt}")
    return "".join(out)


def escape(value: str, quote: str = '"') -> str:
    out = []
    for ch in value:
        code = ord(ch)
        if ch == "\\":
            out.append("\\\\")
        elif ch == quote:
            out.append("\\" + quote)
        elif ch == "\n":
            out.append("\\n")
        elif ch == "\t":
            out.append("\\t")
        elif ch == "\r":
            out.append("\\r")
        elif 0x20 <= code < 0x7F:
            out.append(ch)
        else:
            out.append(f"\\u{code:04x}")
    return "".join(out)


def _strip_comment(line: str) -> str:
    quote = None
    i = 0
    while i < len(line):
        ch = line[i]
        if quote:
            if ch == "\\":
                i += 2
                continue
            if ch == quote:
                quote = None
        elif ch in "\"'":
            quote = ch
        elif ch == "#":
            return line[:i]
        i += 1
    return line


def _split_operands(text: str) -> list[str]:
    """Split on commas/whitespace, keeping quoted strings and ``{...}`` intact."""
    toks, i, n = [], 0, len(text)
    while i < n:
        ch = text[i]
        if ch in " \t,":
            i += 1
            continue
        if ch in "\"'":
            j = i + 1
            while j < n and text[j] != ch:
                j += 2 if text[j] == "\\" else 1
            toks.append(text[i:j + 1])
            i = j + 1
        elif ch == "{":
            j = text.index("}", i)
            toks.append(text[i:j + 1])
            i = j + 1
        else:
            j = i
            while j < n and text[j] not in " \t,":
                j += 1
            toks.append(text[i:j])
            i = j
    return toks


_INT_RE = re.compile(r"^([+-]?)(0x[0-9a-fA-F]+|[0-9]+)([LlSsTt]?)$")


def parse_number(tok: str, wide: bool = False) -> int:
    """Parse an integer/float/char/boolean literal to its raw bit pattern."""
    m = _INT_RE.match(tok)
    if m:
        sign, digits, _ = m.groups()
        if digits.startswith("0x"):
            value = int(digits, 16)
        elif len(digits) > 1 and digits.startswith("0"):
            value = int(digits, 8)
        else:
            value = int(digits)
        return -value if sign == "-" else value
    if tok in ("true", "false"):
        return int(tok == "true")
    if tok.startswith("'") and tok.endswith("'"):
        return ord(unescape(tok[1:-1]))
    low = tok.lower()
    is_float = low.endswith("f") and not low.startswith("0x")
    text = low[:-1] if low.endswith(("f", "d")) and not low.startswith("0x") else low
    text = text.replace("infinity", "inf")
    try:
        value = float(text)
    except ValueError:
        raise ValueError(f"bad numeric literal {tok!r}") from None
    if is_float and not wide:
        return struct.unpack("<i", struct.pack("<f", value))[0]
    return struct.unpack("<q", struct.pack("<d", value))[0]


def _signed(value: int, bits: int) -> int:
    value &= (1 << bits) - 1
    return value - (1 << bits) if value >> (bits - 1) else value


_METHOD_RE = re.compile(r"^\.method\s+(.*?)(\S+)$")
_FIELD_RE = re.compile(r"^\.field\s+(.*?)(\S+?):(\S+?)(?:\s*=\s*(.+))?$")
_ACCESS = {"public", "private", "protected", "static", "final", "synchronized",
           "bridge", "varargs", "native", "abstract", "strictfp", "synthetic",
           "constructor", "declared-synchronized", "interface", "enum",
           "annotation", "volatile", "transient"}


# ---------------------------------------------------------------------------
# parser


class _MethodParser:
    def __init__(self, cls_desc: str, header: str, lineno: int, path: str | None):
        m = _METHOD_RE.match(header)
        if not m:
            raise SmaliSyntaxError("bad .method directive", lineno, path)
        self.flags = tuple(m.group(1).split())
        proto = m.group(2)
        paren = proto.find("(")
        if paren <= 0:
            raise SmaliSyntaxError(f"bad method prototype {proto!r}", lineno, path)
        self.name, self.signature = proto[:paren], proto[paren:]
        self.cls_desc = cls_desc
        self.path = path
        try:
            params, _ = parse_signature(self.signature)
        except ValueError as exc:
            raise SmaliSyntaxError(str(exc), lineno, path) from None
        self.param_words = sum(type_words(p) for p in params) + (0 if "static" in self.flags else 1)
        self.register_count: int | None = None
        self.raw: list[tuple[int, str, list[str]]] = []
        self.labels: dict[str, int] = {}
        self.pending: list[str] = []
        self.payloads: dict[str, tuple[str, tuple]] = {}

    def set_registers(self, directive: str, value: str, lineno: int) -> None:
        n = parse_number(value)
        self.register_count = n if directive == ".registers" else n + self.param_words

    def add_label(self, name: str) -> None:
        self.pending.append(name)

    def add_statement(self, lineno: int, mnemonic: str, toks: list[str]) -> None:
        for name in self.pending:
            self.labels[name] = len(self.raw)
        self.pending = []
        self.raw.append((lineno, mnemonic, toks))

    def add_payload(self, kind: str, data: tuple, lineno: int) -> None:
        for name in self.pending:
            self.payloads[name] = (kind, data)
        if not self.pending:
            raise SmaliSyntaxError(f"unlabelled {kind} payload", lineno, self.path)
        self.pending = []

    def _reg(self, tok: str, lineno: int) -> str:
        if len(tok) < 2 or tok[0] not in "vp" or not tok[1:].isdigit():
            raise SmaliSyntaxError(f"expected register, got {tok!r}", lineno, self.path)
        num = int(tok[1:])
        count = self.register_count or 0
        if tok[0] == "p":
            num = count - self.param_words + num
        if num < 0 or num >= count:
            raise SmaliSyntaxError(f"register {tok} outside frame of {count}", lineno, self.path)
        return f"v{num}"

    def _reglist(self, tok: str, lineno: int) -> tuple[str, ...]:
        if not (tok.startswith("{") and tok.endswith("}")):
            raise SmaliSyntaxError(f"expected register list, got {tok!r}", lineno, self.path)
        body = tok[1:-1].strip()
        if not body:
            return ()
        if ".." in body:
            lo, hi = (s.strip() for s in body.split(".."))
            a = int(self._reg(lo, lineno)[1:])
            b = int(self._reg(hi, lineno)[1:])
            return tuple(f"v{k}" for k in range(a, b + 1))
        return tuple(self._reg(t.strip(), lineno) for t in body.split(","))

    def _statement(self, index: int, lineno: int, mnemonic: str, toks: list[str],
                   strict: bool) -> Statement:
        layout = ops.LAYOUTS.get(mnemonic)
        if layout is None:
            if strict:
                raise UnknownOpcode(f"unknown opcode {mnemonic!r}", lineno, self.path)
            log.warning("%s:%d: unknown opcode %s kept opaque", self.path, lineno, mnemonic)
            return Statement(index, mnemonic, raw=" ".join(toks), line=lineno)
        parts = layout.split(",") if layout else []
        if len(parts) != len(toks) and layout != "list,raw":
            raise SmaliSyntaxError(
                f"{mnemonic} expects {len(parts)} operands, got {len(toks)}", lineno, self.path)
        kw: dict = {"registers": []}
        try:
            for kind, tok in zip(parts, toks):
                if kind == "r":
                    kw["registers"].append(self._reg(tok, lineno))
                elif kind == "list":
                    kw["registers"].extend(self._reglist(tok, lineno))
                elif kind == "lit":
                    kw["literal"] = self._literal(mnemonic, tok)
                elif kind == "str":
                    if not (len(tok) >= 2 and tok[0] == tok[-1] == '"'):
                        raise ValueError(f"expected string literal, got {tok!r}")
                    kw["literal"] = unescape(tok[1:-1])
                elif kind == "type":
                    kw["type_ref"] = tok
                elif kind == "field":
                    kw["field_ref"] = FieldRef.parse(tok)
                elif kind == "meth":
                    kw["method_ref"] = MethodRef.parse(tok)
                elif kind == "label":
                    kw["branch_targets"] = (tok[1:],)
                elif kind == "raw":
                    kw["raw"] = " ".join(toks[len(parts) - 1:])
                    break
        except (ValueError, IndexError) as exc:
            if isinstance(exc, SmaliSyntaxError):
                raise
            raise SmaliSyntaxError(str(exc), lineno, self.path) from None
        kw["registers"] = tuple(kw["registers"])
        return Statement(index, mnemonic, line=lineno, **kw)

    @staticmethod
    def _literal(mnemonic: str, tok: str) -> int:
        wide = ops.is_wide_const(mnemonic)
        value = parse_number(tok, wide=wide)
        if mnemonic.startswith(("const", "add-int", "rsub", "mul-int", "div-int",
                                "rem-int", "and-int", "or-int", "xor-int", "shl",
                                "shr", "ushr")):
            return _signed(value, 64 if wide else 32)
        return value

    def finish(self, strict: bool) -> MethodDef:
        end = len(self.raw)
        for name in self.pending:
            self.labels[name] = end
        stmts = []
        for index, (lineno, mnemonic, toks) in enumerate(self.raw):
            stmt = self._statement(index, lineno, mnemonic, toks, strict)
            if stmt.opcode in ("packed-switch", "sparse-switch", "fill-array-data"):
                stmt = self._attach_payload(stmt)
            for target in stmt.branch_targets:
                if target not in self.labels:
                    raise SmaliSyntaxError(f"undefined label :{target}", lineno, self.path)
            stmts.append(stmt)
        return MethodDef(self.name, self.signature, self.flags, self.register_count or 0,
                         tuple(stmts), dict(self.labels), self.cls_desc)

    def _attach_payload(self, stmt: Statement) -> Statement:
        label = stmt.branch_targets[0]
        if label not in self.payloads:
            raise SmaliSyntaxError(f"missing payload :{label}", stmt.line, self.path)
        kind, data = self.payloads[label]
        if stmt.opcode == "fill-array-data":
            if kind != "array":
                raise SmaliSyntaxError("fill-array-data needs .array-data", stmt.line, self.path)
            return replace(stmt, branch_targets=(), payload=data)
        keys, targets = data
        if kind != stmt.opcode.split("-")[0]:
            raise SmaliSyntaxError(f"{stmt.opcode} payload mismatch", stmt.line, self.path)
        return replace(stmt, branch_targets=tuple(targets), payload=tuple(keys))


def parse_smali(text: str, path: str | None = None, strict: bool = False) -> SmaliClass:
    """Parse one Smali class.

    Annotations, debug directives and ``.catch`` ranges are skipped; labels
    bind to the index of the next real statement.
    """
    lines = text.splitlines()
    descriptor = super_desc = source = None
    flags: tuple[str, ...] = ()
    interfaces: list[str] = []
    fields: list[FieldDef] = []
    methods: list[MethodDef] = []
    method: _MethodParser | None = None
    skip_until: str | None = None
    block: tuple[str, int, list] | None = None

    i = 0
    while i < len(lines):
        lineno = i + 1
        line = _strip_comment(lines[i]).strip()
        i += 1
        if not line:
            continue
        if skip_until:
            if line.startswith(skip_until):
                skip_until = None
            continue
        if block is not None:
            kind, start, items = block
            if line.startswith(".end "):
                data = _finish_block(kind, start, items, lineno, path)
                method.add_payload(kind, data, start)
                block = None
            else:
                items.append((lineno, line))
            continue

        head = line.split(None, 1)[0]
        rest = line[len(head):].strip()

        if head in (".annotation", ".subannotation"):
            skip_until = ".end annotation" if head == ".annotation" else ".end subannotation"
            continue
        if head == ".class":
            parts = rest.split()
            descriptor, flags = parts[-1], tuple(parts[:-1])
        elif head == ".super":
            super_desc = rest
        elif head == ".source":
            source = unescape(rest.strip('"'))
        elif head == ".implements":
            interfaces.append(rest)
        elif head == ".field":
            fields.append(_parse_field(line, lineno, path))
            # a field may carry an annotation block terminated by .end field
            j = i
            while j < len(lines) and not _strip_comment(lines[j]).strip():
                j += 1
            if j < len(lines) and _strip_comment(lines[j]).strip().startswith(".annotation"):
                skip_until = ".end field"
        elif head == ".end" and rest == "field":
            continue
        elif head == ".method":
            if descriptor is None:
                raise SmaliSyntaxError(".method before .class", lineno, path)
            if method is not None:
                raise SmaliSyntaxError("nested .method", lineno, path)
            method = _MethodParser(descriptor, line, lineno, path)
        elif head == ".end" and rest == "method":
            if method is None:
                raise SmaliSyntaxError(".end method without .method", lineno, path)
            methods.append(method.finish(strict))
            method = None
        elif method is None:
            raise SmaliSyntaxError(f"unexpected {head!r} outside method", lineno, path)
        elif head in (".registers", ".locals"):
            method.set_registers(head, rest, lineno)
        elif head in (".packed-switch", ".sparse-switch", ".array-data"):
            kind = {".packed-switch": "packed", ".sparse-switch": "sparse", ".array-data": "array"}[head]
            block = (kind, lineno, [rest] if rest else [None])
        elif head == ".param":
            # .param may open an annotation block closed by .end param
            j = i
            while j < len(lines) and not _strip_comment(lines[j]).strip():
                j += 1
            if j < len(lines) and _strip_comment(lines[j]).strip().startswith(".annotation"):
                skip_until = ".end param"
        elif head.startswith("."):
            # .line, .local, .end local, .restart local, .prologue, .epilogue,
            # .catch, .catchall, .end param
            continue
        elif head.startswith(":"):
            method.add_label(head[1:])
        else:
            method.add_statement(lineno, head, _split_operands(rest))

    if method is not None:
        raise SmaliSyntaxError("missing .end method", len(lines), path)
    if descriptor is None:
        raise SmaliSyntaxError("missing .class directive", 0, path)
    return SmaliClass(descriptor, super_desc, tuple(methods), path, flags,
                      tuple(interfaces), tuple(fields), source)


def _parse_field(line: str, lineno: int, path: str | None) -> FieldDef:
    m = _FIELD_RE.match(line)
    if not m:
        raise SmaliSyntaxError("bad .field directive", lineno, path)
    flag_text, name, ftype, init = m.groups()
    flag_list = flag_text.split()
    initial: Literal | None = None
    if init is not None:
        init = init.strip()
        if init.startswith('"'):
            initial = unescape(init[1:-1])
        elif init == "null":
            initial = None
        else:
            try:
                initial = parse_number(init, wide=ftype in ("J", "D"))
            except ValueError:
                initial = None
    return FieldDef(name, ftype, tuple(flag_list), initial)


def _finish_block(kind: str, start: int, items: list, lineno: int, path: str | None) -> tuple:
    header = items[0]
    body = items[1:]
    try:
        if kind == "array":
            width = parse_number(header)
            values = tuple(_signed(parse_number(t), width * 8) for _, text in body
                           for t in text.split())
            return (width, *values)
        if kind == "packed":
            first = _signed(parse_number(header), 32)
            targets = [text.strip()[1:] for _, text in body]
            return tuple(range(first, first + len(targets))), targets
        keys, targets = [], []
        for _, text in body:
            key, _, target = text.partition("->")
            keys.append(_signed(parse_number(key.strip()), 32))
            targets.append(target.strip()[1:])
        return tuple(keys), targets
    except (ValueError, TypeError) as exc:
        raise SmaliSyntaxError(f"bad {kind} payload: {exc}", start, path) from None


# ---------------------------------------------------------------------------
# printer


def _fmt_int(value: int, suffix: str = "") -> str:
    return f"-0x{-value:x}{suffix}" if value < 0 else f"0x{value:x}{suffix}"


def format_statement(stmt: Statement) -> str:
    if stmt.opcode == ops.EMIT:
        return f"{ops.EMIT} {stmt.registers[0]}"
    layout = ops.LAYOUTS.get(stmt.opcode)
    if layout is None:
        return f"{stmt.opcode} {stmt.raw}".rstrip()
    regs = list(stmt.registers)
    out = []
    for kind in layout.split(",") if layout else []:
        if kind == "r":
            out.append(regs.pop(0))
        elif kind == "list":
            if stmt.opcode.endswith("/range") and regs:
                out.append("{" + f"{regs[0]} .. {regs[-1]}" + "}")
            else:
                out.append("{" + ", ".join(regs) + "}")
            regs = []
        elif kind == "lit":
            out.append(_fmt_int(stmt.literal, "L" if ops.is_wide_const(stmt.opcode) else ""))
        elif kind == "str":
            out.append('"' + escape(stmt.literal) + '"')
        elif kind == "type":
            out.append(stmt.type_ref)
        elif kind == "field":
            out.append(str(stmt.field_ref))
        elif kind == "meth":
            out.append(str(stmt.method_ref))
        elif kind == "label":
            out.append(":" + (stmt.branch_targets[0] if stmt.branch_targets else "?"))
        elif kind == "raw":
            out.append(stmt.raw or "")
    return f"{stmt.opcode} {', '.join(out)}".rstrip()


def format_method(method: MethodDef) -> str:
    lines = [f".method {' '.join(method.flags + (method.name + method.signature,))}"]
    lines.append(f"    .registers {method.register_count}")
    by_index: dict[int, list[str]] = {}
    for name, idx in method.labels.items():
        by_index.setdefault(idx, []).append(name)
    payloads = []
    for stmt in method.statements:
        for name in by_index.get(stmt.index, []):
            lines.append(f"    :{name}")
        if stmt.opcode in ("packed-switch", "sparse-switch", "fill-array-data"):
            label = f"payload_{stmt.index}"
            lines.append(f"    {stmt.opcode} {stmt.registers[0]}, :{label}")
            payloads.append((label, stmt))
        else:
            lines.append("    " + format_statement(stmt))
    for name in by_index.get(len(method.statements), []):
        lines.append(f"    :{name}")
    for label, stmt in payloads:
        lines.append("")
        lines.append(f"    :{label}")
        lines.extend(_format_payload(stmt))
    lines.append(".end method")
    return "\n".join(lines)


def _format_payload(stmt: Statement) -> list[str]:
    if stmt.opcode == "fill-array-data":
        width, *values = stmt.payload
        body = [f"        {_fmt_int(v)}" for v in values]
        return [f"    .array-data {width}", *body, "    .end array-data"]
    if stmt.opcode == "packed-switch":
        first = stmt.payload[0] if stmt.payload else 0
        body = [f"        :{t}" for t in stmt.branch_targets]
        return [f"    .packed-switch {_fmt_int(first)}", *body, "    .end packed-switch"]
    body = [f"        {_fmt_int(k)} -> :{t}" for k, t in zip(stmt.payload, stmt.branch_targets)]
    return ["    .sparse-switch", *body, "    .end sparse-switch"]


def _format_initial(fdef: FieldDef) -> str:
    if isinstance(fdef.initial, str):
        return f' = "{escape(fdef.initial)}"'
    if fdef.initial is None:
        return ""
    return " = " + _fmt_int(fdef.initial, "L" if fdef.type in ("J", "D") else "")


def print_smali(cls: SmaliClass) -> str:
    """Render a class back to Smali text in a canonical layout."""
    lines = [f".class {' '.join(cls.flags + (cls.descriptor,))}"]
    if cls.super_descriptor:
        lines.append(f".super {cls.super_descriptor}")
    if cls.source is not None:
        lines.append(f'.source "{escape(cls.source)}"')
    for iface in cls.interfaces:
        lines.append(f".implements {iface}")
    if cls.fields:
        lines.append("")
    for fdef in cls.fields:
        lines.append(f".field {' '.join(fdef.flags + (fdef.name + ':' + fdef.type,))}"
                     + _format_initial(fdef))
    for m in cls.methods:
        lines.append("")
        lines.append(format_method(m))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# loading


def _iter_smali_files(paths: Iterable[str | os.PathLike]) -> Iterable[Path]:
    for p in paths:
        p = Path(p)
        if p.is_dir():
            yield from sorted(p.rglob("*.smali"))
        else:
            yield p


def load_program(paths: Iterable[str | os.PathLike]) -> SmaliProgram:
    """Parse every ``.smali`` file under ``paths``.

    Unreadable or malformed files, and duplicate class descriptors, are
    recorded in ``program.failures`` instead of aborting the load.
    """
    program = SmaliProgram()
    for path in _iter_smali_files(paths):
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            program.failures.append(LoadFailure(str(path), f"IoError: {exc}"))
            continue
        try:
            cls = parse_smali(text, str(path))
        except SmaliSyntaxError as exc:
            program.failures.append(LoadFailure(str(path), f"SyntaxError: {exc}"))
            continue
        if cls.descriptor in program.classes:
            other = program.classes[cls.descriptor].source_file
            program.failures.append(
                LoadFailure(str(path), f"DuplicateClass: {cls.descriptor} already defined in {other}"))
            continue
        program.classes[cls.descriptor] = cls
    return program


def program_from_classes(classes: Iterable[SmaliClass]) -> SmaliProgram:
    program = SmaliProgram()
    for cls in classes:
        if cls.descriptor in program.classes:
            raise DuplicateClass(cls.descriptor)
        program.classes[cls.descriptor] = cls
    return program


def class_path(descriptor: str) -> str:
    """Relative ``.smali`` path for a class descriptor (``Lu/NS;`` -> ``u/NS.smali``)."""
    return descriptor[1:-1] + ".smali"


def write_program(program: SmaliProgram, root: str | os.PathLike) -> list[Path]:
    root = Path(root)
    written = []
    for desc in sorted(program.classes):
        target = root / class_path(desc)
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(print_smali(program.classes[desc]), encoding="utf-8")
        written.append(target)
    return written
