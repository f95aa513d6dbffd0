"""Built-in models of the ``java.*`` methods deobfuscation stubs rely on.

Each entry maps a full method reference to ``fn(vm, args)`` where ``args``
are Java-level arguments (receiver first for instance methods) and the
return value uses the register representation of :mod:`smalideob.values`.
"""

from __future__ import annotations

from typing import Callable

from .values import (
    ArrayVal, ObjectVal, StringBuilderVal, from_units, i8, i32, is_null, to_units,
)

BUILTINS: dict[str, Callable] = {}
STATIC_FIELDS: dict[str, Callable] = {}

FIXED_TIME_MILLIS = 1_600_000_000_000
STRING = "Ljava/lang/String;"
SB = "Ljava/lang/StringBuilder;"
SBUF = "Ljava/lang/StringBuffer;"


class _Err(Exception):
    pass


def builtin(*refs: str):
    def deco(fn):
        for ref in refs:
            BUILTINS[ref] = fn
        return fn
    return deco


def _rt_error(msg: str):
    from .vm import DalvikRuntimeError
    return DalvikRuntimeError(msg)


def _unsupported(msg: str):
    from .vm import Unsupported
    return Unsupported(msg)


def _str(v) -> str:
    if is_null(v):
        raise _rt_error("NullPointerException: null String")
    if not isinstance(v, str):
        raise _rt_error(f"expected String, got {type(v).__name__}")
    return v


def _arr(v) -> ArrayVal:
    if is_null(v):
        raise _rt_error("NullPointerException: null array")
    if not isinstance(v, ArrayVal):
        raise _rt_error("expected array")
    return v


def _index(text_len: int, i: int) -> None:
    if not 0 <= i < text_len:
        raise _rt_error(f"StringIndexOutOfBoundsException: index {i}, length {text_len}")


def _range(length: int, start: int, end: int) -> None:
    if start < 0 or end > length or start > end:
        raise _rt_error(f"StringIndexOutOfBoundsException: [{start}, {end}) of {length}")


def java_hash(text: str) -> int:
    h = 0
    for ch in text:
        h = (31 * h + ord(ch)) & 0xFFFFFFFF
    return i32(h)


def _charset(name) -> str:
    if isinstance(name, ObjectVal) and name.cls == "Ljava/nio/charset/Charset;":
        return name.native
    key = _str(name).lower().replace("_", "-")
    aliases = {"utf8": "utf-8", "iso-8859-1": "latin-1", "us-ascii": "ascii", "ascii": "ascii",
               "utf-16": "utf-16", "utf-16le": "utf-16-le", "utf-16be": "utf-16-be",
               "utf-8": "utf-8", "latin1": "latin-1"}
    if key not in aliases:
        raise _rt_error(f"UnsupportedEncodingException: {name}")
    return aliases[key]


def decode_bytes(values, charset: str = "utf-8") -> str:
    raw = bytes(v & 0xFF for v in values)
    if charset == "utf-16":
        charset = "utf-16-be" if not raw[:2] in (b"\xff\xfe",) else "utf-16"
    text = raw.decode(charset, errors="replace")
    return to_units(text)


def encode_units(text: str, charset: str = "utf-8") -> list[int]:
    data = from_units(text).encode(charset, errors="replace" if charset != "utf-8" else "surrogatepass")
    if charset == "utf-8":
        data = from_units(text).encode("utf-8", errors="replace")
    return [i8(b) for b in data]


def to_java_string(v) -> str:
    """``String.valueOf(Object)`` for interpreter values."""
    if isinstance(v, str):
        return v
    if isinstance(v, StringBuilderVal):
        return v.text()
    if is_null(v):
        return "null"
    if isinstance(v, ObjectVal) and v.cls == "Ljava/lang/Integer;":
        return str(v.native)
    if isinstance(v, ObjectVal) and v.cls == "Ljava/lang/Character;":
        return chr(v.native)
    raise _unsupported(f"toString of {type(v).__name__}")


# ---------------------------------------------------------------------------
# java.lang.Object


@builtin("Ljava/lang/Object;-><init>()V")
def _object_init(vm, a):
    return None


@builtin("Ljava/lang/Object;->hashCode()I")
def _object_hash(vm, a):
    if isinstance(a[0], str):
        return java_hash(a[0])
    return i32(id(a[0]) >> 4)


@builtin("Ljava/lang/Object;->equals(Ljava/lang/Object;)Z")
def _object_equals(vm, a):
    if isinstance(a[0], str):
        return int(a[0] == a[1])
    return int(a[0] is a[1])


@builtin("Ljava/lang/Object;->toString()Ljava/lang/String;")
def _object_to_string(vm, a):
    return to_java_string(a[0])


@builtin("Ljava/lang/Object;->getClass()Ljava/lang/Class;")
def _object_get_class(vm, a):
    from .values import ClassVal, runtime_class
    return ClassVal(runtime_class(a[0]))


@builtin("Ljava/lang/Class;->getName()Ljava/lang/String;",
         "Ljava/lang/Class;->getSimpleName()Ljava/lang/String;")
def _class_name(vm, a):
    desc = a[0].descriptor
    name = desc[1:-1].replace("/", ".") if desc.startswith("L") else desc
    return name


# ---------------------------------------------------------------------------
# java.lang.String constructors (the receiver is a PendingString placeholder)


@builtin(f"{STRING}-><init>()V")
def _s_init_empty(vm, a):
    return ""


@builtin(f"{STRING}-><init>(Ljava/lang/String;)V")
def _s_init_copy(vm, a):
    return _str(a[1])


@builtin(f"{STRING}-><init>([C)V")
def _s_init_chars(vm, a):
    return "".join(chr(c & 0xFFFF) for c in _arr(a[1]).data)


@builtin(f"{STRING}-><init>([CII)V")
def _s_init_chars_range(vm, a):
    data = _arr(a[1]).data
    off, count = a[2], a[3]
    _range(len(data), off, off + count)
    return "".join(chr(c & 0xFFFF) for c in data[off:off + count])


@builtin(f"{STRING}-><init>([B)V")
def _s_init_bytes(vm, a):
    return decode_bytes(_arr(a[1]).data)


@builtin(f"{STRING}-><init>([BII)V")
def _s_init_bytes_range(vm, a):
    data = _arr(a[1]).data
    off, count = a[2], a[3]
    _range(len(data), off, off + count)
    return decode_bytes(data[off:off + count])


@builtin(f"{STRING}-><init>([BLjava/lang/String;)V",
         f"{STRING}-><init>([BLjava/nio/charset/Charset;)V")
def _s_init_bytes_charset(vm, a):
    return decode_bytes(_arr(a[1]).data, _charset(a[2]))


@builtin(f"{STRING}-><init>(Ljava/lang/StringBuilder;)V",
         f"{STRING}-><init>(Ljava/lang/StringBuffer;)V")
def _s_init_builder(vm, a):
    return a[1].text()


# ---------------------------------------------------------------------------
# java.lang.String instance methods


@builtin(f"{STRING}->length()I")
def _s_length(vm, a):
    return len(_str(a[0]))


@builtin(f"{STRING}->isEmpty()Z")
def _s_is_empty(vm, a):
    return int(not _str(a[0]))


@builtin(f"{STRING}->charAt(I)C")
def _s_char_at(vm, a):
    s = _str(a[0])
    _index(len(s), a[1])
    return ord(s[a[1]])


@builtin(f"{STRING}->toCharArray()[C")
def _s_to_char_array(vm, a):
    return ArrayVal("C", [ord(c) for c in _str(a[0])])


@builtin(f"{STRING}->getBytes()[B")
def _s_get_bytes(vm, a):
    return ArrayVal("B", encode_units(_str(a[0])))


@builtin(f"{STRING}->getBytes(Ljava/lang/String;)[B",
         f"{STRING}->getBytes(Ljava/nio/charset/Charset;)[B")
def _s_get_bytes_charset(vm, a):
    return ArrayVal("B", encode_units(_str(a[0]), _charset(a[1])))


@builtin(f"{STRING}->intern()Ljava/lang/String;", f"{STRING}->toString()Ljava/lang/String;")
def _s_identity(vm, a):
    return _str(a[0])


@builtin(f"{STRING}->equals(Ljava/lang/Object;)Z")
def _s_equals(vm, a):
    return int(isinstance(a[1], str) and _str(a[0]) == a[1])


@builtin(f"{STRING}->hashCode()I")
def _s_hash(vm, a):
    return java_hash(_str(a[0]))


@builtin(f"{STRING}->substring(I)Ljava/lang/String;")
def _s_substring1(vm, a):
    s = _str(a[0])
    _range(len(s), a[1], len(s))
    return s[a[1]:]


@builtin(f"{STRING}->substring(II)Ljava/lang/String;")
def _s_substring2(vm, a):
    s = _str(a[0])
    _range(len(s), a[1], a[2])
    return s[a[1]:a[2]]


@builtin(f"{STRING}->concat(Ljava/lang/String;)Ljava/lang/String;")
def _s_concat(vm, a):
    return _str(a[0]) + _str(a[1])


@builtin(f"{STRING}->indexOf(I)I")
def _s_index_of_char(vm, a):
    return _str(a[0]).find(chr(a[1] & 0xFFFF))


@builtin(f"{STRING}->indexOf(Ljava/lang/String;)I")
def _s_index_of(vm, a):
    return _str(a[0]).find(_str(a[1]))


@builtin(f"{STRING}->trim()Ljava/lang/String;")
def _s_trim(vm, a):
    s = _str(a[0])
    start, end = 0, len(s)
    while start < end and ord(s[start]) <= 0x20:
        start += 1
    while end > start and ord(s[end - 1]) <= 0x20:
        end -= 1
    return s[start:end]


@builtin(f"{STRING}->toUpperCase()Ljava/lang/String;")
def _s_upper(vm, a):
    return "".join(c.upper() if c.isascii() else c for c in _str(a[0]))


@builtin(f"{STRING}->toLowerCase()Ljava/lang/String;")
def _s_lower(vm, a):
    return "".join(c.lower() if c.isascii() else c for c in _str(a[0]))


@builtin(f"{STRING}->replace(CC)Ljava/lang/String;")
def _s_replace_char(vm, a):
    return _str(a[0]).replace(chr(a[1] & 0xFFFF), chr(a[2] & 0xFFFF))


@builtin(f"{STRING}->startsWith(Ljava/lang/String;)Z")
def _s_starts(vm, a):
    return int(_str(a[0]).startswith(_str(a[1])))


@builtin(f"{STRING}->endsWith(Ljava/lang/String;)Z")
def _s_ends(vm, a):
    return int(_str(a[0]).endswith(_str(a[1])))


@builtin(f"{STRING}->compareTo(Ljava/lang/String;)I")
def _s_compare(vm, a):
    x, y = _str(a[0]), _str(a[1])
    for cx, cy in zip(x, y):
        if cx != cy:
            return ord(cx) - ord(cy)
    return len(x) - len(y)


# ---------------------------------------------------------------------------
# java.lang.String static helpers


@builtin(f"{STRING}->valueOf(I)Ljava/lang/String;", "Ljava/lang/Integer;->toString(I)Ljava/lang/String;")
def _s_value_of_int(vm, a):
    return str(a[0])


@builtin(f"{STRING}->valueOf(J)Ljava/lang/String;", "Ljava/lang/Long;->toString(J)Ljava/lang/String;")
def _s_value_of_long(vm, a):
    return str(a[0])


@builtin(f"{STRING}->valueOf(C)Ljava/lang/String;",
         "Ljava/lang/Character;->toString(C)Ljava/lang/String;")
def _s_value_of_char(vm, a):
    return chr(a[0] & 0xFFFF)


@builtin(f"{STRING}->valueOf(Z)Ljava/lang/String;")
def _s_value_of_bool(vm, a):
    return "true" if a[0] else "false"


@builtin(f"{STRING}->valueOf([C)Ljava/lang/String;", f"{STRING}->copyValueOf([C)Ljava/lang/String;")
def _s_value_of_chars(vm, a):
    return "".join(chr(c & 0xFFFF) for c in _arr(a[0]).data)


@builtin(f"{STRING}->valueOf([CII)Ljava/lang/String;")
def _s_value_of_chars_range(vm, a):
    data = _arr(a[0]).data
    _range(len(data), a[1], a[1] + a[2])
    return "".join(chr(c & 0xFFFF) for c in data[a[1]:a[1] + a[2]])


@builtin(f"{STRING}->valueOf(Ljava/lang/Object;)Ljava/lang/String;")
def _s_value_of_object(vm, a):
    return to_java_string(a[0])


# ---------------------------------------------------------------------------
# StringBuilder / StringBuffer


def _sb(v) -> StringBuilderVal:
    if not isinstance(v, StringBuilderVal):
        raise _rt_error("expected StringBuilder")
    return v


def _sb_methods(cls: str) -> None:
    @builtin(f"{cls}-><init>()V", f"{cls}-><init>(I)V")
    def _init(vm, a):
        _sb(a[0]).chars = []

    @builtin(f"{cls}-><init>(Ljava/lang/String;)V", f"{cls}-><init>(Ljava/lang/CharSequence;)V")
    def _init_str(vm, a):
        _sb(a[0]).chars = list(to_java_string(a[1]))

    def ret_self(fn):
        def wrapped(vm, a):
            fn(_sb(a[0]), a)
            return a[0]
        return wrapped

    BUILTINS[f"{cls}->append(C){cls}"] = ret_self(lambda sb, a: sb.chars.append(chr(a[1] & 0xFFFF)))
    BUILTINS[f"{cls}->append(I){cls}"] = ret_self(lambda sb, a: sb.chars.extend(str(a[1])))
    BUILTINS[f"{cls}->append(J){cls}"] = ret_self(lambda sb, a: sb.chars.extend(str(a[1])))
    BUILTINS[f"{cls}->append(Z){cls}"] = ret_self(
        lambda sb, a: sb.chars.extend("true" if a[1] else "false"))
    BUILTINS[f"{cls}->append([C){cls}"] = ret_self(
        lambda sb, a: sb.chars.extend(chr(c & 0xFFFF) for c in _arr(a[1]).data))
    for sig in ("Ljava/lang/String;", "Ljava/lang/Object;", "Ljava/lang/CharSequence;"):
        BUILTINS[f"{cls}->append({sig}){cls}"] = ret_self(
            lambda sb, a: sb.chars.extend(to_java_string(a[1])))
    BUILTINS[f"{cls}->reverse(){cls}"] = ret_self(lambda sb, a: sb.chars.reverse())

    @builtin(f"{cls}->toString()Ljava/lang/String;")
    def _to_string(vm, a):
        return _sb(a[0]).text()

    @builtin(f"{cls}->length()I")
    def _length(vm, a):
        return len(_sb(a[0]).chars)

    @builtin(f"{cls}->charAt(I)C")
    def _char_at(vm, a):
        sb = _sb(a[0])
        _index(len(sb.chars), a[1])
        return ord(sb.chars[a[1]])

    @builtin(f"{cls}->setCharAt(IC)V")
    def _set_char_at(vm, a):
        sb = _sb(a[0])
        _index(len(sb.chars), a[1])
        sb.chars[a[1]] = chr(a[2] & 0xFFFF)

    @builtin(f"{cls}->setLength(I)V")
    def _set_length(vm, a):
        sb = _sb(a[0])
        n = a[1]
        sb.chars = sb.chars[:n] + ["\0"] * max(0, n - len(sb.chars))

    @builtin(f"{cls}->deleteCharAt(I){cls}")
    def _delete_char_at(vm, a):
        sb = _sb(a[0])
        _index(len(sb.chars), a[1])
        del sb.chars[a[1]]
        return sb

    @builtin(f"{cls}->insert(IC){cls}")
    def _insert_char(vm, a):
        sb = _sb(a[0])
        _range(len(sb.chars), a[1], a[1])
        sb.chars.insert(a[1], chr(a[2] & 0xFFFF))
        return sb


_sb_methods(SB)
_sb_methods(SBUF)


# ---------------------------------------------------------------------------
# boxing and numeric helpers


@builtin("Ljava/lang/Integer;->valueOf(I)Ljava/lang/Integer;")
def _int_box(vm, a):
    return ObjectVal("Ljava/lang/Integer;", a[0])


@builtin("Ljava/lang/Integer;->intValue()I")
def _int_unbox(vm, a):
    return a[0].native


@builtin("Ljava/lang/Character;->valueOf(C)Ljava/lang/Character;")
def _char_box(vm, a):
    return ObjectVal("Ljava/lang/Character;", a[0])


@builtin("Ljava/lang/Character;->charValue()C")
def _char_unbox(vm, a):
    return a[0].native


def _parse_int(text: str, radix: int, lo: int, hi: int) -> int:
    try:
        value = int(text, radix)
    except ValueError:
        raise _rt_error(f"NumberFormatException: {text!r}") from None
    if "_" in text or text.strip() != text or not lo <= value <= hi:
        raise _rt_error(f"NumberFormatException: {text!r}")
    return value


@builtin("Ljava/lang/Integer;->parseInt(Ljava/lang/String;)I")
def _parse_int10(vm, a):
    return _parse_int(_str(a[0]), 10, -(1 << 31), (1 << 31) - 1)


@builtin("Ljava/lang/Integer;->parseInt(Ljava/lang/String;I)I")
def _parse_int_radix(vm, a):
    return _parse_int(_str(a[0]), a[1], -(1 << 31), (1 << 31) - 1)


@builtin("Ljava/lang/Long;->parseLong(Ljava/lang/String;)J")
def _parse_long(vm, a):
    return _parse_int(_str(a[0]), 10, -(1 << 63), (1 << 63) - 1)


@builtin("Ljava/lang/Integer;->toHexString(I)Ljava/lang/String;")
def _to_hex(vm, a):
    return f"{a[0] & 0xFFFFFFFF:x}"


@builtin("Ljava/lang/Integer;->toString(II)Ljava/lang/String;")
def _int_to_string_radix(vm, a):
    value, radix = a
    if not 2 <= radix <= 36:
        radix = 10
    digits = "0123456789abcdefghijklmnopqrstuvwxyz"
    n, out = abs(value), []
    while True:
        n, d = divmod(n, radix)
        out.append(digits[d])
        if not n:
            break
    return ("-" if value < 0 else "") + "".join(reversed(out))


@builtin("Ljava/lang/Character;->digit(CI)I")
def _char_digit(vm, a):
    ch, radix = chr(a[0] & 0xFFFF), a[1]
    try:
        d = int(ch, 36)
    except ValueError:
        return -1
    return d if d < radix else -1


@builtin("Ljava/lang/Character;->forDigit(II)C")
def _char_for_digit(vm, a):
    d, radix = a
    if not 2 <= radix <= 36 or not 0 <= d < radix:
        return 0
    return ord("0123456789abcdefghijklmnopqrstuvwxyz"[d])


@builtin("Ljava/lang/Character;->isDigit(C)Z")
def _char_is_digit(vm, a):
    return int(chr(a[0] & 0xFFFF).isdigit())


@builtin("Ljava/lang/Character;->isLetter(C)Z")
def _char_is_letter(vm, a):
    return int(chr(a[0] & 0xFFFF).isalpha())


@builtin("Ljava/lang/Character;->toUpperCase(C)C")
def _char_upper(vm, a):
    up = chr(a[0] & 0xFFFF).upper()
    return ord(up) if len(up) == 1 else a[0]


@builtin("Ljava/lang/Character;->toLowerCase(C)C")
def _char_lower(vm, a):
    low = chr(a[0] & 0xFFFF).lower()
    return ord(low) if len(low) == 1 else a[0]


@builtin("Ljava/lang/Math;->abs(I)I")
def _abs(vm, a):
    return i32(abs(a[0]))


@builtin("Ljava/lang/Math;->max(II)I")
def _max(vm, a):
    return max(a)


@builtin("Ljava/lang/Math;->min(II)I")
def _min(vm, a):
    return min(a)


@builtin("Ljava/lang/Float;->intBitsToFloat(I)F", "Ljava/lang/Float;->floatToRawIntBits(F)I")
def _float_bits(vm, a):
    return a[0]


@builtin("Ljava/lang/Double;->longBitsToDouble(J)D", "Ljava/lang/Double;->doubleToRawLongBits(D)J")
def _double_bits(vm, a):
    return a[0]


# ---------------------------------------------------------------------------
# java.lang.System, arrays


@builtin("Ljava/lang/System;->currentTimeMillis()J")
def _millis(vm, a):
    return FIXED_TIME_MILLIS


@builtin("Ljava/lang/System;->nanoTime()J")
def _nanos(vm, a):
    return FIXED_TIME_MILLIS * 1_000_000


@builtin("Ljava/lang/System;->arraycopy(Ljava/lang/Object;ILjava/lang/Object;II)V")
def _arraycopy(vm, a):
    src, sp, dst, dp, n = _arr(a[0]), a[1], _arr(a[2]), a[3], a[4]
    if n < 0 or sp < 0 or dp < 0 or sp + n > len(src.data) or dp + n > len(dst.data):
        raise _rt_error("ArrayIndexOutOfBoundsException: arraycopy")
    dst.data[dp:dp + n] = src.data[sp:sp + n]


@builtin("Ljava/lang/System;->identityHashCode(Ljava/lang/Object;)I")
def _identity_hash(vm, a):
    return i32(id(a[0]) >> 4)


for _kind in "BCIJSZ":
    @builtin(f"[{_kind}->clone()Ljava/lang/Object;")
    def _clone(vm, a):
        arr = _arr(a[0])
        return ArrayVal(arr.kind, list(arr.data))

    @builtin(f"Ljava/util/Arrays;->copyOf([{_kind}I)[{_kind}")
    def _copy_of(vm, a):
        arr = _arr(a[0])
        n = a[1]
        if n < 0:
            raise _rt_error("NegativeArraySizeException")
        return ArrayVal(arr.kind, (arr.data + [0] * n)[:n])

    @builtin(f"Ljava/util/Arrays;->copyOfRange([{_kind}II)[{_kind}")
    def _copy_of_range(vm, a):
        arr = _arr(a[0])
        lo, hi = a[1], a[2]
        if lo < 0 or lo > len(arr.data) or lo > hi:
            raise _rt_error("ArrayIndexOutOfBoundsException: copyOfRange")
        return ArrayVal(arr.kind, (arr.data[lo:] + [0] * (hi - lo))[:hi - lo])


# ---------------------------------------------------------------------------
# charsets


def _charset_obj(name: str) -> ObjectVal:
    return ObjectVal("Ljava/nio/charset/Charset;", name)


STATIC_FIELDS["Ljava/nio/charset/StandardCharsets;->UTF_8:Ljava/nio/charset/Charset;"] = \
    lambda: _charset_obj("utf-8")
STATIC_FIELDS["Ljava/nio/charset/StandardCharsets;->ISO_8859_1:Ljava/nio/charset/Charset;"] = \
    lambda: _charset_obj("latin-1")
STATIC_FIELDS["Ljava/nio/charset/StandardCharsets;->US_ASCII:Ljava/nio/charset/Charset;"] = \
    lambda: _charset_obj("ascii")


@builtin("Ljava/nio/charset/Charset;->forName(Ljava/lang/String;)Ljava/nio/charset/Charset;")
def _charset_for_name(vm, a):
    return _charset_obj(_charset(a[0]))


# ---------------------------------------------------------------------------
# call-stack introspection


def _frame_element(ref) -> ObjectVal:
    return ObjectVal("Ljava/lang/StackTraceElement;", ref)


@builtin("Ljava/lang/Thread;->currentThread()Ljava/lang/Thread;")
def _current_thread(vm, a):
    return ObjectVal("Ljava/lang/Thread;")


@builtin("Ljava/lang/Thread;->getStackTrace()[Ljava/lang/StackTraceElement;")
def _thread_stack(vm, a):
    from .frontend import MethodRef
    frames = [MethodRef("Ljava/lang/Thread;", "getStackTrace", "()[Ljava/lang/StackTraceElement;")]
    frames += vm.stack_trace()
    return ArrayVal("Ljava/lang/StackTraceElement;", [_frame_element(r) for r in frames])


@builtin("Ljava/lang/Throwable;-><init>()V", "Ljava/lang/Exception;-><init>()V")
def _throwable_init(vm, a):
    a[0].native = vm.stack_trace()


@builtin("Ljava/lang/Throwable;->getStackTrace()[Ljava/lang/StackTraceElement;",
         "Ljava/lang/Exception;->getStackTrace()[Ljava/lang/StackTraceElement;")
def _throwable_stack(vm, a):
    return ArrayVal("Ljava/lang/StackTraceElement;", [_frame_element(r) for r in a[0].native or []])


@builtin("Ljava/lang/StackTraceElement;->getClassName()Ljava/lang/String;")
def _ste_class(vm, a):
    return a[0].native.cls[1:-1].replace("/", ".")


@builtin("Ljava/lang/StackTraceElement;->getMethodName()Ljava/lang/String;")
def _ste_method(vm, a):
    return a[0].native.name
