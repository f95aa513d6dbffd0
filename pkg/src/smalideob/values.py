"""Runtime value model for the slice interpreter.

Registers hold raw Dalvik bit patterns for primitives: a signed 32-bit
Python ``int`` for narrow values (floats as their IEEE bits), and a signed
64-bit ``int`` in the low register of a wide pair with :data:`WIDE_HI`
marking the high half.  References are Python objects; ``java.lang.String``
is a plain ``str`` of UTF-16 code units.  Null is the integer ``0``, as in
Dalvik where ``const/4 vX, 0`` doubles as a null reference.
"""

from __future__ import annotations

import math
import struct

MASK32 = 0xFFFFFFFF
MASK64 = 0xFFFFFFFFFFFFFFFF
INT_MIN, INT_MAX = -(1 << 31), (1 << 31) - 1
LONG_MIN, LONG_MAX = -(1 << 63), (1 << 63) - 1

_I = struct.Struct("<i")
_F = struct.Struct("<f")
_Q = struct.Struct("<q")
_D = struct.Struct("<d")


class _Marker:
    __slots__ = ("name",)

    def __init__(self, name: str):
        self.name = name

    def __repr__(self) -> str:
        return self.name


UNINIT = _Marker("<uninitialized>")
WIDE_HI = _Marker("<wide-high>")


def i32(x: int) -> int:
    return ((x + (1 << 31)) & MASK32) - (1 << 31)


def i64(x: int) -> int:
    return ((x + (1 << 63)) & MASK64) - (1 << 63)


def i16(x: int) -> int:
    return ((x + (1 << 15)) & 0xFFFF) - (1 << 15)


def i8(x: int) -> int:
    return ((x + 128) & 0xFF) - 128


def u16(x: int) -> int:
    return x & 0xFFFF


def bits_to_float(b: int) -> float:
    return _F.unpack(_I.pack(i32(b)))[0]


def float_to_bits(x: float) -> int:
    try:
        return _I.unpack(_F.pack(x))[0]
    except OverflowError:
        return _I.unpack(_F.pack(math.copysign(math.inf, x)))[0]


def bits_to_double(b: int) -> float:
    return _D.unpack(_Q.pack(i64(b)))[0]


def double_to_bits(x: float) -> int:
    return _Q.unpack(_D.pack(x))[0]


def long_to_float32(n: int) -> float:
    """Round an integer to the nearest float32 (ties to even) in one step."""
    if n == 0:
        return 0.0
    m = abs(n)
    nb = m.bit_length()
    if nb > 24:
        shift = nb - 24
        q, r = divmod(m, 1 << shift)
        half = 1 << (shift - 1)
        if r > half or (r == half and q & 1):
            q += 1
        m = q << shift
    return float(m) if n > 0 else -float(m)


def java_f2i(x: float, lo: int, hi: int) -> int:
    if math.isnan(x):
        return 0
    if x >= hi:
        return hi
    if x <= lo:
        return lo
    return int(x)


def java_div(a: int, b: int) -> int:
    q = abs(a) // abs(b)
    return -q if (a < 0) != (b < 0) else q


def java_rem(a: int, b: int) -> int:
    return a - b * java_div(a, b)


def java_fdiv(a: float, b: float) -> float:
    if b == 0.0:
        if a == 0.0 or math.isnan(a):
            return math.nan
        return math.copysign(math.inf, a) * math.copysign(1.0, b)
    return a / b


def java_fmod(a: float, b: float) -> float:
    if math.isnan(a) or math.isnan(b) or math.isinf(a) or b == 0.0:
        return math.nan
    if math.isinf(b):
        return a
    return math.fmod(a, b)


def java_fcmp(a: float, b: float, nan_result: int) -> int:
    if math.isnan(a) or math.isnan(b):
        return nan_result
    return (a > b) - (a < b)


# ---------------------------------------------------------------------------
# reference values


class ArrayVal:
    __slots__ = ("kind", "data")

    def __init__(self, kind: str, data: list):
        self.kind = kind  # element type descriptor
        self.data = data

    def __repr__(self) -> str:
        return f"ArrayVal({self.kind!r}, {self.data!r})"


class ObjectVal:
    __slots__ = ("cls", "fields", "native")

    def __init__(self, cls: str, native=None):
        self.cls = cls
        self.fields: dict[str, object] = {}
        self.native = native  # payload for modelled java.* objects

    def __repr__(self) -> str:
        return f"ObjectVal({self.cls})"


class StringBuilderVal:
    __slots__ = ("cls", "chars")

    def __init__(self, cls: str = "Ljava/lang/StringBuilder;", text: str = ""):
        self.cls = cls
        self.chars = list(text)

    def text(self) -> str:
        return "".join(self.chars)


class PendingString:
    """Result of ``new-instance Ljava/lang/String;`` before its constructor runs."""

    __slots__ = ()
    cls = "Ljava/lang/String;"


class ClassVal:
    __slots__ = ("descriptor",)

    def __init__(self, descriptor: str):
        self.descriptor = descriptor


def is_null(v) -> bool:
    return v == 0 and isinstance(v, int)


def to_units(text: str) -> str:
    """Re-express non-BMP code points as UTF-16 surrogate pairs."""
    if all(ord(c) < 0x10000 for c in text):
        return text
    raw = text.encode("utf-16-le", "surrogatepass")
    return "".join(chr(int.from_bytes(raw[i:i + 2], "little")) for i in range(0, len(raw), 2))


def from_units(units: str) -> str:
    """Join surrogate pairs back into code points (lone surrogates survive)."""
    return units.encode("utf-16-le", "surrogatepass").decode("utf-16-le", "surrogatepass")


def runtime_class(v) -> str:
    if isinstance(v, str):
        return "Ljava/lang/String;"
    if isinstance(v, (ObjectVal, StringBuilderVal)):
        return v.cls
    if isinstance(v, ArrayVal):
        return "[" + v.kind
    if isinstance(v, ClassVal):
        return "Ljava/lang/Class;"
    if isinstance(v, PendingString):
        return "Ljava/lang/String;"
    return "?"
