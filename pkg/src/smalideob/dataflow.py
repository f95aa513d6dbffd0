"""Per-opcode register def/use semantics.

Registers are Dalvik ``vK`` names.  Wide (64-bit) operands occupy the pair
``vK``/``vK+1`` and are reported as both registers.

Besides the plain register writes, a few statements are treated as
*mutating* a reference operand so that in-place updates version the object
register: array/instance stores, ``fill-array-data``, constructor calls, and
invocations that receive a mutable (non-``String``) reference.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import opcodes as ops
from .frontend import Statement, parse_signature


class OpaqueOpcode(ValueError):
    pass


@dataclass(frozen=True)
class DefUse:
    defs: tuple[str, ...] = ()
    uses: tuple[str, ...] = ()
    produces_result: bool = False  # value consumed by a following move-result*
    takes_result: bool = False     # this is a move-result*


IMMUTABLE_TYPES = frozenset({
    "Ljava/lang/String;", "Ljava/lang/Integer;", "Ljava/lang/Long;",
    "Ljava/lang/Character;", "Ljava/lang/Short;", "Ljava/lang/Byte;",
    "Ljava/lang/Boolean;", "Ljava/lang/Float;", "Ljava/lang/Double;",
    "Ljava/lang/Class;",
})

_DST_WIDE = {"neg-long", "not-long", "neg-double", "int-to-long", "int-to-double",
             "float-to-long", "float-to-double", "long-to-double", "double-to-long"}
_SRC_WIDE = {"neg-long", "not-long", "neg-double", "long-to-int", "long-to-float",
             "double-to-int", "double-to-float", "long-to-double", "double-to-long"}


def pair(reg: str) -> tuple[str, str]:
    k = int(reg[1:])
    return reg, f"v{k + 1}"


def _w(reg: str, wide: bool) -> tuple[str, ...]:
    return pair(reg) if wide else (reg,)


def _is_wide_kind(op: str) -> bool:
    return "-wide" in op or op.endswith(("-long", "-double")) or "-long/" in op or "-double/" in op


def invoke_mutations(stmt: Statement) -> tuple[str, ...]:
    """Reference registers an invocation may update in place."""
    ref = stmt.method_ref
    if ref is None:
        return ()
    regs = list(stmt.registers)
    base = ops.base_name(stmt.opcode)
    out: list[str] = []
    pos = 0
    if base != "invoke-static":
        if regs:
            if ref.name == "<init>" or ref.cls not in IMMUTABLE_TYPES:
                out.append(regs[0])
        pos = 1
    try:
        params, _ = parse_signature(ref.signature)
    except ValueError:
        return tuple(out)
    for ptype in params:
        if pos >= len(regs):
            break
        if ptype.startswith(("L", "[")) and ptype not in IMMUTABLE_TYPES:
            out.append(regs[pos])
        pos += 2 if ptype in ("J", "D") else 1
    return tuple(dict.fromkeys(out))


def def_use(stmt: Statement) -> DefUse:
    op = stmt.opcode
    r = stmt.registers
    if op == ops.EMIT:
        return DefUse(uses=r)
    if op not in ops.LAYOUTS:
        raise OpaqueOpcode(f"statement {stmt.index}: opaque opcode {op}")
    base = ops.base_name(op)

    if op in ops.MOVE_RESULT_OPS:
        return DefUse(defs=_w(r[0], op == "move-result-wide"), takes_result=True)
    if op in ("nop", "return-void", "return-void-barrier", "return-void-no-barrier") \
            or op in ops.GOTO_OPS:
        return DefUse()
    if op == "move-exception":
        return DefUse(defs=r)
    if op in ops.RETURN_OPS or op in ("throw", "monitor-enter", "monitor-exit"):
        return DefUse(uses=_w(r[0], op == "return-wide"))
    if base in ("move", "move-object", "move-wide"):
        wide = base == "move-wide"
        return DefUse(defs=_w(r[0], wide), uses=_w(r[1], wide))
    if op == "array-length":
        return DefUse(defs=(r[0],), uses=(r[1],))
    if op.startswith("const"):
        return DefUse(defs=_w(r[0], ops.is_wide_const(op)))
    if op == "check-cast":
        return DefUse(defs=(r[0],), uses=(r[0],))
    if op == "new-instance":
        return DefUse(defs=(r[0],))
    if op in ("instance-of", "new-array"):
        return DefUse(defs=(r[0],), uses=(r[1],))
    if base == "filled-new-array":
        return DefUse(uses=r, produces_result=True)
    if op == "fill-array-data":
        return DefUse(defs=(r[0],), uses=(r[0],))
    if op in ops.SWITCH_OPS or op in ops.IF_OPS:
        return DefUse(uses=r)
    if op.startswith("cmp"):
        wide = op in ("cmpl-double", "cmpg-double", "cmp-long")
        return DefUse(defs=(r[0],), uses=_w(r[1], wide) + _w(r[2], wide))
    if op.startswith("aget"):
        return DefUse(defs=_w(r[0], op == "aget-wide"), uses=(r[1], r[2]))
    if op.startswith("aput"):
        return DefUse(defs=(r[1],), uses=_w(r[0], op == "aput-wide") + (r[1], r[2]))
    if op.startswith("iget"):
        return DefUse(defs=_w(r[0], op.startswith("iget-wide")), uses=(r[1],))
    if op.startswith("iput"):
        return DefUse(defs=(r[1],), uses=_w(r[0], op.startswith("iput-wide")) + (r[1],))
    if op.startswith("sget"):
        return DefUse(defs=_w(r[0], op.startswith("sget-wide")))
    if op.startswith("sput"):
        return DefUse(uses=_w(r[0], op.startswith("sput-wide")))
    if op in ops.INVOKE_OPS:
        produces = True
        if stmt.method_ref is not None:
            produces = stmt.method_ref.return_type != "V"
        return DefUse(defs=invoke_mutations(stmt), uses=r, produces_result=produces)
    if op in ops.UNARY_OPS:
        return DefUse(defs=_w(r[0], op in _DST_WIDE), uses=_w(r[1], op in _SRC_WIDE))
    if op in ops.LIT16_OPS or op in ops.LIT8_OPS:
        return DefUse(defs=(r[0],), uses=(r[1],))
    if op.endswith("/2addr"):
        kind = op[:-6]
        wide = _is_wide_kind(kind)
        shift = kind.startswith(("shl", "shr", "ushr"))
        return DefUse(defs=_w(r[0], wide), uses=_w(r[0], wide) + _w(r[1], wide and not shift))
    if op in ops.BINARY_OPS:
        wide = _is_wide_kind(op)
        shift = op.startswith(("shl", "shr", "ushr"))
        return DefUse(defs=_w(r[0], wide), uses=_w(r[1], wide) + _w(r[2], wide and not shift))
    if op in ("const-method-handle", "const-method-type"):
        return DefUse(defs=r)
    raise OpaqueOpcode(f"statement {stmt.index}: no dataflow rule for {op}")
