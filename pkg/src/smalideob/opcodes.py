"""Dalvik mnemonic table.

Each mnemonic maps to an operand layout used by the parser and printer.
The layout names describe the textual operand sequence:

    r      register            lit    integer literal
    str    string literal      type   type descriptor
    field  field reference     meth   method reference
    label  branch label        list   ``{v0, v1}`` or ``{v0 .. v4}`` register list
"""

from __future__ import annotations

_LAYOUTS: dict[str, str] = {}


def _add(layout: str, *names: str) -> None:
    for name in names:
        _LAYOUTS[name] = layout


_add("", "nop", "return-void", "return-void-barrier", "return-void-no-barrier")
_add("r", "move-result", "move-result-wide", "move-result-object", "move-exception",
     "return", "return-wide", "return-object", "monitor-enter", "monitor-exit", "throw")
_add("r,r", "move", "move/from16", "move/16", "move-wide", "move-wide/from16",
     "move-wide/16", "move-object", "move-object/from16", "move-object/16",
     "array-length")
_add("r,lit", "const/4", "const/16", "const", "const/high16", "const-wide/16",
     "const-wide/32", "const-wide", "const-wide/high16")
_add("r,str", "const-string", "const-string/jumbo")
_add("r,type", "const-class", "check-cast", "new-instance")
_add("r,r,type", "instance-of", "new-array")
_add("list,type", "filled-new-array", "filled-new-array/range")
_add("r,label", "fill-array-data", "packed-switch", "sparse-switch")
_add("label", "goto", "goto/16", "goto/32")
_add("r,r,r", "cmpl-float", "cmpg-float", "cmpl-double", "cmpg-double", "cmp-long")
_add("r,r,label", "if-eq", "if-ne", "if-lt", "if-ge", "if-gt", "if-le")
_add("r,label", "if-eqz", "if-nez", "if-ltz", "if-gez", "if-gtz", "if-lez")

ARRAY_SUFFIXES = ("", "-wide", "-object", "-boolean", "-byte", "-char", "-short")
for _sfx in ARRAY_SUFFIXES:
    _add("r,r,r", "aget" + _sfx, "aput" + _sfx)
    _add("r,r,field", "iget" + _sfx, "iput" + _sfx)
    _add("r,field", "sget" + _sfx, "sput" + _sfx)
    _add("r,r,field", "iget" + _sfx + "-quick", "iput" + _sfx + "-quick")
    _add("r,field", "sget" + _sfx + "-volatile", "sput" + _sfx + "-volatile")
    _add("r,r,field", "iget" + _sfx + "-volatile", "iput" + _sfx + "-volatile")

for _kind in ("virtual", "super", "direct", "static", "interface"):
    _add("list,meth", "invoke-" + _kind, "invoke-" + _kind + "/range")
_add("list,meth,type", "invoke-polymorphic", "invoke-polymorphic/range")
_add("list,raw", "invoke-custom", "invoke-custom/range")
_add("r,raw", "const-method-handle", "const-method-type")

UNARY_OPS = (
    "neg-int", "not-int", "neg-long", "not-long", "neg-float", "neg-double",
    "int-to-long", "int-to-float", "int-to-double", "long-to-int", "long-to-float",
    "long-to-double", "float-to-int", "float-to-long", "float-to-double",
    "double-to-int", "double-to-long", "double-to-float", "int-to-byte",
    "int-to-char", "int-to-short",
)
_add("r,r", *UNARY_OPS)

INT_BINOPS = ("add", "sub", "mul", "div", "rem", "and", "or", "xor", "shl", "shr", "ushr")
FLOAT_BINOPS = ("add", "sub", "mul", "div", "rem")

BINARY_OPS: list[str] = []
for _op in INT_BINOPS:
    BINARY_OPS += [f"{_op}-int", f"{_op}-long"]
for _op in FLOAT_BINOPS:
    BINARY_OPS += [f"{_op}-float", f"{_op}-double"]
_add("r,r,r", *BINARY_OPS)
_add("r,r", *(name + "/2addr" for name in BINARY_OPS))

LIT16_OPS = ("add-int/lit16", "rsub-int", "mul-int/lit16", "div-int/lit16",
             "rem-int/lit16", "and-int/lit16", "or-int/lit16", "xor-int/lit16")
LIT8_OPS = ("add-int/lit8", "rsub-int/lit8", "mul-int/lit8", "div-int/lit8",
            "rem-int/lit8", "and-int/lit8", "or-int/lit8", "xor-int/lit8",
            "shl-int/lit8", "shr-int/lit8", "ushr-int/lit8")
_add("r,r,lit", *LIT16_OPS, *LIT8_OPS)

EMIT = "emit-string"
"""Pseudo-opcode appended to extracted slices; never produced by the parser."""

LAYOUTS = dict(_LAYOUTS)

IF_OPS = frozenset(n for n in LAYOUTS if n.startswith("if-"))
GOTO_OPS = frozenset(("goto", "goto/16", "goto/32"))
SWITCH_OPS = frozenset(("packed-switch", "sparse-switch"))
RETURN_OPS = frozenset(n for n in LAYOUTS if n.startswith("return"))
TERMINAL_OPS = RETURN_OPS | {"throw"}
INVOKE_OPS = frozenset(n for n in LAYOUTS if n.startswith("invoke-"))
MOVE_RESULT_OPS = frozenset(("move-result", "move-result-wide", "move-result-object"))
CONST_STRING_OPS = frozenset(("const-string", "const-string/jumbo"))

# opcodes counted against the forward-search conditional budget
CONDITIONAL_OPS = IF_OPS | SWITCH_OPS
# opcodes carried into every slice regardless of data dependencies
CONTROL_OPS = IF_OPS | SWITCH_OPS | GOTO_OPS


def base_name(opcode: str) -> str:
    """Strip ``/range``, ``/from16``, ``/16`` and ``/jumbo`` width variants."""
    for sfx in ("/range", "/from16", "/16", "/jumbo", "/32"):
        if opcode.endswith(sfx) and not opcode.startswith(("const", "goto")):
            return opcode[: -len(sfx)]
    return opcode


def is_known(opcode: str) -> bool:
    return opcode in LAYOUTS


def is_wide_const(opcode: str) -> bool:
    return opcode.startswith("const-wide")
