"""String-literal discovery and deobfuscation-candidate search."""

from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass
from typing import Sequence

from . import opcodes as ops
from .cfg import Cfg
from .frontend import MethodDef, MethodRef, Statement

STRING = "Ljava/lang/String;"

DEFAULT_EXCLUSIONS: tuple[str, ...] = (
    "okhttp3/",
    "com/squareup/okhttp",
    "com/android/volley",
    "androidx/",
    "android/support/",
    "kotlin/",
    "com/google/",
)

DEFAULT_MAX_CONDITIONALS = 5


class MissingMoveResult(LookupError):
    pass


class Condition(str, enum.Enum):
    CONSTRUCTOR_INIT = "ConstructorInit"
    STATIC_STRING_CALL = "StaticStringCall"
    CHECK_CAST_TO_STRING = "CheckCastToString"


@dataclass(frozen=True)
class LiteralSite:
    method: MethodRef
    stmt_index: int
    register: str
    value: str


@dataclass(frozen=True)
class SlicingCriterion:
    stmt_index: int
    register: str


@dataclass(frozen=True)
class DeobCandidate:
    literal: LiteralSite
    stmt_index: int
    condition: Condition
    criterion: SlicingCriterion

    @property
    def anchor(self) -> int:
        """Statement whose completion produces the criterion register's value.

        For constructor calls the criterion sits on the statement after the
        call, but the value of interest is the receiver right after ``<init>``.
        """
        if self.condition is Condition.CONSTRUCTOR_INIT:
            return self.stmt_index
        return self.criterion.stmt_index


def find_string_literals(method: MethodDef) -> list[LiteralSite]:
    return [
        LiteralSite(method.ref, s.index, s.registers[0], s.literal)
        for s in method.statements
        if s.opcode in ops.CONST_STRING_OPS and s.literal
    ]


def is_excluded_class(descriptor: str, exclusions: Sequence[str] = DEFAULT_EXCLUSIONS) -> bool:
    name = descriptor[1:] if descriptor.startswith("L") else descriptor
    return any(name.startswith(prefix) for prefix in exclusions)


def candidate_condition(stmt: Statement) -> Condition | None:
    base = ops.base_name(stmt.opcode)
    ref = stmt.method_ref
    if base == "invoke-direct" and ref is not None and ref.cls == STRING and ref.name == "<init>":
        return Condition.CONSTRUCTOR_INIT
    if base == "invoke-static" and ref is not None and ref.return_type == STRING:
        return Condition.STATIC_STRING_CALL
    if stmt.opcode == "check-cast" and stmt.type_ref == STRING:
        return Condition.CHECK_CAST_TO_STRING
    return None


def derive_criterion(stmt: Statement, method: MethodDef) -> SlicingCriterion:
    cond = candidate_condition(stmt)
    if cond is Condition.CONSTRUCTOR_INIT:
        return SlicingCriterion(stmt.index + 1, stmt.registers[0])
    if cond is Condition.STATIC_STRING_CALL:
        nxt = stmt.index + 1
        if nxt < len(method.statements) and method.statements[nxt].opcode == "move-result-object":
            return SlicingCriterion(nxt, method.statements[nxt].registers[0])
        raise MissingMoveResult(f"statement {stmt.index}: String result is discarded")
    if cond is Condition.CHECK_CAST_TO_STRING:
        return SlicingCriterion(stmt.index, stmt.registers[0])
    raise ValueError(f"statement {stmt.index} is not a deobfuscation candidate")


def find_deob_candidates(method: MethodDef, cfg: Cfg, literal: LiteralSite,
                         max_conditionals: int = DEFAULT_MAX_CONDITIONALS) -> list[DeobCandidate]:
    """Breadth-first forward search from the literal for String-producing statements.

    A search branch is dropped once it has passed more than
    ``max_conditionals`` if/switch statements; gotos are free.
    """
    if max_conditionals < 0:
        raise ValueError("max_conditionals must be >= 0")
    stmts = method.statements
    found: dict[int, DeobCandidate] = {}
    queue: deque[tuple[int, int]] = deque()
    seen: set[tuple[int, int]] = set()
    for t in cfg.successors[literal.stmt_index]:
        queue.append((t, 0))
        seen.add((t, 0))
    while queue:
        idx, spent = queue.popleft()
        stmt = stmts[idx]
        cond = candidate_condition(stmt)
        if cond is not None and idx not in found:
            try:
                crit = derive_criterion(stmt, method)
            except MissingMoveResult:
                crit = None
            if crit is not None:
                found[idx] = DeobCandidate(literal, idx, cond, crit)
        cost = spent + (1 if stmt.opcode in ops.CONDITIONAL_OPS else 0)
        if cost > max_conditionals:
            continue
        for t in cfg.successors[idx]:
            state = (t, cost)
            if state not in seen:
                seen.add(state)
                queue.append(state)
    return list(found.values())
