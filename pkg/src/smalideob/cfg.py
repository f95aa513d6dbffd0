"""Intra-method control-flow graphs over statement indices."""

from __future__ import annotations

from dataclasses import dataclass, field

from . import opcodes as ops
from .frontend import MethodDef, Statement


class DanglingLabel(KeyError):
    pass


@dataclass(frozen=True)
class Cfg:
    node_count: int
    successors: dict[int, tuple[int, ...]]
    predecessors: dict[int, tuple[int, ...]]
    work: int = field(default=0, compare=False)  # elementary operations spent building

    @property
    def edge_count(self) -> int:
        return sum(len(s) for s in self.successors.values())

    def edges(self) -> list[tuple[int, int]]:
        return [(a, b) for a in range(self.node_count) for b in self.successors[a]]


def statement_successors(stmt: Statement, labels: dict[str, int], n: int) -> list[int]:
    """Successor indices of one statement; exception edges are not modelled."""
    op = stmt.opcode
    nxt = stmt.index + 1

    def target(label: str) -> int:
        try:
            return labels[label]
        except KeyError:
            raise DanglingLabel(f"statement {stmt.index}: undefined label :{label}") from None

    if op in ops.TERMINAL_OPS:
        return []
    if op in ops.GOTO_OPS:
        return [target(stmt.branch_targets[0])]
    succ = [nxt] if nxt < n else []
    if op in ops.IF_OPS or op in ops.SWITCH_OPS:
        for label in stmt.branch_targets:
            t = target(label)
            if t not in succ and t < n:
                succ.append(t)
    return succ


def build_cfg(method: MethodDef) -> Cfg:
    """Build the statement-level CFG of ``method`` in a single linear pass."""
    n = len(method.statements)
    succ: dict[int, tuple[int, ...]] = {}
    pred: dict[int, list[int]] = {i: [] for i in range(n)}
    work = 0
    for stmt in method.statements:
        out = statement_successors(stmt, method.labels, n)
        succ[stmt.index] = tuple(out)
        for t in out:
            pred[t].append(stmt.index)
        work += 1 + len(out)
    return Cfg(n, succ, {k: tuple(v) for k, v in pred.items()}, work)


def reachable_from(cfg: Cfg, start: int) -> set[int]:
    seen = {start}
    stack = [start]
    while stack:
        for t in cfg.successors[stack.pop()]:
            if t not in seen:
                seen.add(t)
                stack.append(t)
    return seen


def to_dot(cfg: Cfg, method: MethodDef | None = None) -> str:
    """Graphviz text for debugging."""
    name = method.name if method else "cfg"
    lines = [f'digraph "{name}" {{', "  node [shape=box, fontname=monospace];"]
    for i in range(cfg.node_count):
        text = str(method.statements[i]).replace('"', '\\"') if method else str(i)
        lines.append(f'  n{i} [label="{i}: {text}"];')
    for a, b in cfg.edges():
        lines.append(f"  n{a} -> n{b};")
    lines.append("}")
    return "\n".join(lines)
