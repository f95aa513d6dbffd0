"""Optimistic backward slicing over per-path register dependency graphs.

For a literal ``s`` and a candidate anchor ``t`` the slicer

1. enumerates execution paths from ``s`` to ``t`` in the method CFG,
2. builds a register dependency graph (RDG) for each path, whose nodes are
   ``(register, version)`` pairs,
3. rejects the candidate unless the criterion node reaches the literal node
   in every RDG,
4. collects the statements behind every node reachable from the criterion,
   plus all control-flow statements met on any path, and
5. if the slice still reads registers that were never written between ``s``
   and ``t``, searches from the method entry to ``s`` for their definitions.
"""

from __future__ import annotations

import bisect
from collections import deque
from dataclasses import dataclass, field, replace
from typing import NamedTuple

from . import opcodes as ops
from .cfg import Cfg
from .dataflow import OpaqueOpcode, def_use
from .frontend import MethodDef, MethodRef, Statement
from .scanner import DeobCandidate, LiteralSite, SlicingCriterion


class SliceRejected(Exception):
    """The candidate cannot yield an executable slice; try the next one."""


class NoPath(SliceRejected):
    pass


class LiteralIndependent(SliceRejected):
    pass


class UnresolvableRegister(SliceRejected):
    pass


class OpaqueStatement(SliceRejected):
    pass


@dataclass(frozen=True)
class PathLimits:
    bfs_queue_cap: int = 4096
    max_paths: int = 64
    loop_budget: int = 1        # times each back edge may be taken per path
    max_expansions: int = 200_000


@dataclass(frozen=True)
class ExecutionPath:
    statements: tuple[int, ...]

    def __len__(self) -> int:
        return len(self.statements)

    def __iter__(self):
        return iter(self.statements)


class RdgNode(NamedTuple):
    register: str
    version: int


@dataclass(frozen=True)
class RdgStep:
    position: int
    stmt_index: int
    reads: tuple[RdgNode, ...]
    writes: tuple[RdgNode, ...]
    partner: int | None = None  # invoke feeding a move-result


@dataclass
class Rdg:
    path: ExecutionPath
    nodes: set[RdgNode] = field(default_factory=set)
    edges: set[tuple[RdgNode, RdgNode]] = field(default_factory=set)  # (dependent, dependency)
    def_stmt: dict[RdgNode, int] = field(default_factory=dict)
    use_stmts: dict[RdgNode, set[int]] = field(default_factory=dict)
    undefined: set[str] = field(default_factory=set)
    steps: list[RdgStep] = field(default_factory=list)
    current: dict[str, int] = field(default_factory=dict)
    def_step: dict[RdgNode, int] = field(default_factory=dict)
    use_steps: dict[RdgNode, list[int]] = field(default_factory=dict)

    def node(self, register: str) -> RdgNode:
        """Current version node of ``register`` at the end of the path."""
        return RdgNode(register, self.current.get(register, 0))

    def dependencies(self, node: RdgNode) -> list[RdgNode]:
        pos = self.def_step.get(node)
        return list(self.steps[pos].reads) if pos is not None else []

    def reachable(self, start: RdgNode) -> set[RdgNode]:
        seen = {start}
        queue = deque([start])
        while queue:
            for dep in self.dependencies(queue.popleft()):
                if dep not in seen:
                    seen.add(dep)
                    queue.append(dep)
        return seen


@dataclass(frozen=True)
class SliceProgram:
    origin: MethodRef
    statements: tuple[Statement, ...]
    labels: dict[str, int]
    criterion: SlicingCriterion
    output_register: str
    register_count: int
    anchor: int
    indices: tuple[int, ...]
    prefix: frozenset[int] = frozenset()
    undefined: frozenset[str] = frozenset()

    @property
    def closed(self) -> bool:
        return not self.undefined

    @property
    def emitted(self) -> bool:
        return any(s.opcode == ops.EMIT for s in self.statements)

    @property
    def size(self) -> int:
        """Statement count at source granularity.

        The synthesized emit is not counted, and a ``move-result*`` is folded
        into the invocation it belongs to.
        """
        n = 0
        prev = None
        for s in self.statements:
            if s.opcode == ops.EMIT:
                continue
            if s.opcode in ops.MOVE_RESULT_OPS and prev is not None \
                    and prev.opcode in ops.INVOKE_OPS | {"filled-new-array", "filled-new-array/range"} \
                    and prev.index == s.index - 1:
                prev = s
                continue
            n += 1
            prev = s
        return n

    def to_smali(self) -> str:
        by_pos: dict[int, list[str]] = {}
        for name, pos in self.labels.items():
            by_pos.setdefault(pos, []).append(name)
        lines = [f"# slice of {self.origin} criterion=({self.criterion.stmt_index}, "
                 f"{self.criterion.register})",
                 ".method static slice()V",
                 f"    .registers {self.register_count}"]
        for pos, stmt in enumerate(self.statements):
            for name in sorted(by_pos.get(pos, [])):
                lines.append(f"    :{name}")
            tag = "" if stmt.opcode == ops.EMIT else f"    # [{stmt.index}]"
            lines.append(f"    {stmt}{tag}")
        for name in sorted(by_pos.get(len(self.statements), [])):
            lines.append(f"    :{name}")
        lines.append(".end method")
        return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# paths


def _reaching(cfg: Cfg, target: int) -> set[int]:
    seen = {target}
    stack = [target]
    while stack:
        for p in cfg.predecessors[stack.pop()]:
            if p not in seen:
                seen.add(p)
                stack.append(p)
    return seen


def enumerate_paths(cfg: Cfg, s: int, i: int, limits: PathLimits = PathLimits()) -> list[ExecutionPath]:
    """Paths from ``s`` to the first arrival at ``i``.

    Breadth-first until the frontier exceeds ``limits.bfs_queue_cap``, then
    depth-first on the remaining frontier; stops after ``limits.max_paths``.
    """
    if s == i:
        return [ExecutionPath((s,))]
    useful = _reaching(cfg, i)
    if s not in useful:
        raise NoPath(f"statement {i} unreachable from {s}")
    found: list[ExecutionPath] = []
    # frontier entries are (statement, parent entry, back edges taken); paths
    # are materialized only when they reach the target
    frontier: deque[tuple[int, tuple | None, tuple]] = deque([(s, None, ())])
    depth_first = False
    expansions = 0

    def materialize(entry, last: int) -> ExecutionPath:
        out = [last]
        while entry is not None:
            out.append(entry[0])
            entry = entry[1]
        return ExecutionPath(tuple(reversed(out)))

    while frontier and len(found) < limits.max_paths and expansions < limits.max_expansions:
        if not depth_first and len(frontier) > limits.bfs_queue_cap:
            depth_first = True
        entry = frontier.pop() if depth_first else frontier.popleft()
        expansions += 1
        last, _, back = entry
        children = []
        for t in cfg.successors[last]:
            if t not in useful:
                continue
            nback = back
            if t <= last:
                edge = (last, t)
                if back.count(edge) >= limits.loop_budget:
                    continue
                nback = back + (edge,)
            if t == i:
                found.append(materialize(entry, t))
                if len(found) >= limits.max_paths:
                    break
            else:
                children.append((t, entry, nback))
        if depth_first:
            frontier.extend(reversed(children))
        else:
            frontier.extend(children)
    if not found:
        raise NoPath(f"no path from {s} to {i} within limits")
    return found


# ---------------------------------------------------------------------------
# register dependency graphs


_DU_CACHE: dict[int, tuple[MethodDef, list]] = {}


def _def_uses(method: MethodDef) -> list:
    """Per-statement def/use facts, memoized per method object."""
    hit = _DU_CACHE.get(id(method))
    if hit is not None and hit[0] is method:
        return hit[1]
    table = []
    for stmt in method.statements:
        try:
            table.append(def_use(stmt))
        except OpaqueOpcode as exc:
            table.append(exc)
    if len(_DU_CACHE) > 512:
        _DU_CACHE.clear()
    _DU_CACHE[id(method)] = (method, table)
    return table


def build_rdg(method: MethodDef, path: ExecutionPath | tuple[int, ...]) -> Rdg:
    if not isinstance(path, ExecutionPath):
        path = ExecutionPath(tuple(path))
    rdg = Rdg(path)
    facts = _def_uses(method)
    pending: tuple[RdgNode, ...] | None = None
    pending_stmt: int | None = None

    def read(reg: str) -> RdgNode:
        if reg not in rdg.current:
            rdg.current[reg] = 0
            rdg.undefined.add(reg)
            rdg.nodes.add(RdgNode(reg, 0))
        return RdgNode(reg, rdg.current[reg])

    for pos, idx in enumerate(path.statements):
        du = facts[idx]
        if isinstance(du, OpaqueOpcode):
            raise OpaqueStatement(str(du))
        partner = None
        if du.takes_result:
            reads = pending if pending is not None and pending_stmt == idx - 1 else ()
            partner = pending_stmt if pending is not None and pending_stmt == idx - 1 else None
        else:
            reads = tuple(dict.fromkeys(read(r) for r in du.uses))
        writes = []
        for reg in du.defs:
            version = rdg.current.get(reg, 0) + 1
            rdg.current[reg] = version
            node = RdgNode(reg, version)
            rdg.nodes.add(node)
            rdg.def_stmt[node] = idx
            rdg.def_step[node] = pos
            for dep in reads:
                rdg.edges.add((node, dep))
            writes.append(node)
        for node in reads:
            rdg.use_stmts.setdefault(node, set()).add(idx)
            rdg.use_steps.setdefault(node, []).append(pos)
        rdg.steps.append(RdgStep(pos, idx, reads, tuple(writes), partner))
        if du.produces_result:
            pending, pending_stmt = reads, idx
        else:
            pending, pending_stmt = None, None
    return rdg


def _literal_node(rdg: Rdg, literal: LiteralSite) -> RdgNode | None:
    for step in rdg.steps:
        if step.stmt_index == literal.stmt_index:
            for node in step.writes:
                if node.register == literal.register:
                    return node
    return None


def criterion_reaches_literal(rdg: Rdg, criterion: SlicingCriterion, literal: LiteralSite) -> bool:
    target = _literal_node(rdg, literal)
    if target is None:
        return False
    return target in rdg.reachable(rdg.node(criterion.register))


# ---------------------------------------------------------------------------
# slice assembly


def _close(rdg: Rdg, roots: list[RdgNode], with_users: bool) -> tuple[set[int], set[RdgNode]]:
    """Steps needed to compute ``roots``; optionally also every reader of a marked node."""
    steps: set[int] = set()
    marked: set[RdgNode] = set()
    work = list(roots)

    def take(pos: int) -> None:
        if pos in steps:
            return
        steps.add(pos)
        step = rdg.steps[pos]
        work.extend(step.reads)
        if step.partner is not None and pos > 0:
            take(pos - 1)

    while work:
        node = work.pop()
        if node in marked:
            continue
        marked.add(node)
        pos = rdg.def_step.get(node)
        if pos is not None:
            take(pos)
        if with_users:
            for upos in rdg.use_steps.get(node, ()):
                take(upos)
    return steps, marked


def _assemble(method: MethodDef, indices: set[int], criterion: SlicingCriterion, anchor: int,
              prefix: frozenset[int] = frozenset(),
              undefined: frozenset[str] = frozenset()) -> SliceProgram:
    order = sorted(indices)
    stmts = [method.statements[i] for i in order]

    def position(target_index: int) -> int:
        # nearest retained statement at or after the original target
        return bisect.bisect_left(order, target_index)

    labels: dict[str, int] = {}
    for s in stmts:
        for label in s.branch_targets:
            labels[label] = position(method.labels[label])
    return SliceProgram(
        origin=method.ref, statements=tuple(stmts), labels=labels, criterion=criterion,
        output_register=criterion.register, register_count=method.register_count,
        anchor=anchor, indices=tuple(order), prefix=prefix, undefined=undefined,
    )


def compute_slice(method: MethodDef, cfg: Cfg, literal: LiteralSite, candidate: DeobCandidate,
                  paths: list[ExecutionPath], rdgs: list[Rdg]) -> SliceProgram:
    """Union of the statements behind the criterion's reachable nodes over all paths."""
    criterion = candidate.criterion
    indices: set[int] = set()
    undefined: set[str] = set()
    for path, rdg in zip(paths, rdgs):
        if not criterion_reaches_literal(rdg, criterion, literal):
            raise LiteralIndependent(
                f"criterion ({criterion.stmt_index}, {criterion.register}) does not depend on "
                f"literal at {literal.stmt_index}")
        roots = [rdg.node(criterion.register)]
        for step in rdg.steps:
            if method.statements[step.stmt_index].opcode in ops.CONTROL_OPS:
                indices.add(step.stmt_index)
                roots.extend(step.reads)
        steps, marked = _close(rdg, roots, with_users=True)
        indices.update(rdg.steps[p].stmt_index for p in steps)
        undefined.update(n.register for n in marked if n.version == 0)
    return _assemble(method, indices, criterion, candidate.anchor, undefined=frozenset(undefined))


def resolve_undefined(method: MethodDef, cfg: Cfg, slice_: SliceProgram, literal: LiteralSite,
                      limits: PathLimits = PathLimits()) -> SliceProgram:
    """Pull definitions of still-undefined registers from the method entry up to the literal."""
    if not slice_.undefined:
        return slice_
    s = literal.stmt_index
    try:
        paths = enumerate_paths(cfg, 0, s, limits)
    except NoPath as exc:
        raise UnresolvableRegister(f"literal unreachable from method entry: {exc}") from None
    per_path = []
    for path in paths:
        rdg = build_rdg(method, path.statements[:-1])
        roots = []
        for reg in sorted(slice_.undefined):
            node = rdg.node(reg)
            if node.version == 0:
                raise UnresolvableRegister(f"{reg} has no definition before statement {s}")
            roots.append(node)
        steps, _ = _close(rdg, roots, with_users=False)
        per_path.append((rdg, roots, steps))
    # when the prefix paths disagree on which definitions reach the literal,
    # the branches that choose between them have to come along too
    guarded = len({tuple(rdg.steps[p].stmt_index for p in sorted(steps))
                   for rdg, _, steps in per_path}) > 1
    added: set[int] = set()
    for rdg, roots, steps in per_path:
        if guarded:
            controls = [st for st in rdg.steps
                        if method.statements[st.stmt_index].opcode in ops.CONTROL_OPS]
            roots = roots + [n for st in controls for n in st.reads]
            added.update(st.stmt_index for st in controls)
        steps, marked = _close(rdg, roots, with_users=False)
        missing = sorted(n.register for n in marked if n.version == 0)
        if missing:
            raise UnresolvableRegister(f"{', '.join(missing)} undefined at method entry")
        added.update(rdg.steps[p].stmt_index for p in steps)
    prefix = frozenset(added - set(slice_.indices))
    return _assemble(method, set(slice_.indices) | added, slice_.criterion, slice_.anchor,
                     prefix=prefix)


def emit_slice(slice_: SliceProgram) -> SliceProgram:
    """Insert the output step right after the anchor statement.

    Branches that had no retained target (pointing past the end) are
    redirected to the output step.
    """
    if slice_.emitted:
        return slice_
    pos = slice_.indices.index(slice_.anchor) + 1
    end = len(slice_.statements)
    stmts = list(slice_.statements)
    stmts.insert(pos, Statement(-1, ops.EMIT, (slice_.output_register,)))
    labels = {name: pos if p == end else (p + 1 if p >= pos else p)
              for name, p in slice_.labels.items()}
    return replace(slice_, statements=tuple(stmts), labels=labels)


def slice_candidate(method: MethodDef, cfg: Cfg, candidate: DeobCandidate,
                    limits: PathLimits = PathLimits()) -> SliceProgram:
    """Full slicing pipeline for one candidate, ending with an emitted, closed slice."""
    literal = candidate.literal
    paths = enumerate_paths(cfg, literal.stmt_index, candidate.anchor, limits)
    rdgs = [build_rdg(method, p) for p in paths]
    sl = compute_slice(method, cfg, literal, candidate, paths, rdgs)
    sl = resolve_undefined(method, cfg, sl, literal, limits)
    return emit_slice(sl)
