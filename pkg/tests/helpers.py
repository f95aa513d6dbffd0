"""Shared checks used by several test modules."""

from __future__ import annotations

from smalideob import opcodes as ops
from smalideob.cfg import build_cfg
from smalideob.corpus import random_method
from smalideob.scanner import find_deob_candidates, find_string_literals
from smalideob.slicer import Rdg, SliceRejected, slice_candidate
from smalideob.vm import Interpreter


def synthetic_agreement(seed: int):
    """(slice output, full-method output) for one random method; slice output None if rejected."""
    syn = random_method(seed)
    method = syn.method
    cfg = build_cfg(method)
    lit = [l for l in find_string_literals(method) if l.stmt_index == syn.literal_index][0]
    cand = [c for c in find_deob_candidates(method, cfg, lit, 3)
            if c.stmt_index == syn.call_index][0]
    regs = Interpreter(syn.program).run_until(method, syn.call_index + 1)
    full = regs[int(cand.criterion.register[1:])]
    try:
        sl = slice_candidate(method, cfg, cand)
    except SliceRejected:
        return None, full, None
    return Interpreter(syn.program).execute(sl).output, full, sl


def rdg_is_acyclic(rdg: Rdg) -> bool:
    indeg = {n: 0 for n in rdg.nodes}
    out: dict = {n: [] for n in rdg.nodes}
    for a, b in rdg.edges:
        indeg[b] += 1
        out[a].append(b)
    ready = [n for n, d in indeg.items() if d == 0]
    seen = 0
    while ready:
        n = ready.pop()
        seen += 1
        for m in out[n]:
            indeg[m] -= 1
            if indeg[m] == 0:
                ready.append(m)
    return seen == len(rdg.nodes)


def versions_increase(rdg: Rdg) -> bool:
    """Each write creates a version higher than every earlier one of the same register."""
    last: dict[str, int] = {}
    for step in rdg.steps:
        for node in step.reads:
            if node.version != last.get(node.register, 0):
                return False
        for node in step.writes:
            if node.version <= last.get(node.register, 0):
                return False
            last[node.register] = node.version
    return True


def is_control(stmt) -> bool:
    return stmt.opcode in ops.CONTROL_OPS
