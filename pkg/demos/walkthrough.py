"""
Recovering one obfuscated literal step by step
==============================================

The bundled ``example`` corpus holds a method that builds two short keys,
passes a ciphertext literal to a decoder, and throws the result away.
This script shows each stage of the analysis on that method.
"""

from smalideob.cfg import build_cfg
from smalideob.fixtures import EXAMPLE_CLASS, EXAMPLE_METHOD, load_example
from smalideob.scanner import find_deob_candidates, find_string_literals
from smalideob.slicer import (
    build_rdg, compute_slice, emit_slice, enumerate_paths, resolve_undefined,
)
from smalideob.vm import Interpreter

program, truth = load_example()
method = program.classes[EXAMPLE_CLASS].method(EXAMPLE_METHOD)
for stmt in method.statements:
    print(f"{stmt.index:3d}  {stmt}")

# the literal and the statement expected to produce its plaintext
cfg = build_cfg(method)
literal = find_string_literals(method)[0]
candidate = find_deob_candidates(method, cfg, literal)[0]
print("\nliteral:", literal.value, "at", literal.stmt_index)
print("candidate:", candidate.condition.value, "criterion", candidate.criterion)

# one register dependency graph per path from the literal to the candidate
paths = enumerate_paths(cfg, literal.stmt_index, candidate.anchor)
rdgs = [build_rdg(method, p) for p in paths]
for path, rdg in zip(paths, rdgs):
    print(f"path {path.statements}: {len(rdg.nodes)} nodes, undefined {sorted(rdg.undefined)}")

# the first slice reads v1 and v2 before anything in it writes them
first = compute_slice(method, cfg, literal, candidate, paths, rdgs)
print("\nslice statements:", first.indices, "undefined:", sorted(first.undefined))

# so the definitions above the literal are pulled in
full = emit_slice(resolve_undefined(method, cfg, first, literal))
print("added from the method prefix:", sorted(full.prefix))
print(full.to_smali())

result = Interpreter(program).execute(full)
print("status:", result.status.value, "output:", repr(result.output), "steps:", result.steps)
print("expected:", repr(truth[(EXAMPLE_CLASS, "Bjg()V", literal.stmt_index)]))
