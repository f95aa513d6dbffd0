"""End-to-end acceptance criteria; each test prints one PASS/FAIL line."""

from __future__ import annotations

import time

import numpy as np

from conftest import ACCEPTANCE
from helpers import rdg_is_acyclic, synthetic_agreement, versions_increase
from reference_arith import (
    BINARY, LITERAL, UNARY, _kind, expected_binary, expected_unary, literal_sample,
    operand_sample, run_binary, run_literal, run_unary, same, unary_kinds,
)
from smalideob.cfg import build_cfg
from smalideob.corpus import english_corpus, random_method
from smalideob.fixtures import EXAMPLE_CLASS, EXAMPLE_METHOD, load_example
from smalideob.frontend import MethodRef, Statement
from smalideob.oracle import ObfuscationScheme, SchemeKind, budget_fixture, obfuscate_program
from smalideob.pipeline import deobfuscate_program
from smalideob.reporter import char_distribution, entropy, top_bins
from smalideob.scanner import Condition, SlicingCriterion, find_deob_candidates, find_string_literals
from smalideob.slicer import (
    SliceProgram, build_rdg, compute_slice, emit_slice, enumerate_paths, resolve_undefined,
)
from smalideob.vm import ExecBudget, ExecStatus, Interpreter


def report(name: str, ok: bool, detail: str) -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}"
    print(line)
    ACCEPTANCE.append(line)
    assert ok, line


def test_example_end_to_end():
    start = time.perf_counter()
    program, truth = load_example()
    method = program.classes[EXAMPLE_CLASS].method(EXAMPLE_METHOD)
    cfg = build_cfg(method)
    lits = find_string_literals(method)
    cands = find_deob_candidates(method, cfg, lits[0])
    cand = cands[0]
    paths = enumerate_paths(cfg, lits[0].stmt_index, cand.anchor)
    rdgs = [build_rdg(method, p) for p in paths]
    initial = compute_slice(method, cfg, lits[0], cand, paths, rdgs)
    extended = resolve_undefined(method, cfg, initial, lits[0])
    result = Interpreter(program).execute(emit_slice(extended))
    elapsed = time.perf_counter() - start
    checks = {
        "one literal": len(lits) == 1,
        "one StaticStringCall candidate": len(cands) == 1
        and cand.condition is Condition.STATIC_STRING_CALL,
        "criterion (14, v0)": cand.criterion == SlicingCriterion(14, "v0"),
        "two paths": len(paths) == 2,
        "key constants omitted at first": not {0, 1} & set(initial.indices),
        "key constants recovered by prefix": extended.prefix == {0, 1},
        "plaintext": result.ok and result.output == truth[("Lu/Bjg;", "Bjg()V", 2)],
        "under 1 s": elapsed < 1.0,
    }
    failed = [k for k, v in checks.items() if not v]
    report("bundled example end-to-end", not failed,
           f"output={result.output!r} paths={len(paths)} prefix={sorted(extended.prefix)} "
           f"time={elapsed * 1000:.1f}ms" + (f" failed={failed}" if failed else ""))


def test_round_trip_recovery():
    total = hits = 0
    elapsed = 0.0
    per_scheme = {}
    for kind in SchemeKind:
        for seed, junk in ((21, 1), (22, 4)):
            source = english_corpus(seed, classes=10)
            program, truth = obfuscate_program(source, ObfuscationScheme(kind, junk_conditionals=junk),
                                               seed)
            start = time.perf_counter()
            records = list(deobfuscate_program(program, f"{kind.value}-{seed}"))
            elapsed += time.perf_counter() - start
            got = {(r.cls, r.method, r.literal_index): r.output for r in records}
            n = sum(got.get(k) == v for k, v in truth.entries.items())
            per_scheme[kind.value] = per_scheme.get(kind.value, 0) + n
            hits += n
            total += len(truth)
    rate = hits / total
    report("round-trip recovery", total >= 500 and rate >= 0.95 and elapsed < 120,
           f"{hits}/{total} exact ({rate:.1%}) in {elapsed:.1f}s; per scheme {per_scheme}")


def test_slice_matches_full_method():
    produced = agree = 0
    for seed in range(100):
        out, full, _ = synthetic_agreement(seed)
        if out is None:
            continue
        produced += 1
        agree += out == full
    report("slice vs full method", produced > 0 and agree == produced,
           f"{agree}/{produced} agree ({100 - produced} rejected)")


def test_interpreter_conformance():
    rng = np.random.default_rng(2024)
    vm = Interpreter()
    mismatches: dict[str, int] = {}
    checked = 0
    for op in BINARY:
        kind = _kind(op)
        shift = op.startswith(("shl", "shr", "ushr"))
        a = operand_sample(rng, kind, 1000)
        b = operand_sample(rng, "int" if shift else kind, 1000)
        for x, y, want in zip(a, b, expected_binary(op, a, b)):
            got = run_binary(vm, op, x, y)
            ok = got == want or (got is not None and want is not None and same(kind, got, want))
            mismatches[op] = mismatches.get(op, 0) + (not ok)
        checked += 1
    for op in LITERAL:
        a = operand_sample(rng, "int", 1000)
        lits = literal_sample(rng, op, 1000)
        for x, y, want in zip(a, lits, expected_binary(op, a, lits)):
            mismatches[op] = mismatches.get(op, 0) + (run_literal(vm, op, x, y) != want)
        checked += 1
    for op in UNARY:
        src, dst = unary_kinds(op)
        kind = dst if dst in ("long", "float", "double") else "int"
        a = operand_sample(rng, src, 1000)
        for x, want in zip(a, expected_unary(op, a)):
            mismatches[op] = mismatches.get(op, 0) + (not same(kind, run_unary(vm, op, x), want))
        checked += 1
    bad = {k: v for k, v in mismatches.items() if v}
    report("interpreter conformance", not bad,
           f"{checked} opcodes x 1000 operands, mismatches={sum(bad.values())}"
           + (f" in {bad}" if bad else ""))


def test_rdg_properties():
    rdgs = []
    program, _ = load_example()
    method = program.classes[EXAMPLE_CLASS].method(EXAMPLE_METHOD)
    rdgs += [build_rdg(method, p) for p in enumerate_paths(build_cfg(method), 0, 14)]
    for seed in range(100):
        syn = random_method(seed)
        cfg = build_cfg(syn.method)
        rdgs += [build_rdg(syn.method, p) for p in enumerate_paths(cfg, 0, syn.call_index + 1)]
    corpus, _ = obfuscate_program(english_corpus(5, classes=4),
                                  ObfuscationScheme(SchemeKind.XOR_TWO_KEYS, junk_conditionals=3), 5)
    for _, m in corpus.iter_methods():
        cfg = build_cfg(m)
        for lit in find_string_literals(m):
            for cand in find_deob_candidates(m, cfg, lit):
                rdgs += [build_rdg(m, p) for p in enumerate_paths(cfg, lit.stmt_index, cand.anchor)]
    cyclic = sum(not rdg_is_acyclic(r) for r in rdgs)
    nonmono = sum(not versions_increase(r) for r in rdgs)
    report("RDG properties", rdgs and not cyclic and not nonmono,
           f"{len(rdgs)} graphs, cyclic={cyclic}, non-increasing versions={nonmono}")


def test_looping_slice_times_out():
    loop = (Statement(0, "const/4", ("v0",), literal=0), Statement(1, "add-int/lit8", ("v0", "v0"), literal=1),
            Statement(2, "goto", branch_targets=("top",)), Statement(-1, "emit-string", ("v0",)))
    sl = SliceProgram(origin=MethodRef("Lt/Loop;", "f", "()V"), statements=loop, labels={"top": 1}, criterion=SlicingCriterion(0, "v0"),
                      output_register="v0", register_count=1, anchor=2, indices=(0, 1, 2))
    start = time.perf_counter()
    res = Interpreter(budget=ExecBudget(wall_clock=0.5, max_steps=10**12)).execute(sl)
    elapsed = time.perf_counter() - start
    report("execution budget", res.status is ExecStatus.TIMEOUT and elapsed < 1.5,
           f"status={res.status.value} after {elapsed:.2f}s and {res.steps} steps")


def test_character_distribution():
    program, truth = obfuscate_program(english_corpus(1), ObfuscationScheme(SchemeKind.XOR_TWO_KEYS), 7)
    records = list(deobfuscate_program(program, "english"))
    before = char_distribution(records, "before")
    after = char_distribution(records, "after")
    top = top_bins(after)
    report("distribution sanity", entropy(after) < entropy(before) and 32 in top,
           f"entropy {entropy(before):.3f} -> {entropy(after):.3f} bits, top bins after {top}")


def test_candidate_budget():
    program, _ = budget_fixture(6)
    method = program.classes["Lfix/Budget;"].method("greet")
    cfg = build_cfg(method)
    lit = find_string_literals(method)[0]
    default = len(find_deob_candidates(method, cfg, lit))
    widened = len(find_deob_candidates(method, cfg, lit, max_conditionals=6))
    report("candidate budget", default == 0 and widened >= 1,
           f"6 conditionals: {default} candidates at default budget, {widened} at budget 6")
