"""Scan, slice and execute: per-literal orchestration of the analysis."""

from __future__ import annotations

import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Sequence

from . import reporter
from .cfg import build_cfg
from .frontend import MethodDef, SmaliProgram, class_path
from .reporter import ResultRecord
from .scanner import (
    DEFAULT_EXCLUSIONS, DEFAULT_MAX_CONDITIONALS, DeobCandidate, LiteralSite, find_deob_candidates,
    find_string_literals, is_excluded_class,
)
from .slicer import PathLimits, SliceProgram, SliceRejected, slice_candidate
from .vm import ExecBudget, ExecResult, Interpreter


@dataclass(frozen=True)
class CandidateOutcome:
    """What happened to one candidate: a slice and its execution, or a rejection."""

    candidate: DeobCandidate
    slice: SliceProgram | None
    result: ExecResult | None
    detail: str | None = None

    @property
    def status(self) -> str:
        return reporter.REJECTED if self.result is None else self.result.status.value

    @property
    def succeeded(self) -> bool:
        return self.result is not None and self.result.ok and bool(self.result.output)


class AllCandidatesFailed(Exception):
    def __init__(self, outcomes: Sequence[CandidateOutcome]):
        self.outcomes = tuple(outcomes)
        summary = ", ".join(o.status for o in self.outcomes) or "no candidates"
        super().__init__(f"every candidate failed: {summary}")


def run_candidates(program: SmaliProgram, method: MethodDef, literal: LiteralSite,
                   candidates: Sequence[DeobCandidate], limits: PathLimits = PathLimits(),
                   budget: ExecBudget = ExecBudget(), cfg=None) -> CandidateOutcome:
    """Try candidates in order; the first one yielding a non-empty string wins."""
    cfg = cfg or build_cfg(method)
    outcomes: list[CandidateOutcome] = []
    for cand in candidates:
        try:
            sl = slice_candidate(method, cfg, cand, limits)
        except SliceRejected as exc:
            outcomes.append(CandidateOutcome(cand, None, None, f"{type(exc).__name__}: {exc}"))
            continue
        result = Interpreter(program, budget).execute(sl)
        outcome = CandidateOutcome(cand, sl, result, result.error_detail)
        if outcome.succeeded:
            return outcome
        if result.ok:
            outcome = CandidateOutcome(cand, sl, result, "empty output")
        outcomes.append(outcome)
    raise AllCandidatesFailed(outcomes)


@dataclass(frozen=True)
class AnalysisOptions:
    exclusions: tuple[str, ...] = DEFAULT_EXCLUSIONS
    max_conditionals: int = DEFAULT_MAX_CONDITIONALS
    limits: PathLimits = field(default_factory=PathLimits)
    budget: ExecBudget = field(default_factory=ExecBudget)
    scan_only: bool = False
    timings: bool = False


def analyze_method(program: SmaliProgram, method: MethodDef, app: str,
                   options: AnalysisOptions = AnalysisOptions(),
                   slices: list | None = None) -> list[ResultRecord]:
    """One record per non-empty literal of ``method``."""
    literals = find_string_literals(method)
    if not literals:
        return []
    cfg = build_cfg(method)
    out = []
    for lit in literals:
        start = time.perf_counter()
        cands = find_deob_candidates(method, cfg, lit, options.max_conditionals)
        base = dict(app=app, cls=method.class_descriptor, method=method.name + method.signature,
                    literal_index=lit.stmt_index, literal=lit.value, candidate_count=len(cands))
        if not cands:
            fields_ = dict(status=reporter.NO_CANDIDATE)
        elif options.scan_only:
            fields_ = dict(status=reporter.SCANNED, condition=cands[0].condition.value)
        else:
            try:
                outcome = run_candidates(program, method, lit, cands, options.limits,
                                         options.budget, cfg)
            except AllCandidatesFailed as failed:
                outcome = failed.outcomes[-1]
            fields_ = dict(
                status=outcome.status, condition=outcome.candidate.condition.value,
                slice_size=outcome.slice.size if outcome.slice is not None else None,
                output=outcome.result.output if outcome.result is not None and outcome.result.ok
                else None,
                detail=outcome.detail,
            )
            if slices is not None and outcome.slice is not None:
                slices.append((lit, outcome.slice))
        duration = round(time.perf_counter() - start, 6) if options.timings else None
        out.append(ResultRecord(**base, **fields_, duration=duration))
    return out


def _methods(program: SmaliProgram, exclusions: Sequence[str]):
    for desc in sorted(program.classes):
        if is_excluded_class(desc, exclusions):
            continue
        for k, m in enumerate(program.classes[desc].methods):
            if m.statements:
                yield desc, k


# worker-process state for parallel runs
_WORKER: dict = {}


def _init_worker(program: SmaliProgram, app: str, options: AnalysisOptions, dump: bool) -> None:
    _WORKER.update(program=program, app=app, options=options, dump=dump)


def _work(target: tuple[str, int]):
    program = _WORKER["program"]
    method = program.classes[target[0]].methods[target[1]]
    slices = [] if _WORKER["dump"] else None
    records = analyze_method(program, method, _WORKER["app"], _WORKER["options"], slices)
    return records, slices


def deobfuscate_program(program: SmaliProgram, app: str,
                        options: AnalysisOptions = AnalysisOptions(), workers: int = 1,
                        dump_dir: str | os.PathLike | None = None) -> Iterator[ResultRecord]:
    """Analyze every method of every non-library class, in a deterministic order."""
    targets = list(_methods(program, options.exclusions))
    dump = dump_dir is not None
    if workers > 1 and len(targets) > 1:
        with ProcessPoolExecutor(workers, initializer=_init_worker,
                                 initargs=(program, app, options, dump)) as pool:
            for target, (records, slices) in zip(targets, pool.map(_work, targets, chunksize=4)):
                if dump:
                    _dump(dump_dir, program, target, slices)
                yield from records
        return
    _init_worker(program, app, options, dump)
    try:
        for target in targets:
            records, slices = _work(target)
            if dump:
                _dump(dump_dir, program, target, slices)
            yield from records
    finally:
        _WORKER.clear()


def _dump(root, program: SmaliProgram, target: tuple[str, int], slices) -> None:
    method = program.classes[target[0]].methods[target[1]]
    base = Path(root) / class_path(target[0])[:-len(".smali")]
    base.mkdir(parents=True, exist_ok=True)
    for lit, sl in slices:
        name = f"{method.name.strip('<>')}_{target[1]}_{lit.stmt_index}.smali"
        (base / name).write_text(sl.to_smali() + "\n", encoding="utf-8")
