"""Command-line entry point.

Every flag can also be set through an environment variable named
``SMALIDEOB_`` plus the flag name in upper case with dashes as underscores,
e.g. ``SMALIDEOB_MAX_CONDITIONALS=6``.  Command-line flags win.  List-valued
variables (``SMALIDEOB_INPUT``) are separated by ``os.pathsep``;
``SMALIDEOB_EXCLUDE_PREFIXES`` is comma-separated like the flag.

Exit status: 0 on success (per-literal failures are results, not errors),
2 on a configuration error, 3 on an I/O error.
"""

from __future__ import annotations

import argparse
import os
import sys
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from . import corpus, oracle, reporter
from .frontend import load_program
from .pipeline import AnalysisOptions, deobfuscate_program
from .reporter import RecordStore, StorageError
from .scanner import DEFAULT_EXCLUSIONS, DEFAULT_MAX_CONDITIONALS
from .slicer import PathLimits
from .vm import ExecBudget

ENV_PREFIX = "SMALIDEOB_"
MODES = ("deobfuscate", "scan-only", "obfuscate", "report")

EXIT_OK, EXIT_CONFIG, EXIT_IO = 0, 2, 3


class ConfigError(ValueError):
    pass


class IoError(OSError):
    pass


@dataclass(frozen=True)
class PipelineConfig:
    inputs: tuple[str, ...] = ()
    exclusions: tuple[str, ...] = DEFAULT_EXCLUSIONS
    max_conditionals: int = DEFAULT_MAX_CONDITIONALS
    limits: PathLimits = field(default_factory=PathLimits)
    budget: ExecBudget = field(default_factory=ExecBudget)
    out: str | None = None
    mode: str = "deobfuscate"
    scheme: str = oracle.SchemeKind.XOR_TWO_KEYS.value
    seed: int = 0
    junk_conditionals: int = 0
    dump_slices: str | None = None
    app: str | None = None
    workers: int = 1
    timings: bool = False

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"unknown mode {self.mode!r}; expected one of {', '.join(MODES)}")
        if self.max_conditionals < 0:
            raise ConfigError("max-conditionals must be >= 0")
        if self.limits.max_paths < 1 or self.limits.bfs_queue_cap < 1:
            raise ConfigError("max-paths and bfs-queue-cap must be >= 1")
        if self.budget.wall_clock <= 0 or self.budget.max_steps < 1:
            raise ConfigError("timeout-secs and max-steps must be positive")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if not 0 <= self.junk_conditionals <= oracle.MAX_JUNK:
            raise ConfigError(f"junk-conditionals must be in [0, {oracle.MAX_JUNK}]")
        try:
            oracle.SchemeKind(self.scheme)
        except ValueError:
            names = ", ".join(k.value for k in oracle.SchemeKind)
            raise ConfigError(f"unknown scheme {self.scheme!r}; expected one of {names}") from None


def _prefixes(text: str) -> tuple[str, ...]:
    return tuple(p.strip() for p in text.split(",") if p.strip())


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="smalideob",
        description="Recover obfuscated string literals in Smali code by slicing and executing "
                    "their decryption logic.",
        epilog=f"Every flag may also be given as an environment variable {ENV_PREFIX}<FLAG>.")
    p.add_argument("--mode", choices=MODES, help="pipeline stage to run (default: deobfuscate)")
    p.add_argument("--input", nargs="+", metavar="PATH",
                   help="Smali files/directories, or record files in report mode")
    p.add_argument("--out", metavar="PATH",
                   help="record file (deobfuscate, scan-only; default stdout), corpus directory "
                        "(obfuscate) or CSV directory (report)")
    p.add_argument("--exclude-prefixes", metavar="LIST",
                   help="comma-separated library package prefixes to skip; empty for none")
    p.add_argument("--max-conditionals", type=int, metavar="N",
                   help=f"conditional budget of the candidate search (default {DEFAULT_MAX_CONDITIONALS})")
    p.add_argument("--max-paths", type=int, metavar="N", help="execution paths per candidate")
    p.add_argument("--bfs-queue-cap", type=int, metavar="N",
                   help="frontier size at which path search turns depth-first")
    p.add_argument("--timeout-secs", type=float, metavar="S", help="wall-clock budget per slice")
    p.add_argument("--max-steps", type=int, metavar="N", help="statement budget per slice")
    p.add_argument("--scheme", help="obfuscation scheme for obfuscate mode")
    p.add_argument("--seed", type=int, help="random seed for obfuscate mode")
    p.add_argument("--junk-conditionals", type=int, metavar="N",
                   help="opaque conditionals inserted per literal in obfuscate mode")
    p.add_argument("--dump-slices", metavar="DIR", help="write every executed slice as Smali")
    p.add_argument("--app", help="application id stored in records (default: input name)")
    p.add_argument("--workers", type=int, metavar="N", help="worker processes")
    p.add_argument("--timings", action="store_true", default=None,
                   help="store per-literal durations (makes record files run-dependent)")
    return p


def _env(name: str, environ) -> str | None:
    return environ.get(ENV_PREFIX + name.upper().replace("-", "_"))


def config_from_args(argv: Sequence[str] | None = None, environ=None) -> PipelineConfig:
    environ = os.environ if environ is None else environ
    args = build_parser().parse_args(argv)

    def pick(name: str, conv, default):
        value = getattr(args, name.replace("-", "_"))
        if value is not None:
            return value
        raw = _env(name, environ)
        if raw is None:
            return default
        try:
            return conv(raw)
        except ValueError:
            raise ConfigError(f"bad value {raw!r} for {ENV_PREFIX}{name.upper()}") from None

    def flag(raw: str) -> bool:
        if raw.lower() in ("1", "true", "yes", "on"):
            return True
        if raw.lower() in ("0", "false", "no", "off", ""):
            return False
        raise ValueError(raw)

    inputs = args.input if args.input is not None else \
        [s for s in (_env("input", environ) or "").split(os.pathsep) if s]
    defaults = PathLimits()
    limits = PathLimits(bfs_queue_cap=pick("bfs-queue-cap", int, defaults.bfs_queue_cap),
                        max_paths=pick("max-paths", int, defaults.max_paths))
    budget = ExecBudget(wall_clock=pick("timeout-secs", float, ExecBudget().wall_clock),
                        max_steps=pick("max-steps", int, ExecBudget().max_steps))
    excl = pick("exclude-prefixes", str, None)
    return PipelineConfig(
        inputs=tuple(inputs),
        exclusions=DEFAULT_EXCLUSIONS if excl is None else _prefixes(excl),
        max_conditionals=pick("max-conditionals", int, DEFAULT_MAX_CONDITIONALS),
        limits=limits, budget=budget,
        out=pick("out", str, None),
        mode=pick("mode", str, "deobfuscate"),
        scheme=pick("scheme", str, oracle.SchemeKind.XOR_TWO_KEYS.value),
        seed=pick("seed", int, 0),
        junk_conditionals=pick("junk-conditionals", int, 0),
        dump_slices=pick("dump-slices", str, None),
        app=pick("app", str, None),
        workers=pick("workers", int, 1),
        timings=pick("timings", flag, False),
    )


# ---------------------------------------------------------------------------
# modes


def _load(config: PipelineConfig):
    if not config.inputs:
        raise ConfigError("--input is required")
    for path in config.inputs:
        if not os.path.exists(path):
            raise IoError(f"input not found: {path}")
    program = load_program(config.inputs)
    for failure in program.failures:
        print(f"warning: {failure.path}: {failure.error}", file=sys.stderr)
    return program


def _analyze(config: PipelineConfig) -> int:
    program = _load(config)
    app = config.app or Path(config.inputs[0]).resolve().name
    options = AnalysisOptions(
        exclusions=config.exclusions, max_conditionals=config.max_conditionals,
        limits=config.limits, budget=config.budget, scan_only=config.mode == "scan-only",
        timings=config.timings)
    to_stdout = config.out in (None, "-")
    try:
        store = RecordStore(None if to_stdout else config.out, truncate=True)
    except StorageError as exc:
        raise IoError(str(exc)) from exc
    if to_stdout:
        sys.stdout.write(reporter._header(None))
    with store:
        for rec in deobfuscate_program(program, app, options, config.workers, config.dump_slices):
            if store.append(rec) and to_stdout:
                sys.stdout.write(rec.to_line() + "\n")
        records = store.records()
    statuses = Counter(r.status for r in records)
    with_cands = sum(1 for r in records if r.candidate_count)
    summary = ", ".join(f"{k}={v}" for k, v in sorted(statuses.items()))
    print(f"{len(records)} literals, {with_cands} with candidates; {summary or 'nothing found'}",
          file=sys.stderr)
    for root in config.inputs:
        truth_path = Path(root) / oracle.TRUTH_FILE
        if truth_path.is_file():
            truth = oracle.GroundTruth.read(truth_path)
            hits = sum(1 for r in records
                       if r.output is not None and truth.get((r.cls, r.method, r.literal_index))
                       == r.output)
            print(f"ground truth {truth_path}: {hits}/{len(truth)} recovered exactly",
                  file=sys.stderr)
    return EXIT_OK


def _obfuscate(config: PipelineConfig) -> int:
    if not config.out:
        raise ConfigError("--out DIR is required in obfuscate mode")
    if config.inputs:
        program = _load(config)
    else:
        program = corpus.english_corpus(config.seed)
    scheme = oracle.ObfuscationScheme(config.scheme, junk_conditionals=config.junk_conditionals)
    result, truth = oracle.obfuscate_program(program, scheme, config.seed, config.exclusions)
    try:
        oracle.write_corpus(result, truth, config.out)
    except OSError as exc:
        raise IoError(f"cannot write corpus to {config.out}: {exc}") from exc
    print(f"{len(truth)} literals obfuscated with {scheme.kind.value} into {config.out}",
          file=sys.stderr)
    return EXIT_OK


def _report(config: PipelineConfig) -> int:
    if not config.inputs:
        raise ConfigError("--input RECORDS is required in report mode")
    records = []
    for path in config.inputs:
        try:
            records.extend(reporter.read_records(path))
        except StorageError as exc:
            raise IoError(str(exc)) from exc
    before = reporter.char_distribution(records, "before")
    after = reporter.char_distribution(records, "after")
    sizes = reporter.slice_size_distribution(records)
    fractions = reporter.obfuscation_fraction(records)
    ok = sum(1 for r in records if r.status == reporter.OK)
    print(f"records: {len(records)}  ok: {ok}")
    print(f"entropy before: {reporter.entropy(before):.4f} bits  "
          f"after: {reporter.entropy(after):.4f} bits")
    print(f"top bins after: {reporter.top_bins(after)}")
    print(f"slice sizes: {sizes}")
    for app, pct in fractions.items():
        print(f"obfuscated literals in {app}: {pct:.1f}%")
    if config.out:
        out = Path(config.out)
        try:
            out.mkdir(parents=True, exist_ok=True)
            reporter.write_histogram_csv(out / "chars_before.csv", enumerate(before.tolist()))
            reporter.write_histogram_csv(out / "chars_after.csv", enumerate(after.tolist()))
            reporter.write_histogram_csv(out / "slice_sizes.csv", sizes.items())
            reporter.write_histogram_csv(out / "obfuscation_fraction.csv",
                                         ((a, f"{p:.4f}") for a, p in fractions.items()),
                                         header=("app", "percent"))
        except OSError as exc:
            raise IoError(f"cannot write report to {out}: {exc}") from exc
    return EXIT_OK


def run(config: PipelineConfig) -> int:
    if config.mode == "obfuscate":
        return _obfuscate(config)
    if config.mode == "report":
        return _report(config)
    return _analyze(config)


def main(argv: Sequence[str] | None = None) -> int:
    try:
        return run(config_from_args(argv))
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (IoError, StorageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
