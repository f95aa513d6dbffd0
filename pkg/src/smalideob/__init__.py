"""Recover obfuscated string literals in Smali code.

The pipeline scans methods for ``const-string`` literals, searches forward
for statements likely to produce the decrypted string, cuts a backward
slice over per-path register dependency graphs, and runs the slice in a
small Dalvik interpreter.
"""

from .cfg import Cfg, build_cfg
from .frontend import MethodDef, SmaliProgram, Statement, load_program, parse_smali, print_smali
from .oracle import GroundTruth, ObfuscationScheme, SchemeKind, obfuscate_program
from .pipeline import AllCandidatesFailed, deobfuscate_program, run_candidates
from .reporter import ResultRecord, RecordStore
from .scanner import DeobCandidate, LiteralSite, SlicingCriterion, find_deob_candidates, find_string_literals
from .slicer import PathLimits, SliceProgram, slice_candidate
from .vm import ExecBudget, ExecResult, ExecStatus, execute

__version__ = "0.1.0"

__all__ = [
    "Cfg", "build_cfg", "MethodDef", "SmaliProgram", "Statement", "load_program", "parse_smali",
    "print_smali", "GroundTruth", "ObfuscationScheme", "SchemeKind", "obfuscate_program",
    "AllCandidatesFailed", "deobfuscate_program", "run_candidates", "ResultRecord", "RecordStore",
    "DeobCandidate", "LiteralSite", "SlicingCriterion", "find_deob_candidates",
    "find_string_literals", "PathLimits", "SliceProgram", "slice_candidate", "ExecBudget",
    "ExecResult", "ExecStatus", "execute",
]
