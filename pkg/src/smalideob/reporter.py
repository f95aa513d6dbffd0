"""Per-literal result records and the evaluation statistics computed from them.

Record file format: UTF-8 text, one record per line.  The first line is a
header ``#records v1 created=<ISO timestamp>`` (taken from
``SOURCE_DATE_EPOCH`` when that is set); any other line starting
with ``#`` is a comment.  Every record line is a JSON object whose keys
appear in the order of :data:`FIELDS`, written with ASCII escapes only:

=================  ==========================================================
``app``            application identifier (string)
``cls``            class descriptor, e.g. ``Lu/Bjg;``
``method``         method name plus descriptor, e.g. ``Bjg()V``
``literal_index``  statement index of the ``const-string`` (int)
``literal``        the literal as found in the code
``candidate_count`` number of deobfuscation candidates found (int)
``condition``      condition of the candidate that produced the outcome, or null
``slice_size``     statement count of that candidate's slice, or null
``status``         Ok, Timeout, UnsupportedOpcode, RuntimeError, Rejected,
                   NoCandidate or Scanned
``output``         recovered string when status is Ok, else null
``duration``       seconds spent on the literal, or null when not timed
``detail``         failure detail, or null
=================  ==========================================================

A record's key is ``(app, cls, method, literal_index)``; re-inserting a key
is a no-op.
"""

from __future__ import annotations

import csv
import datetime as _dt
import io
import json
import os
from collections import Counter
from dataclasses import asdict, dataclass, fields
from typing import Iterable, Literal

import numpy as np

HEADER_PREFIX = "#records v1"

OK = "Ok"
REJECTED = "Rejected"
NO_CANDIDATE = "NoCandidate"
SCANNED = "Scanned"


class StorageError(OSError):
    pass


@dataclass(frozen=True)
class ResultRecord:
    app: str
    cls: str
    method: str
    literal_index: int
    literal: str
    candidate_count: int
    condition: str | None = None
    slice_size: int | None = None
    status: str = NO_CANDIDATE
    output: str | None = None
    duration: float | None = None
    detail: str | None = None

    @property
    def key(self) -> tuple[str, str, str, int]:
        return self.app, self.cls, self.method, self.literal_index

    def to_line(self) -> str:
        return json.dumps(asdict(self), ensure_ascii=True, separators=(",", ":"))

    @classmethod
    def from_line(cls, line: str) -> "ResultRecord":
        data = json.loads(line)
        return cls(**{f.name: data.get(f.name) for f in fields(cls)})


FIELDS = tuple(f.name for f in fields(ResultRecord))


def _header(created: str | None) -> str:
    if created is None:
        # SOURCE_DATE_EPOCH pins the timestamp for reproducible output
        epoch = os.environ.get("SOURCE_DATE_EPOCH")
        now = _dt.datetime.fromtimestamp(int(epoch), _dt.timezone.utc) if epoch \
            else _dt.datetime.now(_dt.timezone.utc)
        created = now.replace(microsecond=0).isoformat()
    return f"{HEADER_PREFIX} created={created}\n"


class RecordStore:
    """Append-only record file; an in-memory store when ``path`` is None."""

    def __init__(self, path: str | os.PathLike | None = None, *, truncate: bool = False,
                 created: str | None = None):
        self.path = path
        self._records: dict[tuple, ResultRecord] = {}
        self._fh = None
        if path is None:
            return
        try:
            if not truncate and os.path.exists(path):
                for rec in read_records(path):
                    self._records.setdefault(rec.key, rec)
                self._fh = open(path, "a", encoding="utf-8", newline="\n")
                if os.path.getsize(path) == 0:
                    self._fh.write(_header(created))
            else:
                self._fh = open(path, "w", encoding="utf-8", newline="\n")
                self._fh.write(_header(created))
            self._fh.flush()
        except OSError as exc:
            raise StorageError(f"cannot open record store {path}: {exc}") from exc

    def __len__(self) -> int:
        return len(self._records)

    def __contains__(self, key) -> bool:
        return key in self._records

    def append(self, rec: ResultRecord) -> bool:
        """Store ``rec`` unless its key is already present; True if written."""
        if rec.key in self._records:
            return False
        if self._fh is not None:
            try:
                self._fh.write(rec.to_line() + "\n")
                self._fh.flush()
            except OSError as exc:
                raise StorageError(f"cannot append to {self.path}: {exc}") from exc
        self._records[rec.key] = rec
        return True

    def records(self) -> list[ResultRecord]:
        return list(self._records.values())

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def record(store: RecordStore, rec: ResultRecord) -> None:
    store.append(rec)


def read_records(path: str | os.PathLike) -> list[ResultRecord]:
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise StorageError(f"cannot read record store {path}: {exc}") from exc
    out = []
    for n, line in enumerate(lines, 1):
        if not line.strip() or line.startswith("#"):
            continue
        try:
            out.append(ResultRecord.from_line(line))
        except (ValueError, TypeError) as exc:
            raise StorageError(f"{path}:{n}: malformed record: {exc}") from exc
    return out


# ---------------------------------------------------------------------------
# statistics


def char_distribution(records: Iterable[ResultRecord],
                      which: Literal["before", "after"] = "after") -> np.ndarray:
    """Counts of ASCII code units 0..127 in the literals (before) or recovered outputs (after).

    Code units outside the ASCII range are ignored.
    """
    if which not in ("before", "after"):
        raise ValueError("which must be 'before' or 'after'")
    units: list[int] = []
    for rec in records:
        text = rec.literal if which == "before" else rec.output
        if text:
            units.extend(o for o in map(ord, text) if o < 128)
    return np.bincount(np.asarray(units, dtype=np.int64), minlength=128)


def entropy(hist: np.ndarray) -> float:
    """Shannon entropy in bits of a count histogram (0 for an empty one)."""
    counts = np.asarray(hist, dtype=np.float64)
    total = counts.sum()
    if total == 0:
        return 0.0
    p = counts[counts > 0] / total
    return float(-(p * np.log2(p)).sum())


def top_bins(hist: np.ndarray, k: int = 5) -> list[int]:
    """The ``k`` most populated bins, ties broken by lower bin."""
    order = sorted(range(len(hist)), key=lambda b: (-int(hist[b]), b))
    return [b for b in order[:k] if hist[b] > 0]


def slice_size_distribution(records: Iterable[ResultRecord]) -> dict[int, int]:
    """Histogram of slice sizes over successfully executed records."""
    counts = Counter(r.slice_size for r in records if r.status == OK and r.slice_size is not None)
    return dict(sorted(counts.items()))


def obfuscation_fraction(records: Iterable[ResultRecord]) -> dict[str, float]:
    """Per app, the percentage of literals with at least one deobfuscation candidate."""
    total: Counter = Counter()
    hits: Counter = Counter()
    for r in records:
        total[r.app] += 1
        if r.candidate_count > 0:
            hits[r.app] += 1
    return {app: 100.0 * hits[app] / total[app] for app in sorted(total)}


def histogram_csv(rows: Iterable[tuple], header: tuple[str, str] = ("bin", "count")) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(row)
    return buf.getvalue()


def write_histogram_csv(path: str | os.PathLike, rows: Iterable[tuple],
                        header: tuple[str, str] = ("bin", "count")) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(histogram_csv(rows, header))
    except OSError as exc:
        raise StorageError(f"cannot write {path}: {exc}") from exc
