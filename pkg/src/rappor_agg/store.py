"""The central database: quantized weighted-sum keys with per-label counts.

Nothing else is persisted — no cohorts, no bitsets, no client ids — so the
store file cannot identify a report. The on-disk format is line-oriented
UTF-8 with LF endings:

    ARA-STORE v1 k=<k> params=<16-hex fingerprint> total=<n>
    <key>\t<label>:<count>[,<label>:<count>...]

Keys are sorted numerically, labels lexicographically; counts are >= 1 and
sum to the header total. The params fingerprint pins a store to the encoding
parameters it was built under.
"""

import re
from dataclasses import dataclass, field
from decimal import Decimal
from pathlib import Path

from .client import ClientReport, EncodingParams
from .constants import ConstantTable
from .weighting import report_keys, weighted_sum_of_report

MAGIC = "ARA-STORE v1"

_HEADER_RE = re.compile(rf"^{re.escape(MAGIC)} k=(\d+) params=([0-9a-f]{{16}}) total=(\d+)$")
_KEY_RE = re.compile(r"^\d+\.\d{5}$")
_LABEL_FORBIDDEN = set("\t\n,:")


class StoreParseError(ValueError):
    """Malformed store file; carries the offending line number."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


@dataclass
class StoreEntry:
    key: str
    counts: dict[str, int] = field(default_factory=dict)


@dataclass
class CentralStore:
    k: int
    params_fingerprint: str
    entries: dict[str, StoreEntry] = field(default_factory=dict)
    total_training_reports: int = 0

    @classmethod
    def new(cls, params: EncodingParams) -> "CentralStore":
        return cls(k=params.k, params_fingerprint=params.fingerprint())

    def ingest(self, report: ClientReport, table: ConstantTable) -> None:
        """Fold one labeled report into the store; the report is not kept."""
        self._credit(weighted_sum_of_report(report, table).key, report.true_value)

    def ingest_many(self, reports: list[ClientReport], table: ConstantTable) -> None:
        for key, report in zip(report_keys(reports, table), reports):
            self._credit(key, report.true_value)

    def _credit(self, key: str, label: str | None) -> None:
        if label is None:
            raise ValueError("cannot ingest an unlabeled report")
        if not label:
            raise ValueError("labels must be nonempty")
        if _LABEL_FORBIDDEN & set(label):
            raise ValueError(f"label {label!r} contains store-format separator characters")
        entry = self.entries.get(key)
        if entry is None:
            entry = self.entries[key] = StoreEntry(key=key)
        entry.counts[label] = entry.counts.get(label, 0) + 1
        self.total_training_reports += 1

    def lookup(self, key: str) -> StoreEntry | None:
        return self.entries.get(key)

    def merge(self, other: "CentralStore") -> None:
        """Fold a partial store in; the count-map merge commutes and associates."""
        if other.params_fingerprint != self.params_fingerprint:
            raise ValueError("cannot merge stores built under different params")
        for key, entry in other.entries.items():
            for label, count in entry.counts.items():
                mine = self.entries.get(key)
                if mine is None:
                    mine = self.entries[key] = StoreEntry(key=key)
                mine.counts[label] = mine.counts.get(label, 0) + count
        self.total_training_reports += other.total_training_reports

    def save(self, destination: str | Path) -> None:
        lines = [
            f"{MAGIC} k={self.k} params={self.params_fingerprint} "
            f"total={self.total_training_reports}"
        ]
        for key in sorted(self.entries, key=Decimal):
            counts = self.entries[key].counts
            pairs = ",".join(f"{label}:{counts[label]}" for label in sorted(counts))
            lines.append(f"{key}\t{pairs}")
        Path(destination).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")

    @classmethod
    def load(cls, source: str | Path, params: EncodingParams | None = None) -> "CentralStore":
        """Parse a store file; verifies the fingerprint when params are given."""
        text = Path(source).read_text(encoding="utf-8")
        lines = text.split("\n")
        if lines and lines[-1] == "":
            lines.pop()
        if not lines:
            raise StoreParseError(1, "empty file, expected a header")
        header = _HEADER_RE.match(lines[0])
        if header is None:
            raise StoreParseError(1, f"malformed header {lines[0]!r}")
        k, fingerprint, total = int(header.group(1)), header.group(2), int(header.group(3))
        if params is not None and fingerprint != params.fingerprint():
            raise StoreParseError(
                1,
                f"params fingerprint mismatch: file has {fingerprint}, "
                f"session params give {params.fingerprint()}",
            )
        store = cls(k=k, params_fingerprint=fingerprint)
        running_total = 0
        for line_no, line in enumerate(lines[1:], start=2):
            key, sep, payload = line.partition("\t")
            if not sep or not payload:
                raise StoreParseError(line_no, f"expected <key>\\t<label>:<count> pairs, got {line!r}")
            if not _KEY_RE.match(key):
                raise StoreParseError(line_no, f"malformed key {key!r}")
            if key in store.entries:
                raise StoreParseError(line_no, f"duplicate key {key!r}")
            entry = StoreEntry(key=key)
            for pair in payload.split(","):
                label, sep, count_text = pair.rpartition(":")
                if not sep or not label or not count_text.isdigit():
                    raise StoreParseError(line_no, f"malformed label:count pair {pair!r}")
                if label in entry.counts:
                    raise StoreParseError(line_no, f"duplicate label {label!r}")
                count = int(count_text)
                if count < 1:
                    raise StoreParseError(line_no, f"count must be >= 1, got {pair!r}")
                entry.counts[label] = count
                running_total += count
            store.entries[key] = entry
        if running_total != total:
            raise StoreParseError(
                1, f"header total={total} but entries sum to {running_total}"
            )
        store.total_training_reports = total
        return store
