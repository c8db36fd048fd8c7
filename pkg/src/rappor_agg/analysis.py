"""Analysis phase: match test reports against the store and score batches.

A test report is reduced to its quantized weighted-sum key. If the key
exists in the store, the report credits that entry's modal label; otherwise
it credits nothing. The label with the most credits is declared the batch's
major true value; achievement is its credit share of the batch size.
"""

import csv
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import kernels
from .client import ClientReport
from .constants import ConstantTable, build_constant_table
from .fleet import FleetConfig, generate_corpus, strip_labels
from .store import CentralStore
from .weighting import report_keys, weighted_sum_of_report

_BATCH_STREAM = 3

RESULTS_HEADER = ["test", "major_value", "sample_size", "achievement_pct", "ground_truth", "correct"]
COMPANION_NAME = "achievement_vs_size.csv"

# Sentinel major value for batches where nothing matched: a defined answer
# instead of an arbitrary label, so correctness statistics stay honest.
NO_MAJOR = ""


@dataclass
class AnalysisReport:
    sample_size: int
    matched: int
    credits: dict[str, int] = field(default_factory=dict)
    major_value: str = NO_MAJOR
    achievement_pct: float = 0.0


@dataclass(frozen=True)
class ExperimentRow:
    test_no: int
    major_true_value: str
    sample_size: int
    achievement_pct: float
    ground_truth_major: str
    detected_correctly: bool


def _modal_label(counts: dict[str, int] | Counter) -> str:
    """Label with the highest count; ties go to the lexicographically smallest."""
    return min(counts.items(), key=lambda item: (-item[1], item[0]))[0]


def match_report(
    report: ClientReport, store: CentralStore, table: ConstantTable
) -> str | None:
    """Modal label of the store entry under the report's key, if any."""
    entry = store.lookup(weighted_sum_of_report(report, table).key)
    if entry is None:
        return None
    return _modal_label(entry.counts)


def analyze_batch(
    reports: list[ClientReport], store: CentralStore, table: ConstantTable
) -> AnalysisReport:
    """Score one batch; labels on the reports, if any, are ignored."""
    if not reports:
        raise ValueError("cannot analyze an empty batch")
    credits: Counter[str] = Counter()
    for key in report_keys(reports, table):
        entry = store.lookup(key)
        if entry is not None:
            credits[_modal_label(entry.counts)] += 1
    matched = sum(credits.values())
    if credits:
        major = _modal_label(credits)
        achievement = 100.0 * credits[major] / len(reports)
    else:
        major, achievement = NO_MAJOR, 0.0
    return AnalysisReport(
        sample_size=len(reports),
        matched=matched,
        credits=dict(credits),
        major_value=major,
        achievement_pct=achievement,
    )


def run_experiment(
    train_config: FleetConfig,
    test_config: FleetConfig,
    n_tests: int,
    batch_size: int,
) -> list[ExperimentRow]:
    """Train a store once, then score n_tests seeded batches against it.

    Each test subsamples batch_size reports from the test corpus with a
    seed derived from (test seed, test index); ground truth is the batch's
    modal true label, stripped before matching.
    """
    if train_config.params != test_config.params:
        raise ValueError("train and test configs must share encoding params")
    if n_tests < 0:
        raise ValueError(f"n_tests must be nonnegative, got {n_tests}")
    if batch_size < 1:
        raise ValueError(f"batch_size must be >= 1, got {batch_size}")
    if batch_size > test_config.n_clients:
        raise ValueError(
            f"batch_size {batch_size} exceeds test corpus size {test_config.n_clients}"
        )

    table = build_constant_table(train_config.params.k)
    store = CentralStore.new(train_config.params)
    store.ingest_many(generate_corpus(train_config), table)
    corpus = generate_corpus(test_config)

    rows = []
    for test_no in range(1, n_tests + 1):
        pick_seed = kernels.derive_seed(test_config.seed, _BATCH_STREAM, test_no)
        order = np.argsort(
            kernels.stream_uniforms(np.uint64(pick_seed), len(corpus)), kind="stable"
        )[:batch_size]
        batch = [corpus[i] for i in order]
        ground_truth = _modal_label(Counter(r.true_value for r in batch))
        result = analyze_batch(strip_labels(batch), store, table)
        rows.append(
            ExperimentRow(
                test_no=test_no,
                major_true_value=result.major_value,
                sample_size=batch_size,
                achievement_pct=result.achievement_pct,
                ground_truth_major=ground_truth,
                detected_correctly=result.major_value == ground_truth,
            )
        )
    return rows


def write_results_csv(rows: list[ExperimentRow], destination: str | Path) -> None:
    """Write the results table plus a plot-ready companion of
    (sample_size, achievement_pct) pairs in the same directory."""
    destination = Path(destination)
    with open(destination, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(RESULTS_HEADER)
        for row in rows:
            writer.writerow(
                [
                    str(row.test_no),
                    row.major_true_value,
                    str(row.sample_size),
                    repr(row.achievement_pct),
                    row.ground_truth_major,
                    "true" if row.detected_correctly else "false",
                ]
            )
    with open(destination.parent / COMPANION_NAME, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["sample_size", "achievement_pct"])
        for row in rows:
            writer.writerow([str(row.sample_size), repr(row.achievement_pct)])


def read_results_csv(source: str | Path) -> list[ExperimentRow]:
    rows: list[ExperimentRow] = []
    with open(source, encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header != RESULTS_HEADER:
            raise ValueError(f"line 1: unrecognized results header {header!r}")
        for line_no, record in enumerate(reader, start=2):
            if len(record) != len(RESULTS_HEADER):
                raise ValueError(f"line {line_no}: expected {len(RESULTS_HEADER)} columns")
            if record[5] not in ("true", "false"):
                raise ValueError(f"line {line_no}: correct must be true/false")
            rows.append(
                ExperimentRow(
                    test_no=int(record[0]),
                    major_true_value=record[1],
                    sample_size=int(record[2]),
                    achievement_pct=float(record[3]),
                    ground_truth_major=record[4],
                    detected_correctly=record[5] == "true",
                )
            )
    return rows
