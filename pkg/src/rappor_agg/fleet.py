"""Fleet simulation: seeded multi-client corpora and the report CSV format.

A corpus is a pure function of its config. Per-client randomness (value
draw, instantaneous response) is derived from (seed, client index) through
counter streams, so encoding order never matters and regenerating with the
same config is byte-identical.
"""

import csv
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import kernels
from .client import ClientReport, EncodingParams, assign_cohort, bloom_encode, prr_seed

# Stream tags keep the value draw and the IRR noise statistically disjoint.
_VALUE_STREAM = 1
_IRR_STREAM = 2

_DEFAULT_VALUES = tuple(f"v{i}" for i in range(1, 11))

_HEADER_LABELED = ["client", "cohort", "prr", "irr", "true_value"]
_HEADER_UNLABELED = ["client", "cohort", "prr", "irr"]


class CorpusParseError(ValueError):
    """Malformed report CSV; carries the offending line number."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


def exponential_distribution(n_values: int, rate: float = 0.5) -> list[float]:
    """Probabilities with P(v_i) proportional to exp(-rate * i), i = 1..n."""
    if n_values < 1:
        raise ValueError(f"n_values must be >= 1, got {n_values}")
    if rate <= 0:
        raise ValueError(f"rate must be positive, got {rate}")
    raw = [math.exp(-rate * i) for i in range(1, n_values + 1)]
    total = sum(raw)
    return [w / total for w in raw]


@dataclass(frozen=True)
class FleetConfig:
    """Everything that determines a corpus.

    distribution=None selects the default exponential skew (rate 0.5) over
    the configured values.
    """

    n_clients: int
    values: tuple[str, ...] = _DEFAULT_VALUES
    distribution: tuple[float, ...] | None = None
    seed: int = 0
    params: EncodingParams = field(default_factory=EncodingParams)

    def __post_init__(self):
        if self.n_clients < 0:
            raise ValueError(f"n_clients must be nonnegative, got {self.n_clients}")
        values = tuple(self.values)
        if not values or any(not v for v in values):
            raise ValueError("values must be nonempty labels")
        if len(set(values)) != len(values):
            raise ValueError("values must be distinct")
        if self.distribution is None:
            dist = tuple(exponential_distribution(len(values)))
        else:
            dist = tuple(float(p) for p in self.distribution)
        if len(dist) != len(values):
            raise ValueError(
                f"distribution has {len(dist)} entries for {len(values)} values"
            )
        if any(p < 0 for p in dist):
            raise ValueError("probabilities must be nonnegative")
        if abs(sum(dist) - 1.0) > 1e-9:
            raise ValueError(f"probabilities sum to {sum(dist)!r}, expected 1")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "distribution", dist)


def generate_corpus(config: FleetConfig) -> list[ClientReport]:
    """Encode one labeled report per simulated client."""
    n = config.n_clients
    params = config.params
    if n == 0:
        return []

    cumulative = np.cumsum(np.asarray(config.distribution, dtype=np.float64))
    draws = kernels.stream_uniforms(
        np.uint64(kernels.derive_seed(config.seed, _VALUE_STREAM)), n
    )
    label_idx = np.minimum(
        np.searchsorted(cumulative, draws, side="right"), len(config.values) - 1
    )

    client_ids = [f"c{i:06d}" for i in range(n)]
    cohorts = [assign_cohort(cid, params.m) for cid in client_ids]
    labels = [config.values[i] for i in label_idx]

    blooms = np.empty(n, dtype=np.uint64)
    seeds = np.empty(n, dtype=np.uint64)
    bloom_cache: dict[tuple[str, int], int] = {}
    for i in range(n):
        pair = (labels[i], cohorts[i])
        bits = bloom_cache.get(pair)
        if bits is None:
            bits = bloom_cache[pair] = bloom_encode(pair[0], pair[1], params)
        blooms[i] = bits
        seeds[i] = prr_seed(client_ids[i], labels[i])

    prr = kernels.prr_bits(seeds, blooms, params.k, params.f)
    irr_seeds = kernels.stream_seeds(
        np.uint64(kernels.derive_seed(config.seed, _IRR_STREAM)), n
    )
    irr = kernels.irr_bits(irr_seeds, prr, params.k, params.p, params.q)

    return [
        ClientReport(
            client_id=client_ids[i],
            cohort=cohorts[i],
            prr=int(prr[i]),
            irr=int(irr[i]),
            true_value=labels[i],
        )
        for i in range(n)
    ]


def strip_labels(reports: list[ClientReport]) -> list[ClientReport]:
    """Copies with true_value removed; what the aggregator actually sees."""
    return [replace(r, true_value=None) for r in reports]


def to_bitstring(bits: int, k: int) -> str:
    """k-character '0'/'1' string, most significant index first."""
    if not 0 <= bits < (1 << k):
        raise ValueError(f"bitset {bits} does not fit in {k} bits")
    return format(bits, f"0{k}b")


def from_bitstring(text: str) -> int:
    if not text or set(text) - {"0", "1"}:
        raise ValueError(f"bitstring must be nonempty '0'/'1' characters, got {text!r}")
    return int(text, 2)


def write_csv(
    reports: list[ClientReport],
    destination: str | Path,
    params: EncodingParams | None = None,
) -> None:
    """Serialize reports; the true_value column is present iff every report
    carries a label (mixed corpora are rejected)."""
    params = params or EncodingParams()
    labeled_count = sum(r.true_value is not None for r in reports)
    if labeled_count not in (0, len(reports)):
        raise ValueError("corpus mixes labeled and unlabeled reports")
    labeled = labeled_count == len(reports) and reports
    with open(destination, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(_HEADER_LABELED if labeled else _HEADER_UNLABELED)
        for r in reports:
            row = [
                r.client_id,
                str(r.cohort),
                to_bitstring(r.prr, params.k),
                to_bitstring(r.irr, params.k),
            ]
            if labeled:
                row.append(r.true_value)
            writer.writerow(row)


def _parse_bitstring(text: str, k: int, column: str, line_no: int) -> int:
    if len(text) != k or set(text) - {"0", "1"}:
        raise CorpusParseError(
            line_no, f"{column} must be a {k}-character '0'/'1' string, got {text!r}"
        )
    return int(text, 2)


def read_csv(
    source: str | Path, params: EncodingParams | None = None
) -> list[ClientReport]:
    """Parse a report CSV; tolerates the absent true_value column."""
    params = params or EncodingParams()
    reports: list[ClientReport] = []
    with open(source, encoding="utf-8", newline="") as handle:
        rows = csv.reader(handle)
        header = next(rows, None)
        if header == _HEADER_LABELED:
            labeled = True
        elif header == _HEADER_UNLABELED:
            labeled = False
        else:
            raise CorpusParseError(1, f"unrecognized header {header!r}")
        width = 5 if labeled else 4
        for line_no, row in enumerate(rows, start=2):
            if len(row) != width:
                raise CorpusParseError(
                    line_no, f"expected {width} columns, got {len(row)}"
                )
            client_id = row[0]
            if not client_id:
                raise CorpusParseError(line_no, "empty client id")
            try:
                cohort = int(row[1])
            except ValueError:
                raise CorpusParseError(
                    line_no, f"cohort must be an integer, got {row[1]!r}"
                ) from None
            if not 0 <= cohort < params.m:
                raise CorpusParseError(
                    line_no, f"cohort {cohort} out of range [0, {params.m})"
                )
            prr = _parse_bitstring(row[2], params.k, "prr", line_no)
            irr = _parse_bitstring(row[3], params.k, "irr", line_no)
            label = row[4] if labeled else None
            if labeled and not label:
                raise CorpusParseError(line_no, "empty true_value")
            reports.append(
                ClientReport(
                    client_id=client_id,
                    cohort=cohort,
                    prr=prr,
                    irr=irr,
                    true_value=label,
                )
            )
    return reports
