"""Per-count constant weights and the generic TF/IDF and survey estimators.

The aggregation scheme weights a report only by how many bits are on in each
of its strings. For a k-bit string with c on-bits the constant is
log10(k/c); the three smallest counts are anchored instead by a 1.1-ratio
chain off c=4 (w3 = 1.1*w4, w2 = 1.1*w3, w1 = 1.1*w2), and c=0 contributes
nothing. Sampling S reports leaves a fixed per-count contribution of
weight/S, which is what verify_constant_rule audits.
"""

import math
from dataclasses import dataclass
from numbers import Real

import numpy as np

from . import kernels
from .client import ClientReport

# Frozen reference weights for the default 32-bit table (counts 1-17), used
# by the audit CLI and the regression tests.
REFERENCE_WEIGHTS_K32 = {
    1: 1.20201279,
    2: 1.0927389,
    3: 0.993399,
    4: 0.90309,
    5: 0.80618,
    6: 0.727,
    7: 0.660052,
    8: 0.60206,
    9: 0.550907,
    10: 0.50515,
    11: 0.4637573,
    12: 0.425969,
    13: 0.3912066,
    14: 0.3590219,
    15: 0.329059,
    16: 0.30103,
    17: 0.274701,
}


@dataclass(frozen=True)
class ConstantTable:
    """Immutable per-on-bit-count weights, index c in [0, k]."""

    k: int
    weights: np.ndarray

    def constant_for_count(self, c: int) -> float:
        if not 0 <= c <= self.k:
            raise ValueError(f"on-bit count {c} out of range [0, {self.k}]")
        return float(self.weights[c])

    def tfidf_contribution(self, c: int, sample_size: int) -> float:
        """Per-report contribution of a count-c string at sample size S."""
        if sample_size < 1:
            raise ValueError(f"sample size must be >= 1, got {sample_size}")
        return self.constant_for_count(c) / sample_size


def build_constant_table(k: int) -> ConstantTable:
    """Weights for bit width k: log10(k/c) for c >= 4, 1.1-chain below."""
    if k < 4:
        raise ValueError(f"bit width must be >= 4 (1.1-chain anchor), got {k}")
    weights = np.zeros(k + 1, dtype=np.float64)
    for c in range(4, k + 1):
        weights[c] = math.log10(k / c)
    weights[3] = 1.1 * weights[4]
    weights[2] = 1.1 * weights[3]
    weights[1] = 1.1 * weights[2]
    weights.flags.writeable = False
    return ConstantTable(k=k, weights=weights)


@dataclass(frozen=True)
class SamplingCheck:
    """Audit result for one observed on-bit count across subsample sizes."""

    count: int
    sample_sizes: list[int]
    max_relative_deviation: float


def verify_constant_rule(
    reports: list[ClientReport],
    sample_sizes: list[int],
    table: ConstantTable,
    seed: int = 0,
) -> list[SamplingCheck]:
    """Audit that contribution*S reproduces the constant for every count seen.

    Draws one subsample per size (seeded, without replacement), recomputes
    each sampled string's contribution times S, and reports the worst
    relative deviation from the table per count. The rule is definitional,
    so deviations beyond float rounding mean a broken table.
    """
    if not reports:
        raise ValueError("cannot audit an empty report list")
    for size in sample_sizes:
        if size > len(reports):
            raise ValueError(f"sample size {size} exceeds report count {len(reports)}")
        if size < 1:
            raise ValueError(f"sample size must be >= 1, got {size}")

    prr_counts = kernels.popcounts(np.array([r.prr for r in reports], dtype=np.uint64))
    irr_counts = kernels.popcounts(np.array([r.irr for r in reports], dtype=np.uint64))

    worst: dict[int, float] = {}
    seen_sizes: dict[int, list[int]] = {}
    for order, size in enumerate(sample_sizes):
        pick_seed = kernels.derive_seed(seed, order, size)
        subsample = np.argsort(kernels.stream_uniforms(np.uint64(pick_seed), len(reports)))[:size]
        counts = np.concatenate([prr_counts[subsample], irr_counts[subsample]])
        recovered = (table.weights[counts] / size) * size
        expected = table.weights[counts]
        deviation = np.where(
            expected > 0.0,
            np.abs(recovered - expected) / np.where(expected > 0.0, expected, 1.0),
            np.where(recovered == 0.0, 0.0, np.inf),
        )
        for c in np.unique(counts):
            mask = counts == c
            worst[int(c)] = max(worst.get(int(c), 0.0), float(deviation[mask].max()))
            seen_sizes.setdefault(int(c), []).append(size)

    return [
        SamplingCheck(count=c, sample_sizes=seen_sizes[c], max_relative_deviation=worst[c])
        for c in sorted(worst)
    ]


def tf(term_count: int, doc_length: int) -> float:
    """Term frequency: occurrences over document length."""
    if doc_length < 1:
        raise ValueError("document length must be >= 1")
    if not 0 <= term_count <= doc_length:
        raise ValueError(f"term count {term_count} out of range [0, {doc_length}]")
    return term_count / doc_length


def idf(total_docs: int, docs_containing: int) -> float:
    """Inverse document frequency with +1 smoothing: log10(N / (1 + n_t))."""
    if total_docs < 1:
        raise ValueError("corpus must contain at least one document")
    if docs_containing < 0:
        raise ValueError("containing-document count cannot be negative")
    return math.log10(total_docs / (1 + docs_containing))


@dataclass(frozen=True)
class RRSurvey:
    """A randomized-response survey outcome.

    yes_fraction is the observed share of yes answers; truth_probability is
    the chance a respondent answered the sensitive question truthfully.
    Fields accept any Real (pass Fractions for exact arithmetic).
    """

    yes_fraction: Real
    truth_probability: Real

    def __post_init__(self):
        if not 0 <= self.yes_fraction <= 1:
            raise ValueError(f"yes fraction must be in [0, 1], got {self.yes_fraction}")
        if not 0 <= self.truth_probability <= 1:
            raise ValueError(f"truth probability must be in [0, 1], got {self.truth_probability}")
        if 2 * self.truth_probability - 1 == 0:
            raise ValueError("truth probability 1/2 makes the estimator undefined")


@dataclass(frozen=True)
class ProportionEstimate:
    """Estimated true proportion, clamped to [0, 1]; raw keeps the unclamped value."""

    value: Real
    raw: Real
    out_of_range: bool


def estimate_true_proportion(survey: RRSurvey) -> ProportionEstimate:
    """Invert randomized response: (YA + p - 1) / (2p - 1).

    Arithmetic stays in the input type, so Fraction inputs give exact
    results while floats give the usual float64 evaluation.
    """
    ya, p = survey.yes_fraction, survey.truth_probability
    denominator = 2 * p - 1
    if denominator == 0:
        raise ValueError("truth probability 1/2 makes the estimator undefined")
    raw = (ya + p - 1) / denominator
    value = min(max(raw, 0), 1)
    return ProportionEstimate(value=value, raw=raw, out_of_range=value != raw)
