"""Weighted sums and their quantized store keys.

A report reduces to W = (n_prr*w[n_prr] + n_irr*w[n_irr]) * V, where the n's
are on-bit counts, w is the constant table, and V is the cohort. V = 0 drops
the multiplier (so V=0 and V=1 collide by construction; kept as defined).
Store keys are W rounded half-up to exactly 5 decimals, rendered with a
minimal integer part ("0.00000" for zero), which separates every distinct
count/cohort outcome under the default parameters while absorbing float
jitter. Half-up decimal rounding keeps stores byte-identical across
platforms.
"""

from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal

import numpy as np

from . import kernels
from .client import ClientReport
from .constants import ConstantTable

_FIVE_PLACES = Decimal("0.00001")


@dataclass(frozen=True)
class WeightedSum:
    value: float
    key: str


def quantize_key(value: float) -> str:
    """Half-up decimal rounding of a nonnegative float to 5 places."""
    if value < 0:
        raise ValueError(f"weighted sums are nonnegative, got {value}")
    return str(Decimal(value).quantize(_FIVE_PLACES, rounding=ROUND_HALF_UP))


def weighted_sum(n_prr: int, n_irr: int, cohort: int, table: ConstantTable) -> WeightedSum:
    """W for a pair of on-bit counts and a cohort value."""
    for count in (n_prr, n_irr):
        if not 0 <= count <= table.k:
            raise ValueError(f"on-bit count {count} out of range [0, {table.k}]")
    if cohort < 0:
        raise ValueError(f"cohort must be >= 0, got {cohort}")
    value = float(
        kernels.weighted_sums(
            np.array([n_prr], dtype=np.int64),
            np.array([n_irr], dtype=np.int64),
            np.array([cohort], dtype=np.int64),
            table.weights,
        )[0]
    )
    return WeightedSum(value=value, key=quantize_key(value))


def weighted_sum_of_report(report: ClientReport, table: ConstantTable) -> WeightedSum:
    return weighted_sum(
        int(report.prr).bit_count(), int(report.irr).bit_count(), report.cohort, table
    )


def report_keys(reports: list[ClientReport], table: ConstantTable) -> list[str]:
    """Quantized store keys for a batch, via the array kernels."""
    if not reports:
        return []
    prr_counts = kernels.popcounts(np.array([r.prr for r in reports], dtype=np.uint64))
    irr_counts = kernels.popcounts(np.array([r.irr for r in reports], dtype=np.uint64))
    cohorts = np.array([r.cohort for r in reports], dtype=np.int64)
    values = kernels.weighted_sums(prr_counts, irr_counts, cohorts, table.weights)
    return [quantize_key(float(v)) for v in values]
