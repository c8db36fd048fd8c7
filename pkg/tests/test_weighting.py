"""Weighted sums and store-key quantization."""

import itertools
import math

import pytest

from rappor_agg import ClientReport, quantize_key, weighted_sum, weighted_sum_of_report
from rappor_agg.weighting import report_keys


def oracle_weights() -> list[float]:
    """Independent scalar reconstruction of the constant table for k=32."""
    w = [0.0] * 33
    for c in range(4, 33):
        w[c] = math.log10(32 / c)
    w[3] = 1.1 * w[4]
    w[2] = 1.1 * w[3]
    w[1] = 1.1 * w[2]
    return w


def oracle_quantize(x: float) -> str:
    """Exact half-up 5-decimal quantization via integer arithmetic."""
    num, den = x.as_integer_ratio()
    q, r = divmod(num * 100_000, den)
    if 2 * r >= den:
        q += 1
    return f"{q // 100_000}.{q % 100_000:05d}"


class TestQuantizeKey:
    def test_zero(self):
        assert quantize_key(0.0) == "0.00000"

    def test_examples(self):
        assert quantize_key(25.286519) == "25.28652"
        assert quantize_key(1.0) == "1.00000"
        assert quantize_key(0.123456789) == "0.12346"

    def test_half_up_tie(self):
        # 0.015625 is exactly representable; the 6th decimal digit is a tied 5
        assert quantize_key(0.015625) == "0.01563"

    def test_idempotent(self):
        key = quantize_key(7.7071067811)
        assert quantize_key(float(key)) == key

    def test_matches_integer_oracle(self):
        xs = [0.0, 0.015625, 1.20201279, 25.28651963577442, 123.000004999, 2048.5]
        for x in xs:
            assert quantize_key(x) == oracle_quantize(x)

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            quantize_key(-0.1)


class TestWeightedSum:
    def test_paper_point_example(self, table32):
        result = weighted_sum(8, 4, 3, table32)
        assert result.key == "25.28652"
        assert result.value == pytest.approx((8 * 0.60206 + 4 * 0.90309) * 3, abs=1e-3)

    def test_bracket_only_when_cohort_zero(self, table32):
        assert weighted_sum(8, 4, 0, table32).key == "8.42884"

    def test_zero_counts(self, table32):
        for v in (0, 1, 17):
            assert weighted_sum(0, 0, v, table32).key == "0.00000"

    def test_two_singleton_counts(self, table32):
        result = weighted_sum(1, 1, 1, table32)
        assert result.value == pytest.approx(2.40402558, abs=1e-4)
        assert result.key == "2.40403"

    def test_v_zero_v_one_collision(self, table32):
        for a, b in [(8, 4), (1, 1), (32, 17)]:
            assert weighted_sum(a, b, 0, table32).key == weighted_sum(a, b, 1, table32).key

    def test_swap_symmetry(self, table32):
        for a, b, v in [(8, 4, 3), (0, 7, 2), (31, 2, 63)]:
            assert weighted_sum(a, b, v, table32).key == weighted_sum(b, a, v, table32).key

    def test_v_linearity(self, table32):
        base = weighted_sum(5, 9, 1, table32).value
        for v in (2, 3, 10, 63):
            assert weighted_sum(5, 9, v, table32).value == pytest.approx(
                v * base, rel=1e-12
            )

    def test_key_parses_near_value(self, table32):
        for a, b, v in itertools.product((0, 1, 8, 17, 32), (0, 4, 32), (0, 1, 63)):
            result = weighted_sum(a, b, v, table32)
            assert abs(float(result.key) - result.value) <= 5e-6 + 1e-9

    def test_count_bounds(self, table32):
        with pytest.raises(ValueError):
            weighted_sum(33, 0, 1, table32)
        with pytest.raises(ValueError):
            weighted_sum(0, -1, 1, table32)
        with pytest.raises(ValueError):
            weighted_sum(0, 0, -1, table32)

    def test_sampled_against_independent_oracle(self, table32):
        w = oracle_weights()
        cases = [
            (a, b, v)
            for a in (0, 1, 2, 3, 4, 8, 17, 20, 31, 32)
            for b in (0, 1, 5, 16, 32)
            for v in (0, 1, 2, 33, 63)
        ]
        for a, b, v in cases:
            exact = (a * w[a] + b * w[b]) * max(v, 1)
            assert weighted_sum(a, b, v, table32).key == oracle_quantize(exact)


class TestReportHelpers:
    def test_weighted_sum_of_report(self, table32):
        report = ClientReport("c0", 3, prr=(1 << 8) - 1, irr=(1 << 4) - 1, true_value=None)
        assert weighted_sum_of_report(report, table32).key == "25.28652"

    def test_swapped_bitsets_same_key(self, table32):
        a = ClientReport("c0", 5, prr=0b111, irr=0b11111, true_value=None)
        b = ClientReport("c0", 5, prr=0b11111, irr=0b111, true_value=None)
        assert (
            weighted_sum_of_report(a, table32).key
            == weighted_sum_of_report(b, table32).key
        )

    def test_all_zero_bitsets(self, table32):
        report = ClientReport("c0", 40, prr=0, irr=0, true_value=None)
        assert weighted_sum_of_report(report, table32).key == "0.00000"

    def test_batch_matches_scalar(self, table32):
        reports = [
            ClientReport(f"c{i}", cohort=i % 64, prr=(1 << (i % 33)) - 1, irr=(1 << (i * 7 % 33)) - 1, true_value=None)
            for i in range(200)
        ]
        batch = report_keys(reports, table32)
        scalar = [weighted_sum_of_report(r, table32).key for r in reports]
        assert batch == scalar
