"""Kernel correctness: reference vectors, path parity, stream properties."""

import os
import subprocess
import sys

import numpy as np
import pytest

from rappor_agg import kernels

MASK64 = (1 << 64) - 1


def reference_splitmix64(seed: int, n: int) -> list[int]:
    """Textbook splitmix64: advance by the golden gamma, then finalize."""
    out, state = [], seed & MASK64
    for _ in range(n):
        state = (state + 0x9E3779B97F4A7C15) & MASK64
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        out.append(z ^ (z >> 31))
    return out


class TestMix64:
    def test_known_vector_seed_zero(self):
        # first output of splitmix64 seeded with 0, a widely published vector
        assert kernels.mix64(0x9E3779B97F4A7C15) == 0xE220A8397B1DCDAF

    def test_matches_reference_sequence(self):
        ref = reference_splitmix64(987654321, 64)
        ours = [
            kernels.mix64((987654321 + (i + 1) * 0x9E3779B97F4A7C15) & MASK64)
            for i in range(64)
        ]
        assert ours == ref

    def test_stream_seeds_is_the_splitmix_sequence(self):
        ref = reference_splitmix64(0, 8)
        assert [int(x) for x in kernels.stream_seeds(np.uint64(0), 8)] == ref

    def test_derive_seed_is_order_sensitive(self):
        assert kernels.derive_seed(7, 1, 2) != kernels.derive_seed(7, 2, 1)
        assert kernels.derive_seed(7, 1) != kernels.derive_seed(8, 1)
        assert kernels.derive_seed(7, 1) == kernels.derive_seed(7, 1)


class TestStreams:
    def test_uniforms_in_unit_interval(self):
        u = kernels.stream_uniforms(np.uint64(42), 10_000)
        assert u.min() >= 0.0
        assert u.max() < 1.0

    def test_uniform_mean_near_half(self):
        u = kernels.stream_uniforms(np.uint64(42), 100_000)
        assert abs(u.mean() - 0.5) < 0.005

    def test_prefix_property(self):
        # element i depends only on (seed, i), never on n
        long = kernels.stream_uniforms(np.uint64(9), 100)
        short = kernels.stream_uniforms(np.uint64(9), 40)
        np.testing.assert_array_equal(long[:40], short)

    def test_distinct_seeds_distinct_streams(self):
        a = kernels.stream_uniforms(np.uint64(1), 100)
        b = kernels.stream_uniforms(np.uint64(2), 100)
        assert not np.array_equal(a, b)


class TestPopcounts:
    def test_against_int_bit_count(self):
        rng = np.random.default_rng(3)
        xs = rng.integers(0, 2**64, size=2000, dtype=np.uint64)
        expected = np.array([int(x).bit_count() for x in xs], dtype=np.int64)
        np.testing.assert_array_equal(kernels.popcounts(xs), expected)

    def test_edges(self):
        xs = np.array([0, 1, MASK64], dtype=np.uint64)
        np.testing.assert_array_equal(kernels.popcounts(xs), [0, 1, 64])


class TestChannels:
    def test_prr_f_zero_is_identity(self):
        rng = np.random.default_rng(5)
        seeds = rng.integers(0, 2**64, size=500, dtype=np.uint64)
        base = rng.integers(0, 2**32, size=500, dtype=np.uint64)
        np.testing.assert_array_equal(kernels.prr_bits(seeds, base, 32, 0.0), base)

    def test_prr_f_one_is_coin_flips(self):
        rng = np.random.default_rng(6)
        seeds = rng.integers(0, 2**64, size=20_000, dtype=np.uint64)
        base = np.zeros(20_000, dtype=np.uint64)
        out = kernels.prr_bits(seeds, base, 32, 1.0)
        mean = kernels.popcounts(out).mean() / 32
        assert 0.49 < mean < 0.51

    def test_irr_noiseless_channel(self):
        rng = np.random.default_rng(7)
        seeds = rng.integers(0, 2**64, size=500, dtype=np.uint64)
        base = rng.integers(0, 2**32, size=500, dtype=np.uint64)
        np.testing.assert_array_equal(kernels.irr_bits(seeds, base, 32, 0.0, 1.0), base)

    def test_irr_degenerate_all_ones(self):
        seeds = np.arange(10, dtype=np.uint64)
        base = np.zeros(10, dtype=np.uint64)
        out = kernels.irr_bits(seeds, base, 32, 1.0, 1.0)
        assert all(int(x) == (1 << 32) - 1 for x in out)

    def test_deterministic_per_seed(self):
        seeds = np.array([11, 11, 12], dtype=np.uint64)
        base = np.array([5, 5, 5], dtype=np.uint64)
        out = kernels.prr_bits(seeds, base, 32, 0.5)
        assert out[0] == out[1]
        assert out[0] != out[2]


class TestWeightedSums:
    def test_matches_scalar_formula(self):
        weights = np.zeros(33)
        weights[1:] = np.log10(32.0 / np.arange(1, 33))
        rng = np.random.default_rng(8)
        a = rng.integers(0, 33, size=300).astype(np.int64)
        b = rng.integers(0, 33, size=300).astype(np.int64)
        v = rng.integers(0, 64, size=300).astype(np.int64)
        out = kernels.weighted_sums(a, b, v, weights)
        for i in range(300):
            bracket = a[i] * weights[a[i]] + b[i] * weights[b[i]]
            assert out[i] == bracket * max(int(v[i]), 1)


@pytest.fixture(scope="module")
def nb():
    return kernels.numba_kernels_or_none()


@pytest.mark.skipif(
    kernels.numba_kernels_or_none() is None, reason="numba not importable"
)
class TestPathParity:
    """The numba and numpy implementations must agree bit for bit."""

    def test_streams(self, nb):
        for name in ("stream_uniforms", "stream_seeds"):
            a = kernels.NUMPY_KERNELS[name](np.uint64(12345), 4000)
            b = nb[name](np.uint64(12345), 4000)
            np.testing.assert_array_equal(a, b)
            assert a.dtype == b.dtype

    @pytest.mark.parametrize("k,f", [(32, 0.5), (32, 0.0), (32, 1.0), (17, 0.3), (64, 0.7)])
    def test_prr(self, nb, k, f):
        rng = np.random.default_rng(k)
        seeds = rng.integers(0, 2**64, size=3000, dtype=np.uint64)
        base = rng.integers(0, 2**64, size=3000, dtype=np.uint64)
        if k < 64:
            base &= np.uint64((1 << k) - 1)
        np.testing.assert_array_equal(
            kernels.NUMPY_KERNELS["prr_bits"](seeds, base, k, f),
            nb["prr_bits"](seeds, base, k, f),
        )

    @pytest.mark.parametrize("k,p,q", [(32, 0.5, 0.75), (32, 0.0, 1.0), (17, 0.2, 0.9)])
    def test_irr(self, nb, k, p, q):
        rng = np.random.default_rng(k + 1)
        seeds = rng.integers(0, 2**64, size=3000, dtype=np.uint64)
        base = rng.integers(0, 1 << k, size=3000, dtype=np.uint64)
        np.testing.assert_array_equal(
            kernels.NUMPY_KERNELS["irr_bits"](seeds, base, k, p, q),
            nb["irr_bits"](seeds, base, k, p, q),
        )

    def test_popcounts_and_weighted_sums(self, nb):
        rng = np.random.default_rng(99)
        xs = rng.integers(0, 2**64, size=3000, dtype=np.uint64)
        np.testing.assert_array_equal(
            kernels.NUMPY_KERNELS["popcounts"](xs), nb["popcounts"](xs)
        )
        weights = np.zeros(33)
        weights[1:] = np.log10(32.0 / np.arange(1, 33))
        a = rng.integers(0, 33, size=3000).astype(np.int64)
        b = rng.integers(0, 33, size=3000).astype(np.int64)
        v = rng.integers(0, 64, size=3000).astype(np.int64)
        np.testing.assert_array_equal(
            kernels.NUMPY_KERNELS["weighted_sums"](a, b, v, weights),
            nb["weighted_sums"](a, b, v, weights),
        )


def test_env_flag_forces_numpy_path():
    code = "from rappor_agg import kernels; print(kernels.USING_NUMBA)"
    env = dict(os.environ, RAPPOR_AGG_PURE_NUMPY="1")
    out = subprocess.run(
        [sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True
    )
    assert out.stdout.strip() == "False"
