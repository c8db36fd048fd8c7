"""Hot numeric kernels: bit channels, popcounts, weighted sums.

Every kernel has two implementations with identical semantics: a numba
``@njit`` version and a pure-numpy version. The numba path is used when
numba imports cleanly; set ``RAPPOR_AGG_PURE_NUMPY=1`` to force the numpy
fallback (``benchmarks/bench_kernels.py`` compares the two).

All per-bit randomness is counter-based: a 64-bit seed per report is
expanded with the splitmix64 finalizer, one counter step per bit. Integer
mixing (rather than a stateful generator) keeps the two paths bit-identical,
makes fleet encoding order-independent, and keeps output stable across
platforms. Uniforms take the top 53 bits of the mix, so comparisons against
probability thresholds are exact float64 operations in both paths.
"""

import os

import numpy as np

# splitmix64 constants (Steele et al. mixer, as in java.util.SplittableRandom).
GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX_A = np.uint64(0xBF58476D1CE4E5B9)
_MIX_B = np.uint64(0x94D049BB133111EB)
_U53_SCALE = float(2.0**-53)
MASK64 = (1 << 64) - 1

_PURE_NUMPY_FLAG = "RAPPOR_AGG_PURE_NUMPY"


def mix64(x: int) -> int:
    """Scalar splitmix64 finalizer on a Python int (mod 2**64)."""
    x &= MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def derive_seed(base: int, *parts: int) -> int:
    """Fold integer parts into a base seed, one mix per part.

    Used to split one master seed into independent streams (per tag, per
    test index, per client index) without shared state.
    """
    state = base & MASK64
    for part in parts:
        state = mix64((state + 0x9E3779B97F4A7C15 + (part & MASK64)) & MASK64)
    return state


# ---------------------------------------------------------------------------
# pure-numpy implementations
# ---------------------------------------------------------------------------


def _mix64_np(x: np.ndarray) -> np.ndarray:
    x = (x ^ (x >> np.uint64(30))) * _MIX_A
    x = (x ^ (x >> np.uint64(27))) * _MIX_B
    return x ^ (x >> np.uint64(31))


def _bit_uniforms_np(seeds: np.ndarray, k: int) -> np.ndarray:
    """(n, k) matrix of uniforms in [0, 1): bit j of seed s uses counter j+1."""
    counters = np.arange(1, k + 1, dtype=np.uint64) * GOLDEN
    z = _mix64_np(seeds[:, None] + counters[None, :])
    return (z >> np.uint64(11)).astype(np.float64) * _U53_SCALE


def stream_uniforms_numpy(base_seed: int, n: int) -> np.ndarray:
    """n uniforms in [0, 1), element i independent of all others."""
    counters = np.arange(1, n + 1, dtype=np.uint64) * GOLDEN
    z = _mix64_np(np.uint64(base_seed & MASK64) + counters)
    return (z >> np.uint64(11)).astype(np.float64) * _U53_SCALE


def stream_seeds_numpy(base_seed: int, n: int) -> np.ndarray:
    """n derived 64-bit seeds, element i independent of all others."""
    counters = np.arange(1, n + 1, dtype=np.uint64) * GOLDEN
    return _mix64_np(np.uint64(base_seed & MASK64) + counters)


def _pack_bits_np(bits: np.ndarray) -> np.ndarray:
    shifts = np.arange(bits.shape[1], dtype=np.uint64)
    return np.bitwise_or.reduce(bits.astype(np.uint64) << shifts[None, :], axis=1)


def prr_bits_numpy(seeds: np.ndarray, base: np.ndarray, k: int, f: float) -> np.ndarray:
    """Permanent randomized response over packed bitsets.

    Per bit: 1 with probability f/2, 0 with probability f/2, otherwise the
    base bit. One uniform per bit decides all three branches.
    """
    u = _bit_uniforms_np(seeds, k)
    shifts = np.arange(k, dtype=np.uint64)
    base_bits = (base[:, None] >> shifts[None, :]) & np.uint64(1)
    out = np.where(u < f / 2.0, 1, np.where(u < f, 0, base_bits))
    return _pack_bits_np(out)


def irr_bits_numpy(seeds: np.ndarray, base: np.ndarray, k: int, p: float, q: float) -> np.ndarray:
    """Instantaneous randomized response: report 1 w.p. q if the base bit
    is 1, w.p. p if it is 0."""
    u = _bit_uniforms_np(seeds, k)
    shifts = np.arange(k, dtype=np.uint64)
    base_bits = (base[:, None] >> shifts[None, :]) & np.uint64(1)
    out = u < np.where(base_bits == 1, q, p)
    return _pack_bits_np(out)


def popcounts_numpy(bitsets: np.ndarray) -> np.ndarray:
    return np.bitwise_count(bitsets).astype(np.int64)


def weighted_sums_numpy(
    prr_counts: np.ndarray,
    irr_counts: np.ndarray,
    cohorts: np.ndarray,
    weights: np.ndarray,
) -> np.ndarray:
    """W = (n_prr*w[n_prr] + n_irr*w[n_irr]) * V, with V=0 treated as V=1."""
    bracket = prr_counts * weights[prr_counts] + irr_counts * weights[irr_counts]
    return bracket * np.maximum(cohorts, 1).astype(np.float64)


# ---------------------------------------------------------------------------
# numba implementations (identical arithmetic, loop form)
# ---------------------------------------------------------------------------


def _build_numba_kernels():
    from numba import njit

    u64 = np.uint64
    c30, c27, c31, c11 = u64(30), u64(27), u64(31), u64(11)
    golden, mix_a, mix_b = GOLDEN, _MIX_A, _MIX_B
    scale = _U53_SCALE

    @njit(cache=True, inline="always")
    def _mix(x):
        x = (x ^ (x >> c30)) * mix_a
        x = (x ^ (x >> c27)) * mix_b
        return x ^ (x >> c31)

    @njit(cache=True)
    def stream_uniforms(base_seed, n):
        out = np.empty(n, dtype=np.float64)
        for i in range(n):
            z = _mix(base_seed + u64(i + 1) * golden)
            out[i] = np.float64(z >> c11) * scale
        return out

    @njit(cache=True)
    def stream_seeds(base_seed, n):
        out = np.empty(n, dtype=np.uint64)
        for i in range(n):
            out[i] = _mix(base_seed + u64(i + 1) * golden)
        return out

    @njit(cache=True)
    def prr_bits(seeds, base, k, f):
        n = seeds.shape[0]
        half_f = f / 2.0
        out = np.zeros(n, dtype=np.uint64)
        for i in range(n):
            s = seeds[i]
            b = base[i]
            acc = u64(0)
            for j in range(k):
                z = _mix(s + u64(j + 1) * golden)
                u = np.float64(z >> c11) * scale
                if u < half_f:
                    bit = u64(1)
                elif u < f:
                    bit = u64(0)
                else:
                    bit = (b >> u64(j)) & u64(1)
                acc |= bit << u64(j)
            out[i] = acc
        return out

    @njit(cache=True)
    def irr_bits(seeds, base, k, p, q):
        n = seeds.shape[0]
        out = np.zeros(n, dtype=np.uint64)
        for i in range(n):
            s = seeds[i]
            b = base[i]
            acc = u64(0)
            for j in range(k):
                z = _mix(s + u64(j + 1) * golden)
                u = np.float64(z >> c11) * scale
                threshold = q if (b >> u64(j)) & u64(1) else p
                if u < threshold:
                    acc |= u64(1) << u64(j)
            out[i] = acc
        return out

    @njit(cache=True)
    def popcounts(bitsets):
        n = bitsets.shape[0]
        out = np.empty(n, dtype=np.int64)
        for i in range(n):
            x = bitsets[i]
            count = 0
            while x:
                x &= x - u64(1)
                count += 1
            out[i] = count
        return out

    @njit(cache=True)
    def weighted_sums(prr_counts, irr_counts, cohorts, weights):
        n = prr_counts.shape[0]
        out = np.empty(n, dtype=np.float64)
        for i in range(n):
            a = prr_counts[i]
            b = irr_counts[i]
            bracket = a * weights[a] + b * weights[b]
            v = cohorts[i]
            if v < 1:
                v = 1
            out[i] = bracket * np.float64(v)
        return out

    return {
        "stream_uniforms": stream_uniforms,
        "stream_seeds": stream_seeds,
        "prr_bits": prr_bits,
        "irr_bits": irr_bits,
        "popcounts": popcounts,
        "weighted_sums": weighted_sums,
    }


def _numba_requested() -> bool:
    return os.environ.get(_PURE_NUMPY_FLAG, "").strip() not in ("1", "true", "yes")


NUMPY_KERNELS = {
    "stream_uniforms": stream_uniforms_numpy,
    "stream_seeds": stream_seeds_numpy,
    "prr_bits": prr_bits_numpy,
    "irr_bits": irr_bits_numpy,
    "popcounts": popcounts_numpy,
    "weighted_sums": weighted_sums_numpy,
}

if _numba_requested():
    try:
        _ACTIVE = _build_numba_kernels()
        USING_NUMBA = True
    except ImportError:
        _ACTIVE = NUMPY_KERNELS
        USING_NUMBA = False
else:
    _ACTIVE = NUMPY_KERNELS
    USING_NUMBA = False

stream_uniforms = _ACTIVE["stream_uniforms"]
stream_seeds = _ACTIVE["stream_seeds"]
prr_bits = _ACTIVE["prr_bits"]
irr_bits = _ACTIVE["irr_bits"]
popcounts = _ACTIVE["popcounts"]
weighted_sums = _ACTIVE["weighted_sums"]


def numba_kernels_or_none():
    """The njit kernel set, compiled on demand; None when numba is absent.

    Lets tests and the benchmark compare both paths regardless of the
    env-flag selection above.
    """
    try:
        return _build_numba_kernels()
    except ImportError:
        return None
