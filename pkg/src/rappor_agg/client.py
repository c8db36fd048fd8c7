"""Client-side report encoder: Bloom bits, then two randomized-response layers.

A report is (cohort, PRR, IRR). Bitsets are plain Python ints of width k,
bit j = position j of the report string. The three layers:

  bloom  - h SHA-256-derived indices per (cohort, value); deterministic.
  PRR    - permanent noise, memoized per (client_id, value): each bit becomes
           1 w.p. f/2, 0 w.p. f/2, else keeps its bloom value.
  IRR    - fresh noise per report: transmit 1 w.p. q where the PRR bit is 1,
           w.p. p where it is 0. Only cohort + IRR ever leave the client.

Hash scheme (fixed so corpora reproduce bit-exactly everywhere): the bloom
digest is SHA-256 over the 2-byte big-endian cohort followed by the UTF-8
value; bit index j is digest byte j mod k. PRR noise and cohort assignment
are seeded from keyed BLAKE2b hashes, so clients are stateless but stable.
"""

import hashlib
import struct
from dataclasses import dataclass

import numpy as np

from . import kernels

_COHORT_KEY = b"rappor-agg cohort"
_PRR_KEY = b"rappor-agg prr seed"
_MEMO_SEP = b"\x1f"


@dataclass(frozen=True)
class EncodingParams:
    """RAPPOR encoding knobs.

    k: report bit width; h: bloom hashes per value; m: cohort count;
    f: permanent noise probability; p/q: instantaneous 0-bit/1-bit report
    probabilities. Defaults follow the reference demo profile.

    The fixed hash scheme entails h <= 32 (one digest byte per index) and
    m <= 65536 (2-byte cohort prefix); bitsets are stored in uint64, so
    k <= 64.
    """

    k: int = 32
    h: int = 2
    m: int = 64
    f: float = 0.5
    p: float = 0.5
    q: float = 0.75

    def __post_init__(self):
        if not 1 <= self.h <= self.k:
            raise ValueError(f"need 1 <= h <= k, got h={self.h}, k={self.k}")
        if self.k > 64:
            raise ValueError(f"k > 64 not supported, got k={self.k}")
        if self.h > 32:
            raise ValueError(f"h > 32 not supported, got h={self.h}")
        if not 1 <= self.m <= 65536:
            raise ValueError(f"need 1 <= m <= 65536, got m={self.m}")
        for name in ("f", "p", "q"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"need 0 <= {name} <= 1, got {value}")

    def fingerprint(self) -> str:
        """16-hex-digit digest of all knobs; pins stores to their params."""
        canon = f"k={self.k} h={self.h} m={self.m} f={self.f!r} p={self.p!r} q={self.q!r}"
        return hashlib.blake2b(canon.encode("utf-8"), digest_size=8).hexdigest()


@dataclass(frozen=True)
class ClientReport:
    """One client submission. true_value is set on training corpora only."""

    client_id: str
    cohort: int
    prr: int
    irr: int
    true_value: str | None = None


def _hash64(data: bytes, key: bytes) -> int:
    return int.from_bytes(hashlib.blake2b(data, digest_size=8, key=key).digest(), "big")


def assign_cohort(client_id: str, m: int) -> int:
    """Stable per-client cohort: keyed hash of client_id mod m."""
    return _hash64(client_id.encode("utf-8"), _COHORT_KEY) % m


def prr_seed(client_id: str, value: str) -> int:
    """Memoization seed for the permanent response of (client, value)."""
    data = client_id.encode("utf-8") + _MEMO_SEP + value.encode("utf-8")
    return _hash64(data, _PRR_KEY)


def bloom_encode(value: str, cohort: int, params: EncodingParams) -> int:
    """Deterministic bloom bits for a value within a cohort.

    Sets between 1 and h bits (fewer than h only when digest bytes collide
    mod k).
    """
    if not 0 <= cohort < params.m:
        raise ValueError(f"cohort {cohort} out of range [0, {params.m})")
    digest = hashlib.sha256(struct.pack(">H", cohort) + value.encode("utf-8")).digest()
    bits = 0
    for j in range(params.h):
        bits |= 1 << (digest[j] % params.k)
    return bits


def permanent_rr(bloom: int, params: EncodingParams, memo_key: tuple[str, str]) -> int:
    """Permanent randomized response, deterministic per memo_key.

    memo_key is (client_id, value); repeated encodes of the same value by
    the same client reproduce the same PRR without any stored state.
    """
    seed = np.uint64(prr_seed(*memo_key))
    out = kernels.prr_bits(
        np.array([seed], dtype=np.uint64),
        np.array([bloom], dtype=np.uint64),
        params.k,
        params.f,
    )
    return int(out[0])


def instantaneous_rr(prr: int, params: EncodingParams, rng: np.random.Generator) -> int:
    """Instantaneous randomized response; fresh randomness from rng each call."""
    seed = rng.integers(0, 2**64, dtype=np.uint64)
    out = kernels.irr_bits(
        np.array([seed], dtype=np.uint64),
        np.array([prr], dtype=np.uint64),
        params.k,
        params.p,
        params.q,
    )
    return int(out[0])


def encode_report(
    client_id: str,
    value: str,
    params: EncodingParams,
    rng: np.random.Generator | None = None,
    labeled: bool = True,
) -> ClientReport:
    """Full encode: assign cohort, bloom, memoized PRR, fresh IRR.

    labeled=True attaches the true value (training corpora); test batches
    are encoded with labeled=False.
    """
    if rng is None:
        rng = np.random.default_rng()
    cohort = assign_cohort(client_id, params.m)
    bloom = bloom_encode(value, cohort, params)
    prr = permanent_rr(bloom, params, (client_id, value))
    irr = instantaneous_rr(prr, params, rng)
    return ClientReport(
        client_id=client_id,
        cohort=cohort,
        prr=prr,
        irr=irr,
        true_value=value if labeled else None,
    )
