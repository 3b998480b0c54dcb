"""Contractive compression operators and byte-cost accounting.

A compressor ``C`` is omega-contractive when
``E ||C(x) - x||^2 <= (1 - omega) ||x||^2``.  Variants:

=====================  ==========================================  ==========
variant                output                                      omega
=====================  ==========================================  ==========
``identity``           ``x``                                       1
``rand_k``             k uniformly chosen coordinates of ``x``     k/d
``top_k``              k largest-magnitude coordinates             k/d
``randomized_gossip``  ``x`` with probability p, else 0            p
``rescaled_unbiased``  stochastic sign quantization / tau          1/tau
=====================  ==========================================  ==========

Byte model: 8 bytes per transmitted value, 4 per transmitted index, no
framing.  A randomized-gossip miss still costs a 1-byte signal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidCompressor, InvalidRounds

__all__ = [
    "VARIANTS",
    "CompressorKind",
    "CompressedPayload",
    "compress",
    "compress_rows",
    "omega_of",
    "payload_bytes",
    "repeated_compress",
]

VARIANTS = ("identity", "rand_k", "top_k", "randomized_gossip", "rescaled_unbiased")
VALUE_BYTES = 8
INDEX_BYTES = 4
MISS_BYTES = 1
BYTE_MODES = ("expected", "realized")


@dataclass(frozen=True)
class CompressorKind:
    """Tagged compressor description; only the fields of ``variant`` are used.

    ``tau`` of ``rescaled_unbiased`` defaults to ``sqrt(d)``, the variance
    factor of stochastic sign quantization.
    """

    variant: str = "identity"
    k: int | None = None
    p: float | None = None
    tau: float | None = None

    def __post_init__(self) -> None:
        if self.variant not in VARIANTS:
            raise InvalidCompressor(f"unknown compressor variant {self.variant!r}")
        if self.variant in ("rand_k", "top_k"):
            if self.k is None or int(self.k) != self.k or self.k < 1:
                raise InvalidCompressor(f"{self.variant} needs a positive integer k, got {self.k}")
        if self.variant == "randomized_gossip":
            if self.p is None or not (0.0 < self.p <= 1.0):
                raise InvalidCompressor(f"randomized_gossip needs p in (0, 1], got {self.p}")
        if self.variant == "rescaled_unbiased" and self.tau is not None and self.tau < 1.0:
            raise InvalidCompressor(f"rescaled_unbiased needs tau >= 1, got {self.tau}")

    @classmethod
    def from_dict(cls, spec: dict) -> "CompressorKind":
        spec = dict(spec)
        variant = spec.pop("variant", "identity")
        unknown = set(spec) - {"k", "p", "tau"}
        if unknown:
            raise InvalidCompressor(f"unknown compressor fields {sorted(unknown)}")
        return cls(variant, **spec)

    def to_dict(self) -> dict:
        out: dict = {"variant": self.variant}
        for name in ("k", "p", "tau"):
            value = getattr(self, name)
            if value is not None:
                out[name] = value
        return out

    @property
    def deterministic(self) -> bool:
        return self.variant in ("identity", "top_k")

    def validate(self, d: int) -> None:
        """Check the kind against dimension ``d``."""
        if self.variant in ("rand_k", "top_k") and self.k > d:
            raise InvalidCompressor(f"{self.variant} needs k <= d, got k={self.k}, d={d}")
        if self.variant == "rescaled_unbiased":
            tau = self.tau_for(d)
            if tau < math.sqrt(d) * (1 - 1e-12):
                raise InvalidCompressor(
                    f"rescaled_unbiased needs tau >= sqrt(d) = {math.sqrt(d):.6g}, got {tau}"
                )

    def tau_for(self, d: int) -> float:
        return math.sqrt(d) if self.tau is None else float(self.tau)


@dataclass(frozen=True)
class CompressedPayload:
    dense_equiv: np.ndarray
    wire_bytes: float
    sent: bool = True


def omega_of(kind: CompressorKind, d: int) -> float:
    kind.validate(d)
    if kind.variant == "identity":
        return 1.0
    if kind.variant in ("rand_k", "top_k"):
        return kind.k / d
    if kind.variant == "randomized_gossip":
        return float(kind.p)
    return 1.0 / kind.tau_for(d)


def payload_bytes(kind: CompressorKind, d: int, *, mode: str = "expected", sent: bool = True):
    """Wire cost of one message of ``kind`` in dimension ``d``.

    Only ``randomized_gossip`` depends on ``mode``: the expected cost is
    ``p*8d + 1`` (a float); the realized cost is ``8d + 1`` or ``1``.
    """
    if mode not in BYTE_MODES:
        raise InvalidCompressor(f"bytes mode must be one of {BYTE_MODES}, got {mode!r}")
    v = kind.variant
    if v == "identity":
        return VALUE_BYTES * d
    if v in ("rand_k", "top_k"):
        return kind.k * (VALUE_BYTES + INDEX_BYTES)
    if v == "randomized_gossip":
        if mode == "expected":
            return kind.p * VALUE_BYTES * d + MISS_BYTES
        return VALUE_BYTES * d + MISS_BYTES if sent else MISS_BYTES
    return math.ceil(VALUE_BYTES * d / kind.tau_for(d))


def _fisher_yates_prefix(d: int, k: int, rng: np.random.Generator) -> np.ndarray:
    idx = np.arange(d)
    # swap targets j_i uniform on [i, d), drawn in one call
    targets = rng.integers(np.arange(k), d)
    for i, j in enumerate(targets.tolist()):
        idx[i], idx[j] = idx[j], idx[i]
    return idx[:k]


def _apply(kind: CompressorKind, x: np.ndarray, rng) -> tuple[np.ndarray, bool]:
    v = kind.variant
    d = x.shape[0]
    if v == "identity":
        return x.copy(), True
    if v == "top_k":
        # stable sort keeps the lowest index first among equal magnitudes
        keep = np.argsort(-np.abs(x), kind="stable")[: kind.k]
        out = np.zeros_like(x)
        out[keep] = x[keep]
        return out, True
    if v == "rand_k":
        keep = _fisher_yates_prefix(d, kind.k, rng)
        out = np.zeros_like(x)
        out[keep] = x[keep]
        return out, True
    if v == "randomized_gossip":
        if rng.random() < kind.p:
            return x.copy(), True
        return np.zeros_like(x), False
    # rescaled_unbiased: stochastic sign quantization scaled by 1/tau
    nrm = float(np.linalg.norm(x))
    u = rng.random(d)
    if nrm == 0.0:
        return np.zeros_like(x), True
    keep = u < np.abs(x) / nrm
    return (nrm / kind.tau_for(d)) * np.sign(x) * keep, True


def compress(kind: CompressorKind, x, rng=None, *, mode: str = "expected") -> CompressedPayload:
    """Compress one vector; ``rng`` may be ``None`` for deterministic kinds."""
    x = np.asarray(x, dtype=float)
    kind.validate(x.shape[0])
    if rng is None and not kind.deterministic:
        raise InvalidCompressor(f"{kind.variant} needs a random stream")
    out, sent = _apply(kind, x, rng)
    return CompressedPayload(out, payload_bytes(kind, x.shape[0], mode=mode, sent=sent), sent)


def compress_rows(kind: CompressorKind, xs: np.ndarray, rngs=None, *, mode: str = "expected"):
    """Compress each row of ``xs`` with its own stream ``rngs[i]``.

    Returns ``(q, wire_bytes)`` where ``wire_bytes`` has one entry per row.
    Row ``i`` consumes exactly the draws :func:`compress` would take from
    ``rngs[i]``.
    """
    n, d = xs.shape
    if kind.variant == "identity":
        return xs.copy(), np.full(n, float(VALUE_BYTES * d))
    if kind.variant == "top_k":
        keep = np.argsort(-np.abs(xs), axis=1, kind="stable")[:, : kind.k]
        q = np.zeros_like(xs)
        rows = np.arange(n)[:, None]
        q[rows, keep] = xs[rows, keep]
        return q, np.full(n, float(kind.k * (VALUE_BYTES + INDEX_BYTES)))
    q = np.empty_like(xs)
    cost = np.empty(n)
    for i in range(n):
        q[i], sent = _apply(kind, xs[i], rngs[i])
        cost[i] = payload_bytes(kind, d, mode=mode, sent=sent)
    return q, cost


def repeated_compress(kind: CompressorKind, x, L: int, rng=None, *, mode: str = "expected"):
    """Residual compression over ``L`` rounds.

    ``c_0 = 0``, ``delta_i = C(x - c_{i-1})``, ``c_i = c_{i-1} + delta_i``.
    Returns ``(c_L, [payload_1, ..., payload_L])``; each payload is a
    separately charged message.
    """
    if L < 1:
        raise InvalidRounds(f"repeated compressor needs L >= 1, got {L}")
    x = np.asarray(x, dtype=float)
    total = np.zeros_like(x)
    deltas = []
    for _ in range(L):
        delta = compress(kind, x - total, rng, mode=mode)
        total = total + delta.dense_equiv
        deltas.append(delta)
    return total, deltas
