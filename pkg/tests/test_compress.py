import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from compressed_doco.compress import (
    CompressorKind,
    compress,
    compress_rows,
    omega_of,
    payload_bytes,
    repeated_compress,
)
from compressed_doco.errors import InvalidCompressor, InvalidRounds

KINDS = [
    CompressorKind("identity"),
    CompressorKind("rand_k", k=3),
    CompressorKind("top_k", k=3),
    CompressorKind("randomized_gossip", p=0.4),
    CompressorKind("rescaled_unbiased"),
]


def test_identity_is_exact():
    x = np.array([1.0, -2.0, 0.5])
    out = compress(CompressorKind("identity"), x)
    np.testing.assert_array_equal(out.dense_equiv, x)
    assert omega_of(CompressorKind("identity"), 7) == 1.0


def test_top_k_example():
    out = compress(CompressorKind("top_k", k=1), np.array([3.0, -1.0, 2.0]))
    np.testing.assert_array_equal(out.dense_equiv, [3.0, 0.0, 0.0])


def test_top_k_ties_prefer_lowest_index():
    out = compress(CompressorKind("top_k", k=2), np.array([1.0, -2.0, 2.0, 2.0]))
    np.testing.assert_array_equal(out.dense_equiv, [0.0, -2.0, 2.0, 0.0])


def test_rand_k_full_is_identity():
    x = np.arange(5.0)
    kind = CompressorKind("rand_k", k=5)
    out = compress(kind, x, np.random.default_rng(0))
    np.testing.assert_array_equal(out.dense_equiv, x)
    assert omega_of(kind, 5) == 1.0


def test_rand_k_keeps_exactly_k():
    rng = np.random.default_rng(3)
    x = np.arange(1.0, 11.0)
    for _ in range(50):
        out = compress(CompressorKind("rand_k", k=4), x, rng).dense_equiv
        kept = np.flatnonzero(out)
        assert kept.size == 4
        np.testing.assert_array_equal(out[kept], x[kept])


def test_randomized_gossip_error_rate():
    rng = np.random.default_rng(1)
    kind = CompressorKind("randomized_gossip", p=0.3)
    x = np.array([1.0, 2.0, -2.0])
    errs = np.array([
        np.sum((compress(kind, x, rng).dense_equiv - x) ** 2) / np.sum(x * x) for _ in range(100_000)
    ])
    assert abs(errs.mean() - 0.7) <= 3 * errs.std(ddof=1) / math.sqrt(errs.size)


def test_rescaled_unbiased_is_unbiased_before_scaling():
    rng = np.random.default_rng(2)
    d = 4
    x = np.array([0.5, -0.25, 1.0, 0.0])
    kind = CompressorKind("rescaled_unbiased")
    tau = kind.tau_for(d)
    draws = np.array([compress(kind, x, rng).dense_equiv for _ in range(50_000)]) * tau
    err = np.abs(draws.mean(axis=0) - x)
    assert np.all(err <= 3 * draws.std(axis=0, ddof=1) / math.sqrt(len(draws)) + 1e-12)


@pytest.mark.parametrize("kind,d,omega", [
    (CompressorKind("rand_k", k=2), 10, 0.2),
    (CompressorKind("top_k", k=3), 12, 0.25),
    (CompressorKind("randomized_gossip", p=0.5), 3, 0.5),
    (CompressorKind("identity"), 7, 1.0),
    (CompressorKind("rescaled_unbiased"), 16, 0.25),
    (CompressorKind("rescaled_unbiased", tau=8.0), 16, 0.125),
])
def test_omega_of(kind, d, omega):
    assert omega_of(kind, d) == pytest.approx(omega)


@pytest.mark.parametrize("kind,d,nbytes", [
    (CompressorKind("identity"), 10, 80),
    (CompressorKind("top_k", k=3), 100, 36),
    (CompressorKind("rand_k", k=5), 5, 60),
    (CompressorKind("rescaled_unbiased"), 16, 32),
])
def test_payload_bytes(kind, d, nbytes):
    assert payload_bytes(kind, d) == nbytes


def test_randomized_gossip_bytes_modes():
    kind = CompressorKind("randomized_gossip", p=0.25)
    assert payload_bytes(kind, 10, mode="expected") == pytest.approx(21.0)
    assert payload_bytes(kind, 10, mode="realized", sent=True) == 81
    assert payload_bytes(kind, 10, mode="realized", sent=False) == 1


@pytest.mark.parametrize("spec", [
    {"variant": "top_k", "k": 0},
    {"variant": "rand_k"},
    {"variant": "randomized_gossip", "p": 0.0},
    {"variant": "randomized_gossip", "p": 1.5},
    {"variant": "rescaled_unbiased", "tau": 0.5},
    {"variant": "sign"},
    {"variant": "top_k", "k": 2, "extra": 1},
])
def test_invalid_kinds(spec):
    with pytest.raises(InvalidCompressor):
        CompressorKind.from_dict(spec)


def test_k_larger_than_d_rejected():
    with pytest.raises(InvalidCompressor):
        compress(CompressorKind("top_k", k=4), np.ones(3))


def test_rescaled_tau_below_sqrt_d_rejected():
    with pytest.raises(InvalidCompressor):
        omega_of(CompressorKind("rescaled_unbiased", tau=2.0), 16)


def test_random_kind_needs_rng():
    with pytest.raises(InvalidCompressor):
        compress(CompressorKind("rand_k", k=1), np.ones(3))


def test_kind_round_trip():
    for kind in KINDS:
        assert CompressorKind.from_dict(kind.to_dict()) == kind


def test_repeated_identity_one_round():
    x = np.array([1.0, -3.0])
    total, deltas = repeated_compress(CompressorKind("identity"), x, 1)
    np.testing.assert_array_equal(total, x)
    assert len(deltas) == 1
    np.testing.assert_array_equal(deltas[0].dense_equiv, x)


def test_repeated_top1_hand_trace():
    total, deltas = repeated_compress(CompressorKind("top_k", k=1), np.array([3.0, -1.0, 2.0]), 2)
    np.testing.assert_array_equal(deltas[0].dense_equiv, [3.0, 0.0, 0.0])
    np.testing.assert_array_equal(deltas[1].dense_equiv, [0.0, 0.0, 2.0])
    np.testing.assert_array_equal(total, [3.0, 0.0, 2.0])


def test_repeated_randomized_gossip_rate():
    rng = np.random.default_rng(7)
    kind = CompressorKind("randomized_gossip", p=0.5)
    x = np.array([1.0, 1.0])
    errs = np.array([
        np.sum((repeated_compress(kind, x, 4, rng)[0] - x) ** 2) / 2.0 for _ in range(100_000)
    ])
    assert abs(errs.mean() - 0.0625) <= 3 * errs.std(ddof=1) / math.sqrt(errs.size)


def test_repeated_rejects_zero_rounds():
    with pytest.raises(InvalidRounds):
        repeated_compress(CompressorKind("identity"), np.ones(2), 0)


@settings(max_examples=40, deadline=None)
@given(
    arrays(np.float64, st.integers(1, 12), elements=st.floats(-1e3, 1e3, allow_nan=False)),
    st.integers(1, 6),
    st.integers(0, 2**31),
)
def test_deltas_sum_to_total(x, L, seed):
    for kind in KINDS:
        if kind.variant in ("rand_k", "top_k") and kind.k > x.size:
            continue
        total, deltas = repeated_compress(kind, x, L, np.random.default_rng(seed))
        acc = np.zeros_like(x)
        for delta in deltas:
            acc = acc + delta.dense_equiv
        np.testing.assert_array_equal(acc, total)


@settings(max_examples=30, deadline=None)
@given(arrays(np.float64, 8, elements=st.floats(-10, 10, allow_nan=False)), st.integers(0, 2**31))
def test_seeded_determinism(x, seed):
    for kind in KINDS:
        a = compress(kind, x, np.random.default_rng(seed))
        b = compress(kind, x, np.random.default_rng(seed))
        np.testing.assert_array_equal(a.dense_equiv, b.dense_equiv)
        assert a.wire_bytes == b.wire_bytes


def test_top_k_ignores_rng():
    x = np.array([0.1, -5.0, 3.0, 2.0])
    kind = CompressorKind("top_k", k=2)
    outs = {tuple(compress(kind, x, np.random.default_rng(s)).dense_equiv) for s in range(5)}
    assert len(outs) == 1


def test_compress_rows_matches_compress():
    xs = np.random.default_rng(0).standard_normal((5, 8))
    for kind in KINDS:
        rngs_a = [np.random.default_rng(i) for i in range(5)]
        rngs_b = [np.random.default_rng(i) for i in range(5)]
        q, cost = compress_rows(kind, xs, rngs_a, mode="realized")
        for i in range(5):
            one = compress(kind, xs[i], rngs_b[i], mode="realized")
            np.testing.assert_array_equal(q[i], one.dense_equiv)
            assert cost[i] == one.wire_bytes
