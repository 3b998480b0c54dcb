"""Acceptance criteria, one test each.

Every test prints a single ``[criterion NN] PASS|FAIL: ...`` line (shown
even under output capture) before asserting.  The regret scenarios use the
desk-scale hyperparameter overrides of ``SCENARIO`` because the
closed-form block lengths for an 8-cycle with top-2 compression exceed the
horizons under test.
"""

import math
import time

import numpy as np
import pytest

from compressed_doco.adversary import LinearStream, linear_adversarial_stream, one_point_estimate, two_point_estimate
from compressed_doco.algorithms import (
    EtaSchedule,
    HyperParams,
    consensus_gamma,
    d_ogd_run,
    dc_dogd_run,
    top_dobd1_run,
    top_dobd2_run,
    top_dogd_run,
)
from compressed_doco.compress import CompressorKind, compress_rows, omega_of
from compressed_doco.geometry import Domain
from compressed_doco.gossip import (
    EfficientGossipState,
    NaiveGossipState,
    choco_step,
    choco_step_efficient,
    consensus_error,
    global_mean,
)
from compressed_doco.harness import ExperimentConfig, delay_probe, run_single, scaling_sweep
from compressed_doco.topology import TOPOLOGIES, gossip_matrix

D_SCEN = 1.0
SCENARIO = {
    "experiment": {"d": 10, "seeds": list(range(10))},
    "network": {"topology": "cycle", "n": 8},
    "compressor": {"variant": "top_k", "k": 2},
    "hyperparams": {"L1": 8, "L2": 4, "gamma": 0.3},
}


def scenario(loss, domain, **experiment):
    raw = {k: dict(v) for k, v in SCENARIO.items()}
    raw["experiment"].update(experiment)
    raw["loss"] = loss
    raw["domain"] = domain
    return ExperimentConfig.from_dict(raw)


def convex_scenario(T):
    return scenario({"kind": "linear", "G": 1.0},
                    {"variant": "box", "half_width": D_SCEN / (2 * math.sqrt(10))}, T=T)


def sc_scenario(T):
    return scenario({"kind": "quadratic", "mu": 1.0, "D": D_SCEN},
                    {"variant": "shifted_box", "lo": 0.0, "hi": D_SCEN / math.sqrt(10)}, T=T)


@pytest.fixture
def report(capsys):
    def emit(number, ok, detail):
        with capsys.disabled():
            print(f"\n[criterion {number:2d}] {'PASS' if ok else 'FAIL'}: {detail}")
        assert ok, detail

    return emit


def sem(a, axis=0):
    a = np.asarray(a)
    return a.std(axis=axis, ddof=1) / math.sqrt(a.shape[axis])


def test_c01_matrix_properties(report):
    start = time.perf_counter()
    problems = []
    checked = 0
    for kind in TOPOLOGIES:
        for n in (4, 8, 9, 16):
            if kind == "grid2d" and math.isqrt(n) ** 2 != n:
                continue
            for lazy in (False, True):
                p = gossip_matrix(kind, n, lazy=lazy)
                w = p.w
                support = p.graph.adjacency() + np.eye(n)
                ok = (
                    np.array_equal(w, w.T)
                    and np.max(np.abs(w.sum(axis=0) - 1)) <= 1e-12
                    and np.max(np.abs(w.sum(axis=1) - 1)) <= 1e-12
                    and not np.any((w != 0) & (support == 0))
                    and p.sigma2 < 1
                    and (not lazy or p.min_eigenvalue() >= -1e-10)
                )
                checked += 1
                if not ok:
                    problems.append((kind, n, lazy))
    elapsed = time.perf_counter() - start
    report(1, not problems and elapsed < 1.0,
           f"{checked} matrices checked in {elapsed:.3f}s (grid2d at n=8 skipped), failures={problems}")


def test_c02_compressor_contraction(report):
    start = time.perf_counter()
    d, N = 32, 10_000
    rng = np.random.default_rng(0)
    x = rng.standard_normal((N, d))
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    kinds = [
        CompressorKind("identity"),
        CompressorKind("rand_k", k=8),
        CompressorKind("top_k", k=8),
        CompressorKind("randomized_gossip", p=0.5),
        CompressorKind("rescaled_unbiased"),
    ]
    lines = []
    ok = True
    for kind in kinds:
        omega = omega_of(kind, d)
        streams = [np.random.default_rng(1)] * N
        for L in (1, 2, 4, 8):
            c = np.zeros_like(x)
            for _ in range(L):
                q, _ = compress_rows(kind, x - c, streams)
                c = c + q
            err = np.sum((c - x) ** 2, axis=1)
            bound = (1 - omega) ** L
            tol = 3 * sem(err) if err.std() > 0 else 1e-12
            good = err.mean() <= bound + tol
            if kind.variant == "randomized_gossip":
                good = good and abs(err.mean() - bound) <= tol
            ok &= bool(good)
            lines.append(f"{kind.variant}/L={L}: {err.mean():.4f}<={bound:.4f}+{tol:.4f}")
    elapsed = time.perf_counter() - start
    report(2, ok and elapsed < 10.0, f"{elapsed:.1f}s; " + ", ".join(lines))


def test_c03_gossip_mean_preservation(report):
    P = gossip_matrix("cycle", 8)
    worst = 0.0
    for seed, kind in enumerate([CompressorKind("top_k", k=4), CompressorKind("rand_k", k=4),
                                 CompressorKind("randomized_gossip", p=0.3), CompressorKind("rescaled_unbiased")]):
        x = np.random.default_rng(seed).standard_normal((8, 16))
        m0 = global_mean(x)
        state = EfficientGossipState.init(x, P)
        rngs = [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(8)]
        for _ in range(100):
            state, _ = choco_step_efficient(state, P, 0.5, kind, rngs)
        rel = np.abs(global_mean(state.x) - m0) / np.maximum(np.abs(m0), 1e-300)
        worst = max(worst, float(rel.max()))
    report(3, worst <= 1e-12, f"worst relative mean drift {worst:.2e}")


def test_c04_engine_equivalence(report):
    kinds = [CompressorKind("identity"), CompressorKind("rand_k", k=3), CompressorKind("top_k", k=3),
             CompressorKind("randomized_gossip", p=0.5), CompressorKind("rescaled_unbiased")]
    worst = 0.0
    runs = 0
    for kind in kinds:
        for seed in range(20):
            rng = np.random.default_rng(seed)
            n = int(rng.integers(2, 9))
            topo = ["cycle", "complete", "path"][seed % 3]
            P = gossip_matrix(topo, n)
            x = rng.standard_normal((n, 6))
            a, b = NaiveGossipState.init(x, P), EfficientGossipState.init(x, P)
            ra = [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(n)]
            rb = [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(n)]
            for _ in range(20):
                a, _ = choco_step(a, P, 0.4, kind, ra)
                b, _ = choco_step_efficient(b, P, 0.4, kind, rb)
                worst = max(worst, float(np.max(np.abs(a.x - b.x))))
            runs += 1
    report(4, worst <= 1e-9, f"{runs} runs, max coordinate gap {worst:.2e}")


def test_c05_deterministic_consensus_decay(report):
    start = time.perf_counter()
    n = 8
    P = gossip_matrix("cycle", n)
    gamma = consensus_gamma(1.0, P.rho, P.beta)
    L1 = math.ceil(2 * math.log(14 * n) / (gamma * P.rho))
    state = EfficientGossipState.init(np.random.default_rng(0).standard_normal((n, 5)), P)
    e1 = sum(consensus_error(state))
    for _ in range(L1):
        state, _ = choco_step_efficient(state, P, gamma, CompressorKind("identity"))
    e_end = sum(consensus_error(state))
    elapsed = time.perf_counter() - start
    report(5, e_end <= e1 / (14 * n) and elapsed < 1.0,
           f"L1={L1}, gamma={gamma:.5f}: e_end/e1 = {e_end / e1:.3e} <= {1 / (14 * n):.3e} in {elapsed:.2f}s")


def test_c06_hand_trace(report):
    # n=2 path lazified, W = [[3/4, 1/4], [1/4, 3/4]]; L1 = L2 = 1, gamma = 1/2, eta = 1/10, X = [-1/4, 1/4]
    g = np.array([[1.0, 3.0], [2.0, -1.0], [-4.0, 2.0], [1.0, 1.0], [1.0, -2.0], [0.5, 0.5]])
    s = LinearStream(g[:, :, None], name="hand", seed=0)
    hp = HyperParams(1, 1, 0.5, EtaSchedule("constant", eta=0.1))
    trace = []
    rec = top_dogd_run(s, gossip_matrix("path", 2), Domain.ball(0.25, 1), hp, CompressorKind("identity"),
                       keep_plays=True, trace=trace)
    expected_plays = np.array([[0, 0], [0, 0], [0, 0], [0, 0], [-0.25, -0.2125], [-0.25, -0.2125]])
    expected_commit = np.array([-0.0203125, -0.25])
    gap = max(
        np.max(np.abs(rec.plays[:, :, 0] - expected_plays)),
        np.max(np.abs(trace[5]["x_next"][:, 0] - expected_commit)),
        np.max(np.abs(trace[2]["y"][:, 0] - [-0.2875, -0.2125])),
    )
    report(6, gap <= 1e-12, f"max deviation from hand trace {gap:.1e}")


def test_c07_convex_regret_scaling(report):
    horizons = [2**10, 2**12, 2**14, 2**16]
    out = scaling_sweep(convex_scenario(horizons[0]), horizons)
    table = ", ".join(f"R({T})={R:.1f}" for T, R in zip(out.horizons, out.mean_regret))
    report(7, 0.35 <= out.slope <= 0.60, f"slope {out.slope:.3f} in [0.35, 0.60]; {table}")


def test_c08_strongly_convex_regret_ratio(report):
    T = 2**15
    out = scaling_sweep(sc_scenario(T), [T, 2 * T])
    ratio = out.ratios[T]
    report(8, ratio <= 1.4, f"R(2T)/R(T) = {ratio:.4f} at T={T} (R(T)={out.mean_regret[0]:.2f})")


def test_c09_bandit_estimators(report):
    d, G, N = 5, 1.0, 100_000
    g = np.array([1.0, -1.0, 1.0, 1.0, -1.0]) * G / math.sqrt(d)
    s = LinearStream(g[None, None, :], G=G)
    center = np.array([0.1, 0.0, -0.1, 0.05, 0.0])
    rng = np.random.default_rng(0)
    one = np.array([one_point_estimate(s, 0, 0, center, 0.5, rng, r=1.0).ghat for _ in range(N)])
    two = np.array([two_point_estimate(s, 0, 0, center, 0.5, rng, r=1.0).ghat for _ in range(N)])
    ok_one = np.all(np.abs(one.mean(axis=0) - g) <= 3 * sem(one))
    ok_two = np.all(np.abs(two.mean(axis=0) - g) <= 3 * sem(two))
    max_norm = float(np.max(np.linalg.norm(two, axis=1)))
    ok_norm = max_norm <= d * G * (1 + 1e-12)
    report(9, bool(ok_one and ok_two and ok_norm),
           f"one-point unbiased={ok_one}, two-point unbiased={ok_two}, max two-point norm {max_norm:.3f} <= dG={d * G}")


def test_c10_bandit_feasibility(report):
    T, n, d, R = 100_000, 4, 5, 1.0
    s = linear_adversarial_stream(n, d, T, 1.0, seed=0)
    dom = Domain.ball(R, d)
    P = gossip_matrix("cycle", n)
    worst = 0.0
    for run, eps in ((top_dobd1_run, 0.3), (top_dobd2_run, 0.1)):
        hp = HyperParams(4, 2, 0.4, EtaSchedule("constant", eta=0.05), eps=eps, zeta=eps / R)
        rec = run(s, P, dom, hp, CompressorKind("top_k", k=2), keep_plays=True, seed=1)
        worst = max(worst, float(np.max(np.linalg.norm(rec.plays, axis=-1))))
        del rec
    report(10, worst <= R * (1 + 1e-12), f"largest play norm {worst:.6f} over {T} rounds, R={R}")


def test_c11_delay_probe(report):
    res = delay_probe(10, 0.5, 1000, seed=0)
    target = math.ceil(4 / (2 * 0.5))
    report(11, abs(res.mean - target) <= 0.1 * target, f"mean traversal {res.mean:.3f} vs {target}")


def test_c12_communication_budget(report):
    n, d, T = 8, 10, 240
    s = linear_adversarial_stream(n, d, T, 1.0, seed=0)
    P = gossip_matrix("cycle", n)
    dom = Domain.ball(1.0, d)
    kind = CompressorKind("top_k", k=2)
    hp = HyperParams(8, 4, 0.3, EtaSchedule("constant", eta=0.01), eps=0.1, zeta=0.1)
    eta = EtaSchedule("constant", eta=0.01)
    runs = {
        "top_dogd": top_dogd_run(s, P, dom, hp, kind),
        "top_dobd1": top_dobd1_run(s, P, dom, hp, kind),
        "top_dobd2": top_dobd2_run(s, P, dom, hp, kind),
        "dc_dogd": dc_dogd_run(s, P, dom, 0.3, eta, kind),
        "d_ogd": d_ogd_run(s, P, dom, eta),
    }
    one_msg = all(np.all(r.messages == 1) for r in runs.values())
    top_bytes = set(np.unique(runs["top_dogd"].wire_bytes).tolist())
    base_bytes = set(np.unique(runs["d_ogd"].wire_bytes).tolist())
    ledger = runs["top_dogd"].cum_bytes[-1]
    ok = one_msg and top_bytes == {24.0} and base_bytes == {80.0} and np.all(ledger == 24 * T)
    report(12, bool(ok), f"one message per learner-round: {one_msg}; Top-DOGD {top_bytes} B, D-OGD {base_bytes} B")


def test_c13_ablation(report):
    T = 2**14
    full_cfg = convex_scenario(T)
    abl_cfg = full_cfg.replace(overrides={**full_cfg.overrides, "L2": 0, "allow_no_compensation": True})
    full = [float(np.mean(run_single(full_cfg, s).final_regret)) for s in full_cfg.seeds]
    abl = [float(np.mean(run_single(abl_cfg, s).final_regret)) for s in full_cfg.seeds]
    ratio = np.mean(full) / np.mean(abl)
    report(13, ratio <= 1.05,
           f"mean final regret {np.mean(full):.2f} vs ablation {np.mean(abl):.2f}, ratio {ratio:.4f} <= 1.05")
