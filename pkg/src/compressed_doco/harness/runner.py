"""Experiment execution, regret accounting, sweeps and CSV output."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass

import numpy as np

from ..adversary import (
    LossStream,
    best_fixed_comparator,
    linear_adversarial_stream,
    lower_bound_convex_stream,
    lower_bound_groups,
    lower_bound_sc_stream,
    quadratic_stream,
    zero_stream,
)
from ..algorithms import RunRecords, d_ogd_run, dc_dogd_run, top_dogd_run
from ..errors import InvalidConstruction, InvalidPairing, InvalidSweep
from .config import ExperimentConfig, default_dc_gamma, default_round_eta

CSV_COLUMNS = (
    "run_id", "seed", "algo", "t", "b", "learner", "loss", "cum_regret", "cum_bytes",
    "e_consensus", "e_compression", "proj_residual_norm",
)


def build_stream(cfg: ExperimentConfig, seed: int, T: int | None = None) -> LossStream:
    T = cfg.T if T is None else T
    spec = cfg.loss
    n, d = cfg.n, cfg.d
    G, mu, D, p = (float(spec.get(k, v)) for k, v in (("G", 1.0), ("mu", 1.0), ("D", 1.0), ("p", 0.5)))
    kind = spec["kind"]
    if kind == "zero":
        return zero_stream(n, d, T)
    if kind == "linear":
        return linear_adversarial_stream(n, d, T, G, seed)
    if kind == "quadratic":
        return quadratic_stream(n, d, T, mu, D, seed, p=p)
    if kind == "lower_bound_convex":
        return lower_bound_convex_stream(n, d, T, G, cfg.omega(), seed)
    return lower_bound_sc_stream(n, d, T, mu, D, cfg.omega(), p, seed)


@dataclass
class RunResult:
    """One seeded run: telemetry, stream, comparator and per-round regret."""

    cfg: ExperimentConfig
    seed: int
    records: RunRecords
    stream: LossStream
    comparator: np.ndarray
    cum_regret: np.ndarray

    @property
    def final_regret(self) -> np.ndarray:
        """``R(T, i)`` for every learner."""
        return self.cum_regret[-1]

    @property
    def run_id(self) -> str:
        return f"{self.cfg.name}-{self.records.algo}-s{self.seed}"


def run_single(cfg: ExperimentConfig, seed: int, T: int | None = None) -> RunResult:
    T = cfg.T if T is None else T
    stream = build_stream(cfg, seed, T)
    P = cfg.gossip()
    dom = cfg.dom()
    kind = cfg.kind()
    if cfg.algorithm.startswith("top_do"):
        rec = top_dogd_run(
            stream, P, dom, cfg.hyperparams(T), kind, engine=cfg.gossip_engine, seed=seed,
            feedback=cfg.feedback, bytes_mode=cfg.bytes_mode,
        )
    elif cfg.algorithm == "dc_dogd":
        rec = dc_dogd_run(
            stream, P, dom, default_dc_gamma(cfg), default_round_eta(cfg, T), kind,
            engine=cfg.gossip_engine, seed=seed, bytes_mode=cfg.bytes_mode,
        )
    else:
        rec = d_ogd_run(stream, P, dom, default_round_eta(cfg, T), seed=seed)
    comp = best_fixed_comparator(stream, dom)
    return RunResult(cfg, seed, rec, stream, comp, cumulative_regret(rec, stream, comp))


def run_experiment(cfg: ExperimentConfig, *, write: bool = True) -> list[RunResult]:
    """Run every seed of ``cfg``; write the CSV when ``cfg.output`` is set."""
    results = [run_single(cfg, seed) for seed in cfg.seeds]
    if write and cfg.output:
        with open(cfg.output, "w", newline="") as fh:
            write_csv(fh, results, stride=cfg.stride, learners=cfg.learners or None, header=cfg.header())
    return results


def _check_pairing(records: RunRecords, stream: LossStream) -> None:
    if records.stream_fingerprint != stream.fingerprint:
        raise InvalidPairing(
            f"records come from stream {records.stream_fingerprint}, not {stream.fingerprint}"
        )
    if records.T > stream.T or records.n != stream.n:
        raise InvalidPairing("records do not fit the stream's horizon or learner count")


def cumulative_regret(records: RunRecords, stream: LossStream, comparator) -> np.ndarray:
    """``R(t, i)`` for every prefix ``t`` (array ``(T, n)``).

    ``R(t, i) = sum_{s <= t} sum_j f_{s,j}(x_i(s)) - sum_{s <= t} sum_j f_{s,j}(x*)``.
    """
    _check_pairing(records, stream)
    fstar = stream.global_values_at(np.asarray(comparator, dtype=float))[: records.T]
    return np.cumsum(records.loss - fstar[:, None], axis=0)


def regret(records: RunRecords, stream: LossStream, comparator) -> np.ndarray:
    """Final regret ``R(T, i)`` per learner."""
    return cumulative_regret(records, stream, comparator)[-1]


def bandit_regret(records: RunRecords, stream: LossStream, comparator) -> np.ndarray:
    """Final bandit regret per learner.

    Two-point runs record the mean loss of both plays, so this is ``R_2``.
    """
    if records.algo not in ("top_dobd1", "top_dobd2"):
        raise InvalidPairing(f"bandit regret needs bandit records, got {records.algo}")
    return regret(records, stream, comparator)


# sweeps


def fit_exponent(Ts, regrets) -> float:
    """Least-squares slope of ``log regret`` against ``log T``."""
    Ts = np.asarray(Ts, dtype=float)
    regrets = np.asarray(regrets, dtype=float)
    if Ts.size < 2:
        raise InvalidSweep("need at least two horizons")
    if np.any(regrets <= 0):
        raise InvalidSweep("regrets must be positive to fit a log-log slope")
    return float(np.polyfit(np.log(Ts), np.log(regrets), 1)[0])


def doubling_ratios(Ts, regrets) -> dict:
    """``R(2T)/R(T)`` for every pair of horizons in the sweep that differ by a factor two."""
    table = dict(zip((int(T) for T in Ts), regrets))
    return {T: table[2 * T] / table[T] for T in sorted(table) if 2 * T in table}


@dataclass
class SweepResult:
    horizons: list
    mean_regret: list
    per_seed: dict
    slope: float
    ratios: dict


def scaling_sweep(cfg: ExperimentConfig, horizons) -> SweepResult:
    """Mean final regret (over learners and seeds) for every horizon, plus the fitted slope."""
    horizons = sorted(int(T) for T in horizons)
    if len(horizons) < 2:
        raise InvalidSweep(f"a sweep needs at least two horizons, got {horizons}")
    per_seed = {}
    means = []
    for T in horizons:
        cur = cfg.replace(T=T)
        finals = [float(np.mean(run_single(cur, s).final_regret)) for s in cfg.seeds]
        per_seed[T] = finals
        means.append(float(np.mean(finals)))
    return SweepResult(horizons, means, per_seed, fit_exponent(horizons, means),
                       doubling_ratios(horizons, means))


# delay probe


@dataclass
class DelayProbe:
    n: int
    omega: float
    hops: int
    trials: int
    mean: float
    stderr: float
    expected: float


def delay_probe(n: int, omega: float, trials: int, seed: int = 0, hops: int | None = None) -> DelayProbe:
    """Rounds for information to cross ``ceil(m/2)`` cycle hops under randomized gossip.

    Each hop waits for the first successful transmission, a geometric
    delay with success probability ``omega``; the hop delays are summed.
    """
    K, K1, _ = lower_bound_groups(n, omega)
    if hops is None:
        hops = K
    if hops < 1 or trials < 1:
        raise InvalidConstruction("need at least one hop and one trial")
    rng = np.random.default_rng(seed)
    total = rng.geometric(omega, size=(trials, hops)).sum(axis=1)
    stderr = float(total.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    return DelayProbe(n, omega, hops, trials, float(total.mean()), stderr, hops / omega)


# CSV


def _g(x) -> str:
    return "%.17g" % x


def write_csv(fh, results, *, stride: int = 1, learners=None, header: dict | None = None) -> None:
    """Write one row per recorded (round, learner) of every result.

    Recorded rounds are ``t = stride, 2 stride, ...`` (1-based) plus the
    final round.  ``header`` entries go first as ``# key = value`` lines.
    """
    if stride < 1:
        raise ValueError("stride must be >= 1")
    if header:
        for key, value in header.items():
            fh.write(f"# {key} = {json.dumps(value, sort_keys=True)}\n")
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for res in results:
        rec = res.records
        T, n = rec.T, rec.n
        rounds = list(range(stride - 1, T, stride))
        if not rounds or rounds[-1] != T - 1:
            rounds.append(T - 1)
        who = range(n) if learners is None else learners
        cum_bytes = rec.cum_bytes
        for t in rounds:
            for i in who:
                writer.writerow((
                    res.run_id, res.seed, rec.algo, t + 1, int(rec.block[t]), i,
                    _g(rec.loss[t, i]), _g(res.cum_regret[t, i]), _g(cum_bytes[t, i]),
                    _g(rec.e_consensus[t]), _g(rec.e_compression[t]), _g(rec.proj_residual[t, i]),
                ))


def csv_text(results, **kwargs) -> str:
    buf = io.StringIO()
    write_csv(buf, results, **kwargs)
    return buf.getvalue()
