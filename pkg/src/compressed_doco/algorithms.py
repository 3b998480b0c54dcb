"""Distributed online learners over a compressed gossip network.

* :func:`top_dogd_run` -- two-level blocking: ``L1`` rounds of online
  compressed gossip, then ``L2`` rounds compensating the projection
  residual with a repeated compressor; one commit per block.  With
  ``feedback="one_point"`` / ``"two_point"`` it becomes the bandit learner
  (:func:`top_dobd1_run` / :func:`top_dobd2_run`).
* :func:`dc_dogd_run` -- per-round gradient step plus one Choco move.
* :func:`d_ogd_run` -- uncompressed gossip baseline.

Every learner sends exactly one message per round in all three.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .adversary import LossStream, sample_sphere
from .compress import CompressorKind, compress_rows, omega_of, payload_bytes
from .errors import (
    HorizonTooShort,
    InternalInvariantFailure,
    InvalidDomain,
    InvalidExploration,
    InvalidStepSize,
)
from .geometry import Domain
from .gossip import global_mean, make_state
from .topology import GossipMatrix

__all__ = [
    "MODES",
    "EtaSchedule",
    "HyperParams",
    "RunRecords",
    "consensus_gamma",
    "derive_hyperparams",
    "top_dogd_run",
    "top_dobd1_run",
    "top_dobd2_run",
    "dc_dogd_run",
    "d_ogd_run",
]

MODES = (
    "convex",
    "strongly_convex",
    "bandit1_convex",
    "bandit1_sc",
    "bandit2_convex",
    "bandit2_sc",
)


@dataclass(frozen=True)
class EtaSchedule:
    """Learning rate per block ``b`` (1-based).

    ``constant``: ``eta``.  ``strongly_convex``: ``1 / (mu (b L + 8))``.
    """

    kind: str = "constant"
    eta: float | None = None
    mu: float | None = None
    L: int = 1

    def __post_init__(self) -> None:
        if self.kind == "constant" and not (self.eta is not None and self.eta >= 0):
            raise InvalidStepSize(f"constant schedule needs eta >= 0, got {self.eta}")
        if self.kind == "strongly_convex" and not (self.mu is not None and self.mu > 0):
            raise InvalidStepSize(f"strongly convex schedule needs mu > 0, got {self.mu}")
        if self.kind not in ("constant", "strongly_convex"):
            raise InvalidStepSize(f"unknown schedule {self.kind!r}")

    def __call__(self, b: int) -> float:
        if self.kind == "constant":
            return self.eta
        return 1.0 / (self.mu * (b * self.L + 8))


@dataclass(frozen=True)
class HyperParams:
    L1: int
    L2: int
    gamma: float
    eta: EtaSchedule
    eps: float | None = None
    zeta: float | None = None
    allow_no_compensation: bool = False

    def __post_init__(self) -> None:
        if self.L1 < 1:
            raise InvalidStepSize(f"L1 must be >= 1, got {self.L1}")
        if self.L2 < 0 or (self.L2 == 0 and not self.allow_no_compensation):
            raise InvalidStepSize(f"L2 must be >= 1 (0 only as an explicit ablation), got {self.L2}")
        if not (0.0 < self.gamma <= 1.0):
            raise InvalidStepSize(f"gamma must lie in (0, 1], got {self.gamma}")

    @property
    def L(self) -> int:
        return self.L1 + self.L2

    def to_dict(self) -> dict:
        out = asdict(self)
        out["L"] = self.L
        return out


def consensus_gamma(omega: float, rho: float, beta: float) -> float:
    """Consensus step size guaranteeing a ``1 - gamma rho / 2`` error contraction per gossip round."""
    den = 2 * rho * beta**2 + 4 * beta**2 + (2 - omega) * (beta**2 + 2 * beta) * rho + rho**2
    return omega * rho / den


def derive_hyperparams(
    n: int,
    omega: float,
    rho: float,
    beta: float,
    mode: str,
    *,
    G: float = 1.0,
    D: float = 1.0,
    T: int,
    mu: float | None = None,
    d: int | None = None,
    r: float | None = None,
    R: float | None = None,
    L1: int | None = None,
    L2: int | None = None,
    gamma: float | None = None,
    eta: float | None = None,
    eps: float | None = None,
    allow_no_compensation: bool = False,
) -> HyperParams:
    """Hyperparameters from the regret theorems, with field-wise overrides.

    Derived quantities use any overridden upstream value, so e.g. the
    convex learning rate ``D / (G sqrt(L T))`` follows an overridden ``L1``.
    For bandit modes the exploration radius takes the largest constant
    ``c <= 1`` keeping ``eps <= r/2``, and ``zeta = eps / r``.
    """
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")
    if not (0.0 < omega <= 1.0) or not (0.0 < rho <= 1.0) or not (0.0 <= beta <= 2.0):
        raise ValueError(f"need omega in (0,1], rho in (0,1], beta in [0,2]; got {omega}, {rho}, {beta}")
    g = consensus_gamma(omega, rho, beta) if gamma is None else float(gamma)
    l1 = math.ceil(2 * math.log(14 * n) / (g * rho)) if L1 is None else int(L1)
    l2 = math.ceil(math.log(8 * n) / omega) if L2 is None else int(L2)
    L = l1 + l2
    if T < L:
        raise HorizonTooShort(f"horizon T={T} is shorter than one block L={L}")

    strongly = mode in ("strongly_convex", "bandit1_sc", "bandit2_sc")
    if strongly and not (mu is not None and mu > 0):
        raise ValueError(f"mode {mode} needs mu > 0")

    e = z = None
    if mode.startswith("bandit"):
        if r is None or r <= 0:
            raise InvalidDomain(f"bandit modes need a domain with inner radius r > 0, got {r}")
        if d is None or R is None:
            raise ValueError("bandit modes need d and R")
        if mode == "bandit1_convex":
            e0 = math.sqrt(d) * L**0.25 * T**-0.25
        elif mode == "bandit1_sc":
            e0 = d ** (2 / 3) * L ** (1 / 3) * (math.log(T + 8) / T) ** (1 / 3)
        elif mode == "bandit2_convex":
            e0 = T**-0.5
        else:
            e0 = math.log(T) / T
        e = min(e0, r / 2) if eps is None else float(eps)
        if not (0 < e < r):
            raise InvalidExploration(f"exploration radius must lie in (0, r), got {e} with r={r}")
        z = e / r

    if strongly:
        sched = EtaSchedule("strongly_convex", mu=mu, L=L)
    elif eta is not None:
        sched = EtaSchedule("constant", eta=float(eta))
    elif mode == "convex":
        sched = EtaSchedule("constant", eta=D / (G * math.sqrt(L * T)))
    elif mode == "bandit1_convex":
        sched = EtaSchedule("constant", eta=R * e / (d * math.sqrt(L * T)))
    else:
        sched = EtaSchedule("constant", eta=R / (d * G * math.sqrt(L * T)))
    if strongly and eta is not None:
        sched = EtaSchedule("constant", eta=float(eta))
    return HyperParams(l1, l2, g, sched, e, z, allow_no_compensation)


@dataclass
class RunRecords:
    """Per-round telemetry of one run; arrays are indexed ``[t]`` or ``[t, i]``.

    ``loss[t, i]`` is the global loss ``sum_j f_{t,j}`` at learner ``i``'s
    play (the mean over both plays under two-point feedback).
    ``wire_bytes[t, i]`` is the charge for learner ``i``'s single message
    in round ``t``; ``messages[t, i]`` counts those messages.
    """

    algo: str
    seed: int
    stream_fingerprint: tuple
    block: np.ndarray
    loss: np.ndarray
    wire_bytes: np.ndarray
    messages: np.ndarray
    e_consensus: np.ndarray
    e_compression: np.ndarray
    proj_residual: np.ndarray
    plays: np.ndarray | None = None
    info: dict = field(default_factory=dict)

    @property
    def T(self) -> int:
        return self.loss.shape[0]

    @property
    def n(self) -> int:
        return self.loss.shape[1]

    @property
    def cum_bytes(self) -> np.ndarray:
        return np.cumsum(self.wire_bytes, axis=0)


class _Recorder:
    def __init__(self, stream: LossStream, T: int, keep_plays: bool, two_point: bool = False):
        n, d = stream.n, stream.d
        self.stream = stream
        self.block = np.zeros(T, dtype=int)
        self.loss = np.zeros((T, n))
        self.wire_bytes = np.zeros((T, n))
        self.messages = np.zeros((T, n), dtype=int)
        self.e_cons = np.zeros(T)
        self.e_comp = np.zeros(T)
        self.proj = np.zeros((T, n))
        shape = (T, n, 2, d) if two_point else (T, n, d)
        self.plays = np.zeros(shape) if keep_plays else None

    def log(self, t, b, losses, cost, e_cons, e_comp, proj, plays):
        self.block[t] = b
        self.loss[t] = losses
        self.wire_bytes[t] = cost
        self.messages[t] = 1
        self.e_cons[t] = e_cons
        self.e_comp[t] = e_comp
        self.proj[t] = proj
        if self.plays is not None:
            self.plays[t] = plays

    def finish(self, algo, seed, info) -> RunRecords:
        return RunRecords(
            algo, seed, self.stream.fingerprint, self.block, self.loss, self.wire_bytes,
            self.messages, self.e_cons, self.e_comp, self.proj, self.plays, info,
        )


def _errors(x: np.ndarray, xhat: np.ndarray) -> tuple[float, float]:
    dev = x - global_mean(x)
    comp = x - xhat
    return float(np.sum(dev * dev)), float(np.sum(comp * comp))


def _learner_rngs(seed: int, n: int):
    comp_root, explore_root = np.random.SeedSequence(seed).spawn(2)
    comp = [np.random.default_rng(s) for s in comp_root.spawn(n)]
    explore = [np.random.default_rng(s) for s in explore_root.spawn(n)]
    return comp, explore


def _check_shapes(stream: LossStream, P: GossipMatrix, dom: Domain, T: int | None) -> int:
    if P.n != stream.n:
        raise ValueError(f"gossip matrix has n={P.n}, stream has n={stream.n}")
    if dom.d != stream.d:
        raise ValueError(f"domain has d={dom.d}, stream has d={stream.d}")
    T = stream.T if T is None else int(T)
    if not (1 <= T <= stream.T):
        raise ValueError(f"horizon T={T} outside the stream's 1..{stream.T}")
    return T


def top_dogd_run(
    stream: LossStream,
    P: GossipMatrix,
    dom: Domain,
    hp: HyperParams,
    kind: CompressorKind,
    *,
    engine: str = "efficient",
    T: int | None = None,
    seed: int = 0,
    feedback: str = "full",
    bytes_mode: str = "expected",
    keep_plays: bool = False,
    trace: list | None = None,
) -> RunRecords:
    """Run the two-level blocked learner for ``T`` rounds.

    Block ``b`` (size ``L = L1 + L2``) plays the committed ``x_i(b)``
    throughout.  Its first ``L1`` rounds gossip the surrogate
    ``y = x(b) - eta_b z(b-1)``: compress ``y - yhat``, update the
    replicas, then move ``y`` along the new replica differences.  The last
    ``L2`` rounds send the repeated compression of the residual
    ``r = Proj(y) - y`` into the same replicas.  At block end
    ``x(b+1) = Proj(y)`` and ``z(b)`` is the block's gradient sum at
    ``x(b)``.

    Block 1 starts from ``x = xhat = 0`` with ``z(0) = 0``, so its gossip
    messages are compressions of the zero vector: the state stays at zero
    while every learner still sends its one message per round.  A final
    partial block replays ``x(b)`` and never commits.

    ``feedback`` selects full gradients or the one/two-point bandit
    estimators; bandit runs play ``x(b) +- eps u`` and project onto the
    ``(1 - zeta)``-shrunken domain.  ``trace``, if given, receives a dict
    per round with copies of the internal state (tests only).
    """
    T = _check_shapes(stream, P, dom, T)
    if feedback not in ("full", "one_point", "two_point"):
        raise ValueError(f"unknown feedback {feedback!r}")
    n, d = stream.n, stream.d
    kind.validate(d)
    L1, L2, L, gamma = hp.L1, hp.L2, hp.L, hp.gamma
    bandit = feedback != "full"
    if bandit:
        if dom.r <= 0:
            raise InvalidDomain("bandit feedback needs a domain containing a ball around the origin")
        eps = hp.eps
        if eps is None or not (0 < eps <= dom.r):
            raise InvalidExploration(f"exploration radius must lie in (0, r={dom.r}], got {eps}")
        proj_dom = dom.shrink(hp.zeta if hp.zeta is not None else eps / dom.r)
    else:
        proj_dom = dom

    comp_rngs, explore_rngs = _learner_rngs(seed, n)
    rec = _Recorder(stream, T, keep_plays, two_point=feedback == "two_point")

    x = np.zeros((n, d))
    gs = make_state(engine, x, P)
    z_prev = np.zeros((n, d))
    z_cur = np.zeros((n, d))
    y = x.copy()
    r_target = np.zeros((n, d))
    r_acc = np.zeros((n, d))
    x_next = x.copy()
    r_norm = np.zeros(n)
    e_cons, e_comp = _errors(x, gs.own())

    for t in range(T):
        b, pos = t // L + 1, t % L
        if pos == 0:
            y = x - hp.eta(b) * z_prev

        # play and collect first-order information at the committed decision
        if not bandit:
            plays = x
            losses = stream.global_values(t, x)
            z_cur += stream.grads(t, x)
        else:
            u = np.stack([sample_sphere(rg, d) for rg in explore_rngs])
            p1 = x + eps * u
            if not dom.contains(p1):
                raise InternalInvariantFailure(f"bandit play left the domain in round {t}")
            if feedback == "one_point":
                plays = p1
                losses = stream.global_values(t, p1)
                z_cur += (d / eps) * stream.values(t, p1)[:, None] * u
            else:
                p2 = x - eps * u
                if not dom.contains(p2):
                    raise InternalInvariantFailure(f"bandit play left the domain in round {t}")
                plays = np.stack([p1, p2], axis=1)
                losses = 0.5 * (stream.global_values(t, p1) + stream.global_values(t, p2))
                diff = stream.values(t, p1) - stream.values(t, p2)
                z_cur += (d / (2.0 * eps)) * diff[:, None] * u

        # one transmission per learner
        if pos < L1:
            q, cost = compress_rows(kind, y - gs.own(), comp_rngs, mode=bytes_mode)
            gs.absorb(q, P)
            y = gs.mix(y, P, gamma)
            phase = "gossip"
        else:
            if pos == L1:
                x_next = proj_dom.project(y)
                r_target = x_next - y
                r_acc = np.zeros((n, d))
                r_norm = np.linalg.norm(r_target, axis=1)
            q, cost = compress_rows(kind, r_target - r_acc, comp_rngs, mode=bytes_mode)
            r_acc = r_acc + q
            gs.absorb(q, P)
            phase = "compensate"

        rec.log(t, b, losses, cost, e_cons, e_comp, r_norm, plays)
        if trace is not None:
            trace.append({
                "t": t, "b": b, "phase": phase, "x": x.copy(), "y": y.copy(),
                "replicas": gs.own(), "r_target": r_target.copy(), "r_acc": r_acc.copy(),
                "x_next": x_next.copy(), "z": z_cur.copy(),
            })

        if pos == L - 1:
            if L2 == 0:
                x_next = proj_dom.project(y)
                r_norm = np.linalg.norm(x_next - y, axis=1)
            if not dom.contains(x_next):
                raise InternalInvariantFailure(f"committed decision left the domain after block {b}")
            x = x_next
            z_prev, z_cur = z_cur, np.zeros((n, d))
            e_cons, e_comp = _errors(x, gs.own())

    algo = {"full": "top_dogd", "one_point": "top_dobd1", "two_point": "top_dobd2"}[feedback]
    info = {"hyperparams": hp.to_dict(), "compressor": kind.to_dict(), "engine": engine,
            "omega": omega_of(kind, d)}
    return rec.finish(algo, seed, info)


def top_dobd1_run(stream, P, dom, hp, kind, **kwargs) -> RunRecords:
    """Top-DOGD with one-point bandit feedback."""
    return top_dogd_run(stream, P, dom, hp, kind, feedback="one_point", **kwargs)


def top_dobd2_run(stream, P, dom, hp, kind, **kwargs) -> RunRecords:
    """Top-DOGD with two-point bandit feedback."""
    return top_dogd_run(stream, P, dom, hp, kind, feedback="two_point", **kwargs)


def dc_dogd_run(
    stream: LossStream,
    P: GossipMatrix,
    dom: Domain,
    gamma: float,
    eta_schedule: EtaSchedule,
    kind: CompressorKind,
    *,
    engine: str = "efficient",
    T: int | None = None,
    seed: int = 0,
    bytes_mode: str = "expected",
    keep_plays: bool = False,
) -> RunRecords:
    """``x_i <- Proj(x_i - eta_t g_i + gamma sum_j W_ij (xhat_j - xhat_i))``, then
    broadcast ``C(x_i' - xhat_i)`` into the replicas."""
    T = _check_shapes(stream, P, dom, T)
    if not (0.0 <= gamma <= 1.0):
        raise InvalidStepSize(f"gamma must lie in [0, 1], got {gamma}")
    n, d = stream.n, stream.d
    kind.validate(d)
    comp_rngs, _ = _learner_rngs(seed, n)
    rec = _Recorder(stream, T, keep_plays)
    x = np.zeros((n, d))
    gs = make_state(engine, x, P)
    for t in range(T):
        e_cons, e_comp = _errors(x, gs.own())
        losses = stream.global_values(t, x)
        g = stream.grads(t, x)
        v = gs.mix(x - eta_schedule(t + 1) * g, P, gamma)
        x_new = dom.project(v)
        q, cost = compress_rows(kind, x_new - gs.own(), comp_rngs, mode=bytes_mode)
        gs.absorb(q, P)
        rec.log(t, t + 1, losses, cost, e_cons, e_comp, np.linalg.norm(x_new - v, axis=1), x)
        x = x_new
    info = {"gamma": gamma, "eta": asdict(eta_schedule), "compressor": kind.to_dict(),
            "engine": engine, "omega": omega_of(kind, d)}
    return rec.finish("dc_dogd", seed, info)


def d_ogd_run(
    stream: LossStream,
    P: GossipMatrix,
    dom: Domain,
    eta_schedule: EtaSchedule,
    *,
    T: int | None = None,
    seed: int = 0,
    keep_plays: bool = False,
) -> RunRecords:
    """``x_i <- Proj(sum_j W_ij x_j - eta_t g_i)`` with uncompressed messages."""
    T = _check_shapes(stream, P, dom, T)
    n, d = stream.n, stream.d
    rec = _Recorder(stream, T, keep_plays)
    cost = np.full(n, float(payload_bytes(CompressorKind("identity"), d)))
    x = np.zeros((n, d))
    for t in range(T):
        dev = x - global_mean(x)
        losses = stream.global_values(t, x)
        v = P.w @ x - eta_schedule(t + 1) * stream.grads(t, x)
        x_new = dom.project(v)
        rec.log(t, t + 1, losses, cost, float(np.sum(dev * dev)), 0.0,
                np.linalg.norm(x_new - v, axis=1), x)
        x = x_new
    return rec.finish("d_ogd", seed, {"eta": asdict(eta_schedule)})


def with_overrides(hp: HyperParams, **fields) -> HyperParams:
    """Copy of ``hp`` with the given fields replaced."""
    return replace(hp, **fields)
