"""Experiment configuration read from a TOML file.

Sections and defaults::

    [experiment]
    name = "experiment"       # prefix of run_id
    algorithm = "top_dogd"    # top_dogd | top_dobd1 | top_dobd2 | dc_dogd | d_ogd
    T = 1024
    d = 10
    seeds = [0]
    gossip_engine = "efficient"   # efficient | naive
    bytes_mode = "expected"       # expected | realized
    output = ""               # CSV path; empty means no file
    stride = 1                # record every stride-th round
    learners = []             # learner subset for the CSV; empty means all

    [network]
    topology = "cycle"        # cycle | complete | path | grid2d
    n = 8
    lazify = true

    [compressor]
    variant = "top_k"         # plus k / p / tau as the variant needs
    k = 2

    [loss]
    kind = "linear"           # linear | quadratic | zero | lower_bound_convex | lower_bound_sc
    G = 1.0
    mu = 1.0
    D = 1.0
    p = 0.5

    [domain]
    variant = "box"           # ball (R) | box (half_width) | shifted_box (lo, hi)
    half_width = 0.5

    [hyperparams]             # every field optional; unset fields are derived
    L1 = 8
    L2 = 4
    gamma = 0.3
    eta = 0.01
    eps = 0.05
    allow_no_compensation = false
"""

from __future__ import annotations

import copy
import math
import sys
from dataclasses import dataclass, field

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from ..algorithms import EtaSchedule, consensus_gamma, derive_hyperparams
from ..compress import BYTE_MODES, CompressorKind, omega_of
from ..errors import ConfigError, InvalidDomain
from ..geometry import Domain
from ..gossip import ENGINES
from ..topology import TOPOLOGIES, gossip_matrix

ALGORITHMS = ("top_dogd", "top_dobd1", "top_dobd2", "dc_dogd", "d_ogd")
LOSS_KINDS = ("linear", "quadratic", "zero", "lower_bound_convex", "lower_bound_sc")
HP_FIELDS = ("L1", "L2", "gamma", "eta", "eps", "allow_no_compensation")

DEFAULTS = {
    "experiment": {
        "name": "experiment",
        "algorithm": "top_dogd",
        "T": 1024,
        "d": 10,
        "seeds": [0],
        "gossip_engine": "efficient",
        "bytes_mode": "expected",
        "output": "",
        "stride": 1,
        "learners": [],
    },
    "network": {"topology": "cycle", "n": 8, "lazify": True},
    "compressor": {"variant": "top_k", "k": 2},
    "loss": {"kind": "linear", "G": 1.0, "mu": 1.0, "D": 1.0, "p": 0.5},
    "domain": {"variant": "box", "half_width": 0.5},
    "hyperparams": {},
}


@dataclass
class ExperimentConfig:
    name: str = "experiment"
    algorithm: str = "top_dogd"
    T: int = 1024
    d: int = 10
    seeds: list = field(default_factory=lambda: [0])
    gossip_engine: str = "efficient"
    bytes_mode: str = "expected"
    output: str = ""
    stride: int = 1
    learners: list = field(default_factory=list)
    topology: str = "cycle"
    n: int = 8
    lazify: bool = True
    compressor: dict = field(default_factory=lambda: {"variant": "top_k", "k": 2})
    loss: dict = field(default_factory=lambda: dict(DEFAULTS["loss"]))
    domain: dict = field(default_factory=lambda: dict(DEFAULTS["domain"]))
    overrides: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        unknown = set(raw) - set(DEFAULTS)
        if unknown:
            raise ConfigError(f"unknown config sections {sorted(unknown)}")
        merged = copy.deepcopy(DEFAULTS)
        for section, values in raw.items():
            if not isinstance(values, dict):
                raise ConfigError(f"section [{section}] must be a table")
            if section in ("experiment", "network"):
                extra = set(values) - set(DEFAULTS[section])
                if extra:
                    raise ConfigError(f"unknown keys in [{section}]: {sorted(extra)}")
            if section in ("compressor", "domain"):
                # a new variant replaces the default table rather than merging into it
                merged[section] = dict(values)
            else:
                merged[section].update(values)
        extra = set(merged["hyperparams"]) - set(HP_FIELDS)
        if extra:
            raise ConfigError(f"unknown keys in [hyperparams]: {sorted(extra)}")
        cfg = cls(
            **merged["experiment"],
            **merged["network"],
            compressor=merged["compressor"],
            loss=merged["loss"],
            domain=merged["domain"],
            overrides=merged["hyperparams"],
        )
        cfg.validate()
        return cfg

    @classmethod
    def from_toml(cls, path) -> "ExperimentConfig":
        try:
            with open(path, "rb") as fh:
                raw = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
        return cls.from_dict(raw)

    def replace(self, **changes) -> "ExperimentConfig":
        out = copy.deepcopy(self)
        for key, value in changes.items():
            if not hasattr(out, key):
                raise ConfigError(f"unknown config field {key!r}")
            setattr(out, key, value)
        out.validate()
        return out

    # built objects

    def kind(self) -> CompressorKind:
        return CompressorKind.from_dict(self.compressor)

    def gossip(self):
        return gossip_matrix(self.topology, self.n, lazy=self.lazify)

    def dom(self) -> Domain:
        return Domain.from_dict(self.domain, self.d)

    def omega(self) -> float:
        return omega_of(self.kind(), self.d)

    @property
    def feedback(self) -> str:
        return {"top_dobd1": "one_point", "top_dobd2": "two_point"}.get(self.algorithm, "full")

    @property
    def strongly_convex(self) -> bool:
        return self.loss["kind"] in ("quadratic", "lower_bound_sc")

    def mode(self) -> str:
        base = "sc" if self.strongly_convex else "convex"
        if self.algorithm == "top_dobd1":
            return f"bandit1_{base}"
        if self.algorithm == "top_dobd2":
            return f"bandit2_{base}"
        return "strongly_convex" if self.strongly_convex else "convex"

    def hyperparams(self, T: int | None = None):
        """Derived Top-DOGD hyperparameters with this config's overrides applied."""
        P = self.gossip()
        dom = self.dom()
        T = self.T if T is None else T
        return derive_hyperparams(
            self.n, self.omega(), P.rho, P.beta, self.mode(),
            G=float(self.loss.get("G", 1.0)), D=dom.diameter, T=T,
            mu=float(self.loss.get("mu", 1.0)), d=self.d, r=dom.r, R=dom.R,
            **self.overrides,
        )

    def validate(self) -> None:
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(f"algorithm must be one of {ALGORITHMS}, got {self.algorithm!r}")
        if self.topology not in TOPOLOGIES:
            raise ConfigError(f"topology must be one of {TOPOLOGIES}, got {self.topology!r}")
        if self.gossip_engine not in ENGINES:
            raise ConfigError(f"gossip_engine must be one of {ENGINES}")
        if self.bytes_mode not in BYTE_MODES:
            raise ConfigError(f"bytes_mode must be one of {BYTE_MODES}")
        if self.loss.get("kind") not in LOSS_KINDS:
            raise ConfigError(f"loss kind must be one of {LOSS_KINDS}, got {self.loss.get('kind')!r}")
        for name in ("T", "d", "n", "stride"):
            value = getattr(self, name)
            if not isinstance(value, int) or isinstance(value, bool) or value < 1:
                raise ConfigError(f"{name} must be a positive integer, got {value!r}")
        if not self.seeds or not all(isinstance(s, int) and s >= 0 for s in self.seeds):
            raise ConfigError("seeds must be a non-empty list of non-negative integers")
        if any(not (0 <= i < self.n) for i in self.learners):
            raise ConfigError(f"learner subset must lie in 0..{self.n - 1}")
        self.kind().validate(self.d)
        dom = self.dom()
        if self.feedback != "full" and dom.r <= 0:
            raise InvalidDomain("bandit algorithms need a domain with r > 0")
        if self.loss["kind"].startswith("lower_bound"):
            if self.topology != "cycle" or self.compressor.get("variant") != "randomized_gossip":
                raise ConfigError("lower-bound streams require the cycle topology and randomized_gossip")
        if self.algorithm.startswith("top_do"):
            self.hyperparams()
        elif "gamma" in self.overrides and not (0 <= self.overrides["gamma"] <= 1):
            raise ConfigError("gamma must lie in [0, 1]")

    def header(self) -> dict:
        """Flat description written at the top of the CSV."""
        out = {
            "name": self.name, "algorithm": self.algorithm, "T": self.T, "d": self.d,
            "n": self.n, "topology": self.topology, "lazify": self.lazify,
            "compressor": self.compressor, "loss": self.loss, "domain": self.domain,
            "gossip_engine": self.gossip_engine, "bytes_mode": self.bytes_mode,
        }
        for key, value in sorted(self.overrides.items()):
            out[f"override.{key}"] = value
        return out


def default_dc_gamma(cfg: ExperimentConfig) -> float:
    """Consensus step of the per-round baselines when not overridden."""
    if "gamma" in cfg.overrides:
        return float(cfg.overrides["gamma"])
    P = cfg.gossip()
    return consensus_gamma(cfg.omega(), P.rho, P.beta)


def default_round_eta(cfg: ExperimentConfig, T: int):
    """Per-round learning rate of DC-DOGD / D-OGD: ``D/(G sqrt T)`` or ``1/(mu (t + 8))``."""
    if "eta" in cfg.overrides:
        return EtaSchedule("constant", eta=float(cfg.overrides["eta"]))
    if cfg.strongly_convex:
        return EtaSchedule("strongly_convex", mu=float(cfg.loss.get("mu", 1.0)), L=1)
    G = float(cfg.loss.get("G", 1.0))
    return EtaSchedule("constant", eta=cfg.dom().diameter / (G * math.sqrt(T)))
