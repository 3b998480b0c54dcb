"""Command line entry point.

    compressed-doco run CONFIG
    compressed-doco sweep CONFIG --horizons 1024,4096,16384
    compressed-doco validate-matrix cycle 8
    compressed-doco compare CONFIG_A CONFIG_B
    compressed-doco delay-probe --n 10 --omega 0.5 --trials 1000

Global flags go before the subcommand: ``--seed`` replaces the config's
seed list, ``--out`` the CSV path and ``--stride`` the recording stride.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from ..errors import DocoError
from ..topology import gossip_matrix
from .config import ExperimentConfig
from .runner import delay_probe, run_experiment, run_single, scaling_sweep


def _load(path: str, args) -> ExperimentConfig:
    cfg = ExperimentConfig.from_toml(path)
    changes = {}
    if args.seed is not None:
        changes["seeds"] = [args.seed]
    if args.out is not None:
        changes["output"] = args.out
    if args.stride is not None:
        changes["stride"] = args.stride
    return cfg.replace(**changes) if changes else cfg


def _horizons(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"horizons must be comma-separated integers, got {text!r}")


def cmd_run(args) -> int:
    cfg = _load(args.config, args)
    for res in run_experiment(cfg):
        R = res.final_regret
        print(f"{res.run_id}: T={cfg.T} mean R(T,i)={R.mean():.6g} max={R.max():.6g} "
              f"bytes/learner={res.records.cum_bytes[-1].mean():.6g}")
    if cfg.output:
        print(f"wrote {cfg.output}")
    return 0


def cmd_sweep(args) -> int:
    cfg = _load(args.config, args)
    out = scaling_sweep(cfg, args.horizons)
    print(f"{'T':>8}  {'mean regret':>14}")
    for T, R in zip(out.horizons, out.mean_regret):
        print(f"{T:>8}  {R:>14.6g}")
    print(f"slope = {out.slope:.4f}")
    for T, ratio in out.ratios.items():
        print(f"R({2 * T})/R({T}) = {ratio:.4f}")
    return 0


def cmd_validate_matrix(args) -> int:
    P = gossip_matrix(args.topology, args.n, lazy=not args.no_lazify)
    P.check()
    print(f"sigma2 = {P.sigma2:.12g}")
    print(f"rho    = {P.rho:.12g}")
    print(f"beta   = {P.beta:.12g}")
    print(f"psd    = {P.is_psd()} (min eigenvalue {P.min_eigenvalue():.6g})")
    return 0


def cmd_compare(args) -> int:
    a = _load(args.config_a, args)
    b = _load(args.config_b, args)
    if a.seeds != b.seeds:
        print("note: using the first config's seeds for both", file=sys.stderr)
    rows = []
    print(f"{'seed':>6}  {'A':>14}  {'B':>14}  {'A - B':>14}")
    for seed in a.seeds:
        ra = float(run_single(a, seed).final_regret.mean())
        rb = float(run_single(b, seed).final_regret.mean())
        rows.append((ra, rb))
        print(f"{seed:>6}  {ra:>14.6g}  {rb:>14.6g}  {ra - rb:>14.6g}")
    arr = np.array(rows)
    print(f"{'mean':>6}  {arr[:, 0].mean():>14.6g}  {arr[:, 1].mean():>14.6g}  "
          f"{(arr[:, 0] - arr[:, 1]).mean():>14.6g}")
    return 0


def cmd_delay_probe(args) -> int:
    seed = 0 if args.seed is None else args.seed
    res = delay_probe(args.n, args.omega, args.trials, seed, hops=args.hops)
    print(f"hops = {res.hops}, trials = {res.trials}")
    print(f"mean = {res.mean:.6g} +- {res.stderr:.3g} (expected {res.expected:.6g})")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="compressed-doco", description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=None, help="run this single seed")
    ap.add_argument("--out", default=None, help="CSV output path")
    ap.add_argument("--stride", type=int, default=None, help="record every k-th round")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a config and write its CSV")
    p.add_argument("config")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="regret scaling over horizons")
    p.add_argument("config")
    p.add_argument("--horizons", type=_horizons, required=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("validate-matrix", help="print spectral quantities of a gossip matrix")
    p.add_argument("topology")
    p.add_argument("n", type=int)
    p.add_argument("--no-lazify", action="store_true")
    p.set_defaults(func=cmd_validate_matrix)

    p = sub.add_parser("compare", help="paired-seed final regret of two configs")
    p.add_argument("config_a")
    p.add_argument("config_b")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("delay-probe", help="cycle traversal delay under randomized gossip")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--omega", type=float, required=True)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--hops", type=int, default=None)
    p.set_defaults(func=cmd_delay_probe)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (DocoError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
