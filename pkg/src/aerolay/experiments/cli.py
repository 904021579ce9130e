"""``aerolay`` command line."""
from __future__ import annotations

import argparse
import dataclasses
import math
import sys

from ..config import ConfigError
from . import runner
from .config import ExperimentSpec, load_config

_ENGINES = {"analytical": ("analytical",), "mc": ("montecarlo",), "both": ("analytical", "montecarlo")}


def build_parser():
    p = argparse.ArgumentParser(prog="aerolay", description="UAV/GUE coexistence coverage experiments")
    sub = p.add_subparsers(dest="verb", required=True)
    for verb, help_ in (
        ("fig2", "coverage vs SINR threshold, analysis against simulation"),
        ("fig3", "coverage at -5 dB vs UAV PRB fraction"),
        ("fig45", "rate CCDFs for both sharing modes"),
        ("sweep", "one-variable sweep defined in the config"),
        ("validate-config", "parse and validate a config file"),
    ):
        s = sub.add_parser(verb, help=help_)
        s.add_argument("--config", metavar="PATH", help="flat key = value file (defaults if omitted)")
        s.add_argument("--out", metavar="PREFIX", help="output path prefix")
        s.add_argument("--drops", metavar="N", type=int, help="Monte Carlo drops per point")
        s.add_argument("--seed", metavar="S", type=int, help="Monte Carlo seed")
        s.add_argument("--engine", choices=sorted(_ENGINES), help="evaluation engine(s)")
    return p


def resolve_spec(args) -> ExperimentSpec:
    spec = load_config(args.config) if args.config else ExperimentSpec()
    changes = {}
    if args.out:
        changes["output"] = args.out
    if args.drops is not None:
        changes["n_drops"] = args.drops
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.engine:
        changes["engines"] = _ENGINES[args.engine]
    return dataclasses.replace(spec, **changes) if changes else spec


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        spec = resolve_spec(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    if args.verb == "validate-config":
        s = spec.scenario
        print(f"ok: {s.sharing_mode.value}, eta_u={s.eta_u:g}, B_u={s.bandwidth_u:.9g} Hz, B_g={s.bandwidth_g:.9g} Hz")
        return 0
    if args.verb == "fig2":
        paths, gap = runner.run_fig2(spec)
        for p in paths:
            print(p)
        if not math.isnan(gap):
            print(f"max |analytical - montecarlo| = {gap:.4f}")
            if gap > runner.GAP_LIMIT:
                print(f"gap exceeds {runner.GAP_LIMIT}", file=sys.stderr)
                return 1
        return 0
    fn = {"fig3": runner.run_fig3, "fig45": runner.run_fig4_fig5, "sweep": runner.sweep}[args.verb]
    for p in fn(spec):
        print(p)
    return 0


if __name__ == "__main__":
    sys.exit(main())
