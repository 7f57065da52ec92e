"""Command-line front end: ``curvkit {invariants,verify,functional}``.

Exit codes: 0 when every asserted check passes, 1 when one fails, 2 for a
configuration error. Reports are JSON documents written to ``--out`` (or
stdout); durations live in a separate section so the rest is byte-stable.
"""
from __future__ import annotations

import argparse
import sys

from . import models
from .report import dumps
from .suites import SUITES, ConfigError, RunConfig, functional_suite, invariants_data, run_suite


def _int_list(text: str) -> list:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="curvkit", description="Curvature invariants and their verification.")
    sub = p.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--model", choices=sorted(models.CATALOG))
    common.add_argument("--n", type=_int_list, default=[], help="dimension(s), comma separated")
    common.add_argument("--k", type=_int_list, default=[], help="order(s) k, comma separated")
    common.add_argument("--mu", type=float)
    common.add_argument("--eps", type=float, choices=(-1.0, 0.0, 1.0))
    common.add_argument("--mass", type=float)
    common.add_argument("--res", type=int, help="grid points per axis for integrals")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--tol-scale", type=float, default=1.0, dest="tol_scale")
    common.add_argument("--quick", action="store_true", help="reduced sample counts")
    common.add_argument("--out", help="write the report here instead of stdout")
    sub.add_parser("invariants", parents=[common], help="invariants of a model at sample points")
    v = sub.add_parser("verify", parents=[common], help="run verification suites")
    v.add_argument("--suite", choices=SUITES, default="all")
    sub.add_parser("functional", parents=[common], help="integral checks on a periodic model")
    return p


def _config(args) -> RunConfig:
    return RunConfig(
        suite=getattr(args, "suite", "all"), model=args.model, n=args.n, k=args.k, mu=args.mu,
        eps=args.eps, mass=args.mass, res=args.res, seed=args.seed, tol_scale=args.tol_scale,
        quick=args.quick, out=args.out,
    ).validate()


def cmd_invariants(cfg: RunConfig):
    return invariants_data(cfg)


def cmd_verify(cfg: RunConfig):
    return run_suite(cfg), None


def cmd_functional(cfg: RunConfig):
    return functional_suite(cfg), None


COMMANDS = {"invariants": cmd_invariants, "verify": cmd_verify, "functional": cmd_functional}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = _config(args)
        records, data = COMMANDS[args.command](cfg)
    except (ConfigError, models.ModelError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    meta = {"command": args.command, **cfg.as_meta()}
    text = dumps(records, meta=meta, data=data)
    if cfg.out:
        with open(cfg.out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    for r in records:
        print(r.line(), file=sys.stderr)
    failed = [r for r in records if r.asserted and not r.passed]
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
