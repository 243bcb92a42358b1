"""Command-line entry point: ``reconn run | verify | singular-solve | defaults``."""
from __future__ import annotations

import argparse
import json
import os
import sys
from contextlib import nullcontext
from pathlib import Path

from . import sturm_liouville as slv
from .errors import ConfigError, NoRootInUnitInterval, NumericalFailure, ReconnError


def _thread_limit():
    n = os.environ.get("RECONN_THREADS")
    if not n:
        return nullcontext()
    try:
        from threadpoolctl import threadpool_limits
    except ImportError:
        return nullcontext()
    return threadpool_limits(limits=max(1, int(n)))


def _parse_sigma(text: str) -> list[float]:
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad sigma list {text!r}") from None
    if len(vals) < 2 or min(vals) <= 0:
        raise argparse.ArgumentTypeError("sigma needs at least two positive values")
    return vals


def cmd_run(args) -> int:
    from . import experiments as E

    cfg = E.load_config(args.config)
    over = {k: getattr(args, k) for k in ("iterations", "seed") if getattr(args, k) is not None}
    if over:
        cfg = E.with_overrides(cfg, **over)
    out = Path(args.out or cfg.out_dir or f"runs/{cfg.experiment}-seed{cfg.seed}")
    log = (lambda s: print(s, file=sys.stderr)) if args.log_every else None
    res = E.train(cfg, out, log=log, log_every=args.log_every)
    summary = {"out_dir": str(out), "rel_l2_u": res.report.rel_l2_u, "rel_l2_grad": res.report.rel_l2_grad}
    if res.lambdas:
        summary["lambda"] = res.lambdas
    print(json.dumps(summary))
    return 0


def cmd_verify(args) -> int:
    from .verify import run_suite

    rep = run_suite(args.suite)
    print(json.dumps(rep, indent=2))
    return 0 if rep["passed"] else 1


def cmd_singular(args) -> int:
    try:
        sol = slv.solve(args.sigma, a1=args.a1)
    except NoRootInUnitInterval:
        print(json.dumps({"error": "no singular exponent in (0,1)", "sigma": args.sigma}))
        print("no singular exponent in (0,1) for sigma=" + ",".join(map(str, args.sigma)), file=sys.stderr)
        return 2
    print(json.dumps(sol.to_dict()))
    return 0


def cmd_defaults(args) -> int:
    from . import experiments as E

    ids = [args.experiment] if args.experiment else list(E.EXPERIMENTS)
    out = {e: E.default_config(e).to_dict() for e in ids}
    print(json.dumps(out if len(ids) > 1 else out[ids[0]], indent=2))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="reconn", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="train one experiment from a JSON config")
    r.add_argument("config", help="JSON file with at least an 'experiment' key")
    r.add_argument("--out", help="output directory (overrides out_dir in the config)")
    r.add_argument("--iterations", type=int)
    r.add_argument("--seed", type=int)
    r.add_argument("--log-every", type=int, default=0, help="print progress to stderr every N iterations")
    r.set_defaults(func=cmd_run)

    v = sub.add_parser("verify", help="run an invariant suite and print a JSON report")
    v.add_argument("suite", choices=["autodiff", "geometry", "exact-solutions", "eigen"])
    v.set_defaults(func=cmd_verify)

    s = sub.add_parser("singular-solve", help="singular exponent and coefficients at a four-material vertex")
    s.add_argument("--sigma", type=_parse_sigma, default=[1.0, 2.0, 3.0, 4.0],
                   help="comma-separated sector coefficients, counter-clockwise from the positive x1 axis")
    s.add_argument("--a1", type=float, default=None, help="scale coefficients so a1 equals this value")
    s.set_defaults(func=cmd_singular)

    d = sub.add_parser("defaults", help="print default configs")
    d.add_argument("experiment", nargs="?")
    d.set_defaults(func=cmd_defaults)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        with _thread_limit():
            return args.func(args)
    except NumericalFailure as e:
        print(f"error: {e}", file=sys.stderr)
        return 3
    except (ConfigError, ReconnError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
