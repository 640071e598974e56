"""Command-line entry point: ``mbkdv <verb> [--config FILE] [overrides]``.

Exit status is 0 when every check of the run passed, 1 when a check
failed or the run aborted, and 2 for usage or configuration errors.
"""
import argparse
import json
import sys

from . import experiments
from .errors import MBKdVError

VERBS = list(experiments.EXPERIMENTS)

# flag -> config key; values are parsed by the experiment drivers
FLAGS = {
    "n": int,
    "L": str,
    "s": str,
    "N": str,
    "rho": str,
    "dt": float,
    "T": float,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mbkdv", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="verb", required=True)
    for verb in VERBS:
        p = sub.add_parser(verb, help=(experiments.EXPERIMENTS[verb].__doc__ or "").split("\n")[0])
        p.add_argument("--config", help="flat YAML file of key: value pairs")
        p.add_argument("--seed", type=int, help="64-bit seed for the run")
        p.add_argument("--out", help="output directory (manifest, CSV, JSON)")
        for flag, typ in FLAGS.items():
            p.add_argument(f"--{flag}", type=typ, dest=flag,
                           help="comma-separated list allowed" if typ is str else None)
        p.add_argument("--quiet", action="store_true", help="print only the pass/fail line")
    return ap


def _overrides(args) -> dict:
    out = {k: getattr(args, k) for k in FLAGS}
    out["seed"] = args.seed
    return out


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        file_cfg = experiments.load_config(args.config) if args.config else {}
        over = {k: v for k, v in _overrides(args).items() if v is not None}
        unknown = [k for k in over if k not in experiments.DEFAULTS[args.verb]]
        if unknown:
            raise experiments.ConfigurationError(
                f"{args.verb} does not take --{', --'.join(unknown)}")
        cfg = experiments.effective_config(args.verb, file_cfg, over)
        report = experiments.run(args.verb, cfg, args.out)
    except (ValueError, OSError) as exc:
        print(f"mbkdv {args.verb}: error: {exc}", file=sys.stderr)
        return 2
    except (ArithmeticError, MBKdVError) as exc:
        print(f"mbkdv {args.verb}: failed: {exc}", file=sys.stderr)
        return 1
    status = "PASS" if report["pass"] else "FAIL"
    if not args.quiet:
        print(json.dumps(report, indent=2, sort_keys=True, default=experiments._jsonable))
    print(f"{args.verb}: {status}")
    return 0 if report["pass"] else 1


if __name__ == "__main__":
    sys.exit(main())
