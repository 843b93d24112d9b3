"""Command line entry points."""

from __future__ import annotations

import argparse
import json
import sys

from . import __version__
from .control import corollary_coefficients
from .domain import build_group
from .errors import ConstraintViolation
from .harness import (
    EXIT_CONFIG,
    EXIT_OK,
    build_carrier,
    dump_report,
    load_config,
    run_config,
    validate_config,
)
from .oracle import jensen_solution_space, quadratic_solution_space
from .selfcheck import selftest


def _cmd_stabilize(args) -> int:
    try:
        cfg = load_config(args.config)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    report, code = run_config(cfg)
    text = dump_report(report, args.out)
    if not args.out:
        print(text)
    if code != EXIT_OK and "error" in report:
        err = report["error"]
        print(f"error ({err['stage']}): {err['message']}", file=sys.stderr)
    return code


def _cmd_oracle(args) -> int:
    try:
        cfg = load_config(args.config)
        cfg = validate_config(cfg)
        carrier = build_carrier(cfg)
        group = build_group(cfg.get("generators", []), carrier)
        quad = quadratic_solution_space(group, carrier)
        jen_side = jensen_solution_space(group, carrier, with_side_condition=True)
        jen_free = jensen_solution_space(group, carrier, with_side_condition=False)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = {
        "group_order": group.order,
        "quadratic_dimension": quad.dimension,
        "jensen_dimension_with_side_condition": jen_side.dimension,
        "jensen_dimension_without_side_condition": jen_free.dimension,
    }
    print(json.dumps(out, sort_keys=True, indent=2))
    return EXIT_OK


def _cmd_selftest(_args) -> int:
    return 0 if selftest() else 1


def _cmd_coeffs(args) -> int:
    try:
        cf, cg, ch = corollary_coefficients(args.theta, args.p, args.beta, args.K)
    except ConstraintViolation as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(json.dumps({"f": cf, "g": cg, "h": ch}, sort_keys=True, indent=2))
    return EXIT_OK


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="pexstab",
        description="Stability laboratory for the K-averaged Pexider equation.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("stabilize", help="run a decomposition experiment")
    p.add_argument("--config", required=True, help="JSON configuration file")
    p.add_argument("--out", help="write the JSON report here instead of stdout")
    p.set_defaults(fn=_cmd_stabilize)

    p = sub.add_parser("oracle", help="report exact solution-space dimensions")
    p.add_argument("--config", required=True, help="JSON configuration file")
    p.set_defaults(fn=_cmd_oracle)

    p = sub.add_parser("selftest", help="run the built-in verification suite")
    p.set_defaults(fn=_cmd_selftest)

    p = sub.add_parser("coeffs", help="closed-form bound coefficients for power controls")
    p.add_argument("--theta", type=float, required=True)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--K", type=int, required=True, help="group order")
    p.set_defaults(fn=_cmd_coeffs)

    args = parser.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    raise SystemExit(main())
