"""Command-line entry point.

Exit codes: 0 success, 2 invalid configuration or input, 3 solver failure,
4 reproduction mismatch.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .errors import MaxIterations, QubitJointError
from .report import (
    ReproductionMismatch,
    RunConfig,
    cmd_check_joint,
    cmd_constants,
    cmd_evaluate,
    cmd_optimal_instrument,
    cmd_reproduce,
    dumps,
)

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_MISMATCH = 0, 2, 3, 4

log = logging.getLogger("qubitjoint")

# flag dest -> converter; shared by flags and config-file keys
_KEYS = {
    "axes": str,
    "eta": float,
    "variant": str,
    "metric": str,
    "scheme": str,
    "samples": int,
    "nodes": int,
    "seed": int,
    "eta_min": float,
    "eta_max": float,
    "eta_step": float,
    "max_iter": int,
    "kkt_tol": float,
    "out": str,
    "format": str,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("run configuration")
    g.add_argument("--config", help="JSON file with the same keys as the flags; flags win")
    g.add_argument("--axes", help="'standard' or 'x1,x2,x3;y1,y2,y3[;z1,z2,z3]' (normalized)")
    g.add_argument("--eta", type=float, help="smearing parameter probed by check-joint")
    g.add_argument("--variant", type=str.lower, choices=["g", "e", "f"])
    g.add_argument("--metric", choices=["average", "worst-case"])
    g.add_argument("--scheme", choices=["mc", "quad"], help="numeric integration scheme")
    g.add_argument("--samples", type=int, help="Monte Carlo sample count")
    g.add_argument("--nodes", type=int, help="quadrature nodes per coordinate")
    g.add_argument("--seed", type=int)
    g.add_argument("--eta-min", dest="eta_min", type=float)
    g.add_argument("--eta-max", dest="eta_max", type=float)
    g.add_argument("--eta-step", dest="eta_step", type=float)
    g.add_argument("--max-iter", dest="max_iter", type=int)
    g.add_argument("--kkt-tol", dest="kkt_tol", type=float)
    g.add_argument("--out", help="write the report here instead of stdout")
    g.add_argument("--format", choices=["text", "json"])
    g.add_argument("-v", "--verbose", action="store_true")

    p = _Parser(prog="qubitjoint", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("check-joint", parents=[common], help="sweep eta and locate the joint-measurability threshold")
    sub.add_parser("optimal-instrument", parents=[common], help="optimize the output states of a joint instrument")
    sub.add_parser("constants", parents=[common], help="closed-form and numeric alpha, beta, gamma")
    sub.add_parser("reproduce", parents=[common], help="run every reference case and compare")
    ev = sub.add_parser("evaluate", parents=[common], help="distances of a user-supplied instrument")
    ev.add_argument("instrument_file", help="lines 'tag x y z', e.g. '+- 0.5 -0.5 0'")
    return p


def load_config_file(path) -> dict:
    try:
        data = json.loads(Path(path).read_text())
    except OSError as exc:
        raise QubitJointError(f"{path}: cannot read config: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise QubitJointError(f"{path}:{exc.lineno}: invalid JSON: {exc.msg}") from None
    if not isinstance(data, dict):
        raise QubitJointError(f"{path}: config must be a JSON object")
    out = {}
    for key, value in data.items():
        k = key.replace("-", "_")
        if k not in _KEYS:
            raise QubitJointError(f"{path}: unknown key {key!r}")
        if k == "axes" and isinstance(value, list):
            value = ";".join(",".join(str(c) for c in row) for row in value)
        try:
            out[k] = _KEYS[k](value)
        except (TypeError, ValueError):
            raise QubitJointError(f"{path}: key {key!r}: cannot convert {value!r}") from None
    return out


def resolve_config(args: argparse.Namespace) -> RunConfig:
    merged = load_config_file(args.config) if args.config else {}
    for k in _KEYS:
        v = getattr(args, k, None)
        if v is not None:
            merged[k] = v
    return RunConfig(**merged)


def _emit(report: dict, cfg: RunConfig) -> None:
    text = dumps(report, cfg.format)
    if cfg.out:
        Path(cfg.out).write_text(text)
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
    except QubitJointError as exc:
        print(f"qubitjoint: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    commands = {
        "check-joint": cmd_check_joint,
        "optimal-instrument": cmd_optimal_instrument,
        "constants": cmd_constants,
        "reproduce": cmd_reproduce,
        "evaluate": lambda c: cmd_evaluate(c, args.instrument_file),
    }
    try:
        report = commands[args.command](cfg)
    except ReproductionMismatch as exc:
        _emit(exc.report, cfg)
        print("qubitjoint: reproduction mismatch", file=sys.stderr)
        return EXIT_MISMATCH
    except MaxIterations as exc:
        print(f"qubitjoint: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except QubitJointError as exc:
        print(f"qubitjoint: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    _emit(report, cfg)
    cert = report.get("results", {}).get("certificate")
    if cert is not None and not cert.get("satisfied", True):
        print("qubitjoint: solver failure: optimality certificate not satisfied", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
