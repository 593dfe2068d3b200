"""Command-line driver: ``nclp <command> [--p P] [--seed S] [--trials N] [--tol T] [--in FILE] [--out FILE]``.

The JSON report goes to stdout and a one-line-per-check summary to stderr.
The exit code is 0 exactly when every check passed.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass

from . import __version__
from .algebra import DEFAULT_TOL
from .campaigns import CAMPAIGNS, CheckRecord, Settings
from .errors import NclpError, SchemaError
from .isometry import (
    TypicalTriple,
    construct_typical,
    construct_yeadon,
    decompose_isometry,
    verify_isometry,
    yeadon_to_typical,
)
from .serialize import (
    linear_map_from_json,
    linear_map_to_json,
    loads,
    triple_from_json,
    typical_to_json,
    yeadon_to_json,
)

SCHEMA = 1
COMMANDS = list(CAMPAIGNS) + ["suite"]


@dataclass
class RunConfig:
    command: str
    p: float | None = None
    seed: int = 0
    trials: int = 100
    tol: float = DEFAULT_TOL
    input: str | None = None
    output: str | None = None

    def validate(self):
        if self.p is not None and self.p < 1:
            raise ValueError("--p must be at least 1")
        if self.trials < 1:
            raise ValueError("--trials must be positive")
        if not self.tol > 0:
            raise ValueError("--tol must be positive")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("--seed must be a 64-bit unsigned integer")

    def echo(self) -> dict:
        return {"command": self.command, "p": self.p, "seed": self.seed, "trials": self.trials,
                "tol": self.tol, "in": self.input, "out": self.output}


def default_tol() -> float:
    env = os.environ.get("NCLP_TOL")
    return float(env) if env else DEFAULT_TOL


def _read_input(cfg: RunConfig):
    try:
        with open(cfg.input) as fh:
            return loads(fh.read())
    except OSError as exc:
        raise SchemaError("$", f"cannot read {cfg.input}: {exc.strerror}") from None


def _decompose_file(cfg: RunConfig):
    T = linear_map_from_json(_read_input(cfg))
    if cfg.p is not None and cfg.p != T.p:
        raise SchemaError("$.p", f"file has p = {T.p} but --p {cfg.p} was given")
    y = decompose_isometry(T)
    t = yeadon_to_typical(y)
    res = construct_yeadon(y).distance(T)
    check = CheckRecord("decompose.reconstruct", res <= cfg.tol, res)
    return [check], {"yeadon": yeadon_to_json(y), "typical": typical_to_json(t)}


def _construct_file(cfg: RunConfig):
    data = triple_from_json(_read_input(cfg))
    T = construct_typical(data) if isinstance(data, TypicalTriple) else construct_yeadon(data)
    dev = verify_isometry(T, trials=cfg.trials, seed=cfg.seed).max_rel_deviation
    return [CheckRecord("construct.isometry", dev <= cfg.tol, dev)], linear_map_to_json(T)


def run(cfg: RunConfig) -> tuple[dict, object]:
    """Execute ``cfg``; returns the report and an optional artifact for ``--out``."""
    cfg.validate()
    s = Settings(seed=cfg.seed, trials=cfg.trials, tol=cfg.tol, p=cfg.p)
    artifact = None
    checks: list[CheckRecord] = []
    try:
        if cfg.command == "decompose" and cfg.input:
            checks, artifact = _decompose_file(cfg)
        elif cfg.command == "construct" and cfg.input:
            checks, artifact = _construct_file(cfg)
        elif cfg.command == "suite":
            for fn in CAMPAIGNS.values():
                checks += fn(s)
        else:
            checks = CAMPAIGNS[cfg.command](s)
    except SchemaError as exc:
        checks.append(CheckRecord("input", False, float("inf"), {"error": str(exc), "path": exc.path}))
    except NclpError as exc:
        checks.append(CheckRecord(cfg.command, False, float("inf"), {"error": f"{type(exc).__name__}: {exc}"}))
    report = {
        "schema": SCHEMA,
        "version": __version__,
        "command": cfg.command,
        "config": cfg.echo(),
        "checks": [c.to_json() for c in checks],
        "passed": all(c.passed for c in checks) and bool(checks),
    }
    if artifact is not None:
        report["output"] = artifact
    return report, artifact


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--p", type=float, default=None, help="exponent (default: the standard set per check)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--trials", type=int, default=100,
                        help="trials for cheap checks; pipeline checks run ceil(trials/10)")
    common.add_argument("--tol", type=float, default=None, help="tolerance (default: $NCLP_TOL or 1e-9)")
    common.add_argument("--in", dest="input", default=None, help="input JSON for decompose/construct")
    common.add_argument("--out", dest="output", default=None,
                        help="file for the produced triple or map; for other commands a copy of the report")
    parser = argparse.ArgumentParser(prog="nclp", description="Finite-dimensional checks for L^p isometries.")
    parser.add_argument("--version", action="version", version=f"nclp {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    cfg = RunConfig(args.command, args.p, args.seed, args.trials,
                    default_tol() if args.tol is None else args.tol, args.input, args.output)
    try:
        report, artifact = run(cfg)
    except ValueError as exc:
        print(f"nclp: {exc}", file=sys.stderr)
        return 2
    text = json.dumps(report, indent=2)
    print(text)
    if cfg.output:
        with open(cfg.output, "w") as fh:
            fh.write(json.dumps(artifact, indent=2) if artifact is not None else text)
            fh.write("\n")
    for c in report["checks"]:
        flag = "PASS" if c["passed"] else "FAIL"
        print(f"{flag}  {c['name']:<40} max_residual={c['max_residual']}", file=sys.stderr)
    print(f"{'all checks passed' if report['passed'] else 'some checks FAILED'}", file=sys.stderr)
    return 0 if report["passed"] else 1


if __name__ == "__main__":
    sys.exit(main())
