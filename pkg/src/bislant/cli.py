"""Command-line interface: ``bislant {inspect,classify,verify,report}``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import runner
from .catalog import BUILTINS, DEFAULT_SAMPLES, DEFAULT_SEED
from .errors import BislantError, SchemaError
from .report import CheckResult, VerificationReport, dumps, format_table
from .tensor_engine import ENGINES

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _source(p: argparse.ArgumentParser) -> None:
    g = p.add_mutually_exclusive_group()
    g.add_argument("--scenario", help=f"builtin scenario id ({', '.join(BUILTINS)})")
    g.add_argument("--file", help="scenario file (JSON)")
    p.add_argument("--engine", choices=ENGINES, help="override the differentiation engine")
    p.add_argument("--format", choices=("text", "json"), default="text")


def _sampling(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=None, help=f"sampling seed (default: scenario seed, {DEFAULT_SEED})")
    p.add_argument("--samples", type=int, default=None,
                   help=f"random points besides the anchor (default: scenario value, {DEFAULT_SAMPLES})")


def _suites(values) -> list[str]:
    out = []
    for v in values or ["all"]:
        out += [x for x in v.split(",") if x]
    return out


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="bislant", description="Numerical checks for bi-slant Riemannian submersions.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("inspect", help="geometric quantities at one point")
    _source(p)
    p.add_argument("--point", default="default", help="comma-separated coordinates or 'default' (the anchor)")

    p = sub.add_parser("classify", help="slant classification and angles")
    _source(p)
    _sampling(p)

    for name, text in (("verify", "run verification suites"), ("report", "full report, or re-render a saved one")):
        p = sub.add_parser(name, help=text)
        _source(p)
        _sampling(p)
        p.add_argument("--suite", action="append",
                       help="suite id (repeatable or comma-separated; default all): "
                            + ", ".join(("all",) + runner.SUITE_ORDER))
        p.add_argument("--tol", type=float, default=None, help="tolerance override for every suite")
        if name == "report":
            p.add_argument("--input", help="JSON report written by 'verify --format json'")
    return ap


def _config(args) -> runner.RunConfig:
    if args.scenario is None and args.file is None:
        raise SchemaError("give --scenario or --file")
    return runner.RunConfig(scenario=args.scenario, file=args.file, suites=_suites(getattr(args, "suite", None)),
                            seed=getattr(args, "seed", None), samples=getattr(args, "samples", None),
                            engine=args.engine, tol=getattr(args, "tol", None), format=args.format,
                            point=getattr(args, "point", None))


def cmd_inspect(args, out) -> int:
    cfg = _config(args)
    sc, _, _ = runner.prepare(runner.RunConfig(scenario=cfg.scenario, file=cfg.file, engine=cfg.engine, samples=0))
    rows = runner.inspect_point(sc, runner.parse_point(cfg.point, sc))
    if cfg.format == "json":
        out.write(dumps({"scenario": sc.id, "quantities": dict(rows)}) + "\n")
    else:
        out.write(f"scenario: {sc.id}\n" + runner.format_rows(rows))
    return EXIT_OK


def cmd_classify(args, out) -> int:
    cfg = _config(args)
    sc, samples, seed = runner.prepare(cfg)
    summary = runner.classify_scenario(sc, samples)
    if cfg.format == "json":
        out.write(dumps({"scenario": sc.id, "seed": seed, **summary}) + "\n")
        return EXIT_OK
    rows = [("classification", summary["classification"]), ("m1", summary["m1"]), ("m2", summary["m2"]),
            ("theta1", summary["theta1"] if summary["theta1"] is not None else "-"),
            ("theta2", summary["theta2"] if summary["theta2"] is not None else "-"),
            ("constancy_residual", summary["constancy_residual"])]
    if "note" in summary:
        rows.append(("note", summary["note"]))
    out.write(f"scenario: {sc.id}\n" + runner.format_rows(rows))
    return EXIT_OK


def cmd_verify(args, out) -> int:
    result = runner.run(_config(args))
    out.write(runner.emit(result, args.format))
    return result.exit_status


def _load_report(path: str) -> tuple[list[VerificationReport], bool]:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        reps = []
        for r in doc["reports"]:
            rep = VerificationReport(r["scenario"], r["suite"], engine=r["engine"], tolerance=r["tolerance"],
                                     seed=r["seed"], premise=r["premise"])
            for c in r["results"]:
                rep.add(CheckResult(c["name"], c["lhs"], c["rhs"], c["residual"], c["tolerance"], c["status"],
                                    c["informational"], c["sample"], c["context"], c["note"]))
            reps.append(rep)
        return reps, bool(doc["ok"])
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise SchemaError(f"cannot read report {path}: {exc}") from None


def cmd_report(args, out) -> int:
    if args.input is None:
        return cmd_verify(args, out)
    reps, ok = _load_report(args.input)
    if args.format == "json":
        out.write(Path(args.input).read_text(encoding="utf-8"))
    else:
        out.write(format_table(reps) + "\n")
    return EXIT_OK if ok else EXIT_FAIL


COMMANDS = {"inspect": cmd_inspect, "classify": cmd_classify, "verify": cmd_verify, "report": cmd_report}


def main(argv=None, out=None) -> int:
    out = sys.stdout if out is None else out
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args, out)
    except BislantError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
