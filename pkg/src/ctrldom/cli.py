"""Command-line entry point.

Exit codes: 0 exact result, 2 approximate result (weak intervals,
exhausted split budget or unknown verdicts), 1 error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .analysis import (ALGORITHMS, DEFAULT_WEIGHTS, RunConfig, analyze, compare,
                       load_fixture_input, load_smt2_input)
from .control import DEFAULT_SPLIT_LIMIT, SnsConfig
from .formula import FormulaError
from .metrics import (Bands, ScoredDomain, band_for, get_weight,
                      score_cfh, score_data, score_oob)
from .newsome import NewsomeConfig
from .report import domain_from_dict, dumps, emit_plot_data
from .solver.base import DEFAULT_TIMEOUT_MS, DEFAULT_ENUM_BUDGET, SolverConfig, SolverError

EXIT_OK, EXIT_ERROR, EXIT_APPROX = 0, 1, 2

log = logging.getLogger("ctrldom")


class UsageError(Exception):
    pass


def _kv(text: str) -> tuple[str, int]:
    name, sep, value = text.partition("=")
    if not sep:
        raise argparse.ArgumentTypeError(f"expected name=value, got {text!r}")
    try:
        return name, int(value, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad integer in {text!r}") from None


def _add_input_args(p: argparse.ArgumentParser) -> None:
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--smt2", metavar="FILE", help="SMT-LIB2 file with a ctrl-target annotation")
    src.add_argument("--fixture", metavar="NAME", help="built-in toy fixture (see `fixtures`)")
    p.add_argument("--input", dest="inputs", type=_kv, action="append", default=[],
                   metavar="NAME=VALUE", help="override a fixture's triggering input")
    p.add_argument("--sink", help="analyze only this fixture sink")


def _add_run_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--split-limit", type=int, default=DEFAULT_SPLIT_LIMIT)
    p.add_argument("--solver", choices=("internal", "external"), default="internal")
    p.add_argument("--solver-cmd", help="solver command line (default: $CTRL_SOLVER_CMD or z3)")
    p.add_argument("--timeout", type=int, default=DEFAULT_TIMEOUT_MS, metavar="MS",
                   help="per-query timeout in milliseconds")
    p.add_argument("--enum-budget", type=int, default=DEFAULT_ENUM_BUDGET, metavar="BITS",
                   help="largest input size the internal solver enumerates")
    p.add_argument("--optimization", choices=("native", "binary-search"), default="native")
    p.add_argument("--seed", type=int, default=0, help="seed for the sampling baseline")
    p.add_argument("--samples", type=int, default=30, help="samples per interval (newsome)")
    p.add_argument("--weights", default=",".join(DEFAULT_WEIGHTS),
                   help="comma-separated weight names for the wQC scores")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ctrldom",
                                     description="Domain-of-control extraction and scoring.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="extract the domain of control of a target")
    _add_input_args(p)
    p.add_argument("--algo", choices=ALGORITHMS, default="sns")
    _add_run_args(p)
    p.add_argument("--out", metavar="PATH", help="write the JSON report here (default: stdout)")
    p.add_argument("--csv", metavar="PATH", help="also write per-interval plot data")

    p = sub.add_parser("score", help="score domains with a recipe")
    p.add_argument("domains", nargs="*", metavar="DOMAIN_JSON",
                   help="report or domain JSON files (size domain first for OOB)")
    p.add_argument("--recipe", required=True, choices=("oob-write", "oob-read", "cfh", "data"))
    p.add_argument("--weight", default="log", help="weight name, distance:<base>:<bound>, or JSON")
    p.add_argument("--size", metavar="DOMAIN_JSON", help="OOB size domain")
    p.add_argument("--offset", metavar="DOMAIN_JSON", help="OOB offset domain")
    p.add_argument("--target", help="target label to pick from a multi-target report")
    p.add_argument("--method", choices=("constrained", "interval", "exact"),
                   default="constrained")
    p.add_argument("--bands", metavar="LOW,MEDIUM", help="override band cutoffs")
    p.add_argument("--out", metavar="PATH")

    p = sub.add_parser("compare", help="run several algorithms on one input")
    _add_input_args(p)
    p.add_argument("--algos", default="sns,snsfb,newsome,brute")
    _add_run_args(p)
    p.add_argument("--out", metavar="PATH")

    sub.add_parser("fixtures", help="list the built-in fixtures")
    return parser


def _run_config(args, algo: str) -> RunConfig:
    solver = SolverConfig(backend=args.solver, command=args.solver_cmd, timeout_ms=args.timeout,
                          enum_budget=args.enum_budget, optimization=args.optimization)
    weights = tuple(w for w in args.weights.split(",") if w)
    for w in weights:
        get_weight(w)  # fail early on typos
    return RunConfig(algo, SnsConfig(args.split_limit, algo == "snsfb", solver),
                     NewsomeConfig(samples_per_interval=args.samples, rng_seed=args.seed),
                     weights)


def _load(args):
    if args.smt2:
        if args.inputs or args.sink:
            raise UsageError("--input and --sink only apply to fixtures")
        return load_smt2_input(args.smt2)
    return load_fixture_input(args.fixture, dict(args.inputs), args.sink)


def _write(path: str | None, text: str) -> None:
    if path:
        Path(path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def cmd_analyze(args) -> int:
    loaded = _load(args)
    report = analyze(loaded, _run_config(args, args.algo))
    data = report.to_dict()
    _write(args.out, dumps(data))
    if args.csv:
        Path(args.csv).write_text(emit_plot_data(data), encoding="utf-8")
    for t in report.targets:
        dom = t.domain
        shape = "" if dom is None else " ".join(
            f"[{i.lo},{i.hi}]{'S' if i.strong else 'W'}" for i in dom.intervals[:8])
        if dom is not None and len(dom.intervals) > 8:
            shape += f" ... ({len(dom.intervals)} intervals)"
        log.info("%s: exact=%s wc=%s sc=%s %s", t.label, t.exact, t.wc, t.sc, shape)
    return EXIT_OK if report.exact else EXIT_APPROX


def _load_domain(path: str, label: str | None) -> ScoredDomain:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if "targets" in data:
        targets = [t for t in data["targets"] if t.get("domain")]
        if label is not None:
            targets = [t for t in targets if t["label"] == label]
        if len(targets) != 1:
            raise UsageError(f"{path}: expected one target with a domain, found {len(targets)}"
                             + ("" if label else "; use --target"))
        t = targets[0]
        return ScoredDomain(domain_from_dict(t["domain"]), int(t.get("offset", 0)), t["label"])
    offset = int(data.get("offset", 0))
    dom = data.get("domain", data)
    return ScoredDomain(domain_from_dict(dom), offset, data.get("label", Path(path).stem))


def cmd_score(args) -> int:
    weight = get_weight(args.weight)
    bands = None
    if args.bands:
        lo, mid = (float(x) for x in args.bands.split(","))
        bands = {args.recipe: Bands(lo, mid)}
    components: dict[str, dict] = {}
    if args.recipe in ("oob-write", "oob-read"):
        paths = list(args.domains)
        size_path = args.size or (paths.pop(0) if paths and not args.offset else None)
        if paths:
            raise UsageError("OOB recipes take at most one size and one offset domain")
        size = _load_domain(size_path, args.target) if size_path else None
        offset = _load_domain(args.offset, args.target) if args.offset else None
        if size is None and offset is None:
            raise UsageError("OOB recipes need --size and/or --offset")
        score = score_oob(offset, size, weight, method=args.method)
        for role, d in (("size", size), ("offset", offset)):
            components[role] = None if d is None else {"label": d.label, "offset": str(d.offset)}
    elif args.recipe == "cfh":
        if len(args.domains) != 1:
            raise UsageError("cfh takes exactly one pointer domain")
        d = _load_domain(args.domains[0], args.target)
        score = score_cfh(d, method=args.method)
        components["pointer"] = {"label": d.label}
    else:
        if not args.domains:
            raise UsageError("data takes one to eight byte domains")
        ds = [_load_domain(p, args.target) for p in args.domains]
        score = score_data([d.domain for d in ds])
        components["bytes"] = [d.label for d in ds]
    result = {"recipe": args.recipe, "weight": weight.describe(), "method": args.method,
              "score": score, "band": band_for(args.recipe, score, bands),
              "components": components}
    _write(args.out, dumps(result))
    return EXIT_OK


def cmd_compare(args) -> int:
    loaded = _load(args)
    algos = [a for a in args.algos.split(",") if a]
    bad = [a for a in algos if a not in ALGORITHMS]
    if bad:
        raise UsageError(f"unknown algorithm(s): {', '.join(bad)}")
    result = compare(loaded, algos, _run_config(args, "sns"))
    if args.out:
        Path(args.out).write_text(dumps(result), encoding="utf-8")
    cols = ("target", "algorithm", "exact", "count", "intervals", "vs_oracle", "sound", "queries",
            "wall_time_s")
    print("  ".join(cols))
    for row in result["rows"]:
        print("  ".join(str(row.get(c, "-")) for c in cols))
    return EXIT_OK


def cmd_fixtures(args) -> int:
    from .toy import builtin_fixtures

    for name, fx in sorted(builtin_fixtures().items()):
        inputs = " ".join(f"{k}={v}" for k, v in fx.inputs.items())
        print(f"{name:16s} {fx.input_bits:4d} input bits  {fx.source_file}  {inputs}")
    return EXIT_OK


COMMANDS = {"analyze": cmd_analyze, "score": cmd_score, "compare": cmd_compare,
            "fixtures": cmd_fixtures}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return COMMANDS[args.command](args)
    except (OSError, UsageError, LookupError, ValueError, FormulaError, SolverError) as exc:
        print(f"ctrldom: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
