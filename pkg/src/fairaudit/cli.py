"""Command-line entry point: ``fairaudit run|compare|correlate|audit|report``."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from fairaudit import report as rp
from fairaudit import tables
from fairaudit.data import load_schema
from fairaudit.errors import FairAuditError
from fairaudit.harness import RunResults, load_config, run_experiment
from fairaudit.scores import audit

log = logging.getLogger("fairaudit")

EXIT_OK, EXIT_USER, EXIT_INTERNAL = 0, 1, 2


def _write_report(doc: dict, out: Path, formats=("json", "markdown"), stem: str = "report") -> None:
    for f in formats:
        path = rp.emit_report(doc, f, out, stem)
        log.info("wrote %s", path)


def _results_with_method(ref: str):
    """``DIR`` or ``DIR#method``; without a method, the first non-base one."""
    path, _, method = ref.partition("#")
    res = RunResults.load(path)
    if not method:
        others = [m for m in res.methods if m != "base"]
        if not others:
            raise FairAuditError(f"{path}: no non-baseline method to compare")
        method = others[0]
    return res, method


def cmd_run(args) -> int:
    cfg = load_config(args.config, runs=args.runs, seed=args.seed, surface=args.surface, jobs=args.jobs)
    res = run_experiment(cfg)
    out = Path(args.out)
    res.save(out)
    _write_report(rp.build_report([res]), out)
    print(f"{res.name}: {len(res.runs)} runs x {len(res.methods)} methods -> {out}")
    for line in res.flags():
        print(f"  {line}")
    return EXIT_OK


def cmd_compare(args) -> int:
    a = [_results_with_method(x) for x in args.a]
    b = [_results_with_method(x) for x in args.b]
    doc = rp.build_comparison(a, b)
    _write_report(doc, Path(args.out), stem="comparison")
    print(rp.comparison_markdown(doc))
    return EXIT_OK


def cmd_correlate(args) -> int:
    results = [RunResults.load(p) for p in args.results]
    doc = {**rp.build_report(results), "correlation": tables.correlation_matrix(results)}
    _write_report(doc, Path(args.out))
    return EXIT_OK


def cmd_audit(args) -> int:
    schema = load_schema(args.schema)
    if args.task:
        schema = schema.restrict(args.task)
    res = audit(args.scores, schema, method=args.method, base_path=args.base)
    out = Path(args.out)
    res.save(out)
    _write_report(rp.build_report([res]), out)
    print(f"audited {len(res.runs)} run(s) from {args.scores} -> {out}")
    return EXIT_OK


def cmd_report(args) -> int:
    doc = rp.build_report([RunResults.load(p) for p in args.results])
    if args.out:
        rp.emit_report(doc, args.format, args.out)
    else:
        sys.stdout.write(rp.render(doc, args.format))
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    """Usage errors are configuration errors: exit 1, not argparse's 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USER, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="fairaudit", description="Group-level fairness audits of bias mitigation.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment config")
    run.add_argument("--config", required=True)
    run.add_argument("--out", required=True)
    run.add_argument("--runs", type=int)
    run.add_argument("--seed", type=int)
    run.add_argument("--surface", choices=("test", "train"))
    run.add_argument("--jobs", type=int, help="worker processes (output is identical for any value)")
    run.set_defaults(func=cmd_run)

    cmp_ = sub.add_parser("compare", help="win-tie-loss of candidate results against reference results")
    cmp_.add_argument("--a", nargs="+", required=True, metavar="DIR[#METHOD]")
    cmp_.add_argument("--b", nargs="+", required=True, metavar="DIR[#METHOD]")
    cmp_.add_argument("--out", required=True)
    cmp_.set_defaults(func=cmd_compare)

    cor = sub.add_parser("correlate", help="Spearman matrix of metric changes across result dirs")
    cor.add_argument("--results", nargs="+", required=True)
    cor.add_argument("--out", required=True)
    cor.set_defaults(func=cmd_correlate)

    aud = sub.add_parser("audit", help="audit an external score file")
    aud.add_argument("--scores", required=True)
    aud.add_argument("--schema", required=True)
    aud.add_argument("--out", required=True)
    aud.add_argument("--task", nargs="+", help="subset of sensitive attributes")
    aud.add_argument("--base", help="baseline score file for the same rows")
    aud.add_argument("--method", default="scores")
    aud.set_defaults(func=cmd_audit)

    rep = sub.add_parser("report", help="render tables from result dirs")
    rep.add_argument("--results", nargs="+", required=True)
    rep.add_argument("--format", choices=rp.FORMATS, default="markdown")
    rep.add_argument("--out", help="directory (default: stdout)")
    rep.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (FairAuditError, FileNotFoundError, PermissionError, IsADirectoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USER
    except Exception as exc:  # noqa: BLE001
        log.exception("internal failure")
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
