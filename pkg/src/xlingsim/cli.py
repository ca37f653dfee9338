"""Command-line entry point.

Exit codes: 0 success, 1 runtime failure, 2 usage or validation error.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import __version__
from .analysis import AnalysisError, read_grid
from .config import ConfigError, load_config
from .corpus import CorpusError, load_corpus, load_manifest, read_manifest
from .evalproto import fingerprint_csv, fingerprint_svg
from .harness import MissingResource, evaluate, run_fingerprints
from .lexres import (
    ResourceError,
    estimate_length_stats,
    prune_table,
    save_length_stats,
    save_table,
    train_ibm1,
)
from .report import render_fingerprint_summary, render_reports, write_files

log = logging.getLogger("xlingsim")

EXIT_OK, EXIT_RUNTIME, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"{value} must be >= 1")
    return value


def _probability(text: str) -> float:
    value = float(text)
    if not 0.0 <= value < 1.0:
        raise argparse.ArgumentTypeError(f"{value} must be in [0, 1)")
    return value


def _global_flags(parser: argparse.ArgumentParser, suppress: bool) -> None:
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    parser.add_argument("--config", type=Path, default=d(None), help="run configuration (INI)")
    parser.add_argument("--seed", type=int, default=d(None), help="override the base seed")
    parser.add_argument("--jobs", type=_positive_int, default=d(1),
                        help="parallel configurations (default 1)")
    parser.add_argument("--out", type=Path, default=d(None), help="output directory or file")
    parser.add_argument("-v", "--verbose", action="count", default=d(0))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="xlingsim", description="Cross-language textual similarity benchmark")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    _global_flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train-ibm1", help="train an IBM Model 1 translation table")
    _global_flags(p, suppress=True)
    p.add_argument("--manifest", type=Path, action="append", default=[],
                   help="corpus manifest; repeat to concatenate corpora")
    p.add_argument("--src", type=Path, help="source-side unit file")
    p.add_argument("--tgt", type=Path, help="target-side unit file")
    p.add_argument("--src-lang", default="fr")
    p.add_argument("--tgt-lang", default="en")
    p.add_argument("--iterations", type=_positive_int, default=5)
    p.add_argument("--top-k", type=_positive_int, default=None)
    p.add_argument("--min-prob", type=_probability, default=0.0)
    p.add_argument("--length-stats", type=Path, default=None,
                   help="also write length statistics of the training corpus here")

    p = sub.add_parser("evaluate", help="run the distance-matrix protocol")
    _global_flags(p, suppress=True)

    p = sub.add_parser("fingerprint", help="run the match/mismatch experiment")
    _global_flags(p, suppress=True)

    p = sub.add_parser("correlate", help="correlation tables from a results CSV")
    _global_flags(p, suppress=True)
    p.add_argument("results", type=Path, nargs="+")
    p.add_argument("--macro", action="store_true",
                   help="unweighted mean over sub-corpora for overall F1")

    p = sub.add_parser("report", help="all report tables from results CSVs")
    _global_flags(p, suppress=True)
    p.add_argument("results", type=Path, nargs="+")
    p.add_argument("--macro", action="store_true")
    return parser


def _require_file(path: "Path | None", what: str) -> Path:
    if path is None:
        raise UsageError(f"{what} is required")
    if not path.is_file():
        raise UsageError(f"{what} not found: {path}")
    return path


def cmd_train_ibm1(args) -> int:
    corpora = []
    for m in args.manifest:
        _require_file(m, "manifest")
        read_manifest(m)
        corpora.append(load_manifest(m))
    if args.src or args.tgt:
        src = _require_file(args.src, "--src")
        tgt = _require_file(args.tgt, "--tgt")
        corpora.append(load_corpus(src, tgt, {"src_lang": args.src_lang,
                                              "tgt_lang": args.tgt_lang,
                                              "granularity": "sentence",
                                              "subcorpus": "train"}))
    if not corpora:
        raise UsageError("give --manifest or --src/--tgt")
    if args.out is None:
        raise UsageError("--out (table file) is required")
    langs = {(c.src_lang, c.tgt_lang) for c in corpora}
    if len(langs) != 1:
        raise UsageError(f"training corpora disagree on languages: {sorted(langs)}")
    (src_lang, tgt_lang), = langs
    pairs = [(p.source.tokens, p.target.tokens) for c in corpora for p in c.pairs]

    def report(it, ll):
        print(f"iteration {it} log-likelihood {ll:.6f}", flush=True)

    table = train_ibm1(pairs, args.iterations, src_lang=src_lang, tgt_lang=tgt_lang,
                       on_iteration=report)
    if args.top_k is not None or args.min_prob > 0:
        table = prune_table(table, args.top_k, args.min_prob)
    args.out.parent.mkdir(parents=True, exist_ok=True)
    save_table(table, args.out)
    print(f"wrote {len(table)} entries to {args.out}")
    if args.length_stats:
        stats = estimate_length_stats([p for c in corpora for p in c.pairs])
        save_length_stats(stats, args.length_stats)
        print(f"wrote length stats to {args.length_stats}")
    return EXIT_OK


def _config(args):
    if args.config is None:
        raise UsageError("--config is required")
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    out = args.out if args.out is not None else cfg.out
    if not out.is_absolute() and args.out is None:
        out = cfg.path.parent / out
    return cfg, out


def cmd_evaluate(args) -> int:
    cfg, out = _config(args)
    path, done, skipped = evaluate(cfg, out, args.jobs)
    print(f"{done} configurations evaluated, {skipped} skipped -> {path}")
    if done == 0 and skipped > 0:
        log.error("every configuration was skipped")
        return EXIT_RUNTIME
    return EXIT_OK


def cmd_fingerprint(args) -> int:
    cfg, out = _config(args)
    if cfg.fingerprint is None:
        raise UsageError("config has no [fingerprint] section")
    fps = run_fingerprints(cfg, cfg.seed)
    files = {}
    for fp, method in zip(fps, cfg.fingerprint.methods or [m.method for m in cfg.methods]):
        files[f"fingerprint_{method}.csv"] = fingerprint_csv(fp)
        files[f"fingerprint_{method}.svg"] = fingerprint_svg(fp)
    files.update(render_fingerprint_summary(fps))
    for path in write_files(files, out):
        print(path)
    return EXIT_OK


def cmd_correlate(args) -> int:
    for p in args.results:
        _require_file(p, "results CSV")
    grid = read_grid(args.results, weighted=not args.macro)
    files = {k: v for k, v in render_reports(grid).items() if k.startswith("correlation_")}
    if not files:
        raise AnalysisError("no correlation could be computed: need two language pairs "
                            "or both chunk and sentence results")
    for path in write_files(files, args.out or Path("reports")):
        print(path)
    return EXIT_OK


def cmd_report(args) -> int:
    for p in args.results:
        _require_file(p, "results CSV")
    grid = read_grid(args.results, weighted=not args.macro)
    for path in write_files(render_reports(grid), args.out or Path("reports")):
        print(path)
    return EXIT_OK


COMMANDS = {
    "train-ibm1": cmd_train_ibm1,
    "evaluate": cmd_evaluate,
    "fingerprint": cmd_fingerprint,
    "correlate": cmd_correlate,
    "report": cmd_report,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return COMMANDS[args.command](args)
    except (UsageError, ConfigError, CorpusError, ResourceError, AnalysisError,
            FileNotFoundError) as exc:
        print(f"xlingsim {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (MissingResource, OSError, RuntimeError, ValueError) as exc:
        print(f"xlingsim {args.command}: failed: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
