"""Wire corpora, resources and scorers into evaluation runs."""
from __future__ import annotations

import csv
import io
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

from .config import MethodConfig, RunConfig
from .corpus import AlignedCorpus, AlignedPair, load_manifest
from .evalproto import EvalResult, Fingerprint, fingerprint, run_folds
from .lexres import BilingualLexicon, load_lexicon, load_length_stats, load_table
from .methods import (
    METHOD_LABELS,
    ASAScorer,
    C3GScorer,
    CTSScorer,
    ESAScorer,
    LengthModelScorer,
    OracleScorer,
    RandomScorer,
    Scorer,
    TMAScorer,
    build_concept_index,
    build_idf,
)

log = logging.getLogger(__name__)

RESULT_COLUMNS = ("method", "subcorpus", "src", "tgt", "granularity", "threshold",
                  "precision", "recall", "f1_mean", "f1_ci", "n_pairs")


class MissingResource(LookupError):
    """A method lacks the resource it needs for a language direction."""


@dataclass(frozen=True)
class Task:
    method: str
    corpus: AlignedCorpus

    @property
    def key(self) -> tuple:
        c = self.corpus
        return (METHOD_LABELS.get(self.method, self.method), c.subcorpus,
                c.src_lang, c.tgt_lang, c.gran.value)


class ResourceCache:
    """Loads every resource file once per run."""

    def __init__(self):
        self.lexicon = lru_cache(maxsize=None)(self._lexicon)
        self.table = lru_cache(maxsize=None)(load_table)
        self.length_stats = lru_cache(maxsize=None)(load_length_stats)
        self.concepts = lru_cache(maxsize=None)(load_manifest)

    @staticmethod
    def _lexicon(path: Path, src: str, tgt: str) -> BilingualLexicon:
        return load_lexicon(path, src, tgt)


def _lexicon_for(mc: MethodConfig, cache: ResourceCache, src: str, tgt: str):
    p = mc.resource("lexicon", src, tgt)
    if p is not None:
        return cache.lexicon(p, src, tgt)
    p = mc.resource("lexicon", tgt, src)
    if p is not None:
        return cache.lexicon(p, tgt, src).inverted()
    return None


def make_scorer(mc: MethodConfig, corpus: AlignedCorpus, cfg: RunConfig,
                cache: ResourceCache) -> Scorer:
    """Build the scorer for one method on one corpus, or raise MissingResource."""
    src, tgt = corpus.src_lang, corpus.tgt_lang
    opts = mc.options
    if mc.method == "c3g":
        units = corpus.sources + corpus.targets
        return C3GScorer(build_idf(units, scope=f"{corpus.subcorpus}/{src}-{tgt}"))
    if mc.method == "cts":
        lex = _lexicon_for(mc, cache, src, tgt)
        if lex is None:
            raise MissingResource(f"no lexicon for {src}-{tgt}")
        return CTSScorer(lex)
    if mc.method == "tma":
        lex = _lexicon_for(mc, cache, src, tgt)
        if lex is not None:
            return TMAScorer(lex)
        p = mc.resource("table", src, tgt)
        if p is None:
            raise MissingResource(f"no lexicon or table for {src}-{tgt}")
        top_k = int(opts["top_k"]) if "top_k" in opts else None
        return TMAScorer.from_table(cache.table(p, src, tgt), top_k)
    if mc.method == "asa":
        direction = opts.get("direction", "target_to_source")
        t_src, t_tgt = (tgt, src) if direction == "target_to_source" else (src, tgt)
        tp = mc.resource("table", t_src, t_tgt)
        lp = mc.resource("length_stats", tgt, src)
        if tp is None or lp is None:
            raise MissingResource(f"need table.{t_src}-{t_tgt} and length_stats.{tgt}-{src}")
        return ASAScorer(cache.table(tp, t_src, t_tgt), cache.length_stats(lp), direction)
    if mc.method == "esa":
        p = mc.resource("concepts", src, tgt) or mc.resource("concepts", tgt, src)
        if p is None:
            raise MissingResource(f"no concept collection for {src}-{tgt}")
        exclude = {u.raw for u in corpus.sources} | {u.raw for u in corpus.targets}
        return ESAScorer(build_concept_index(cache.concepts(p), exclude))
    if mc.method == "len":
        p = mc.resource("length_stats", src, tgt)
        if p is None:
            raise MissingResource(f"no length_stats.{src}-{tgt}")
        return LengthModelScorer(cache.length_stats(p))
    if mc.method == "rand":
        return RandomScorer(int(opts.get("seed", cfg.seed)))
    if mc.method == "oracle":
        return OracleScorer()
    raise MissingResource(f"unknown method {mc.method!r}")


def load_corpora(cfg: RunConfig) -> dict[str, list[AlignedCorpus]]:
    """Corpus name -> evaluated corpora (the reversed direction included on request)."""
    out = {}
    for name, manifest in cfg.corpora.items():
        corpus = load_manifest(manifest)
        if corpus.dropped:
            log.info("%s: dropped %d blank pairs", name, corpus.dropped)
        variants = [corpus, corpus.reversed()] if cfg.both_directions else [corpus]
        keep = []
        for c in variants:
            if cfg.granularities and c.gran.value not in cfg.granularities:
                continue
            if cfg.pairs and f"{c.src_lang}-{c.tgt_lang}" not in cfg.pairs:
                continue
            keep.append(c)
        out[name] = keep
    return out


def result_row(method_label: str, corpus: AlignedCorpus, res: EvalResult) -> list:
    return [method_label, corpus.subcorpus, corpus.src_lang, corpus.tgt_lang, corpus.gran.value,
            f"{res.threshold:.6f}", f"{res.precision:.6f}", f"{res.recall:.6f}",
            f"{res.mean_f1:.6f}", f"{res.ci_half_width:.6f}", len(corpus)]


def _existing_keys(path: Path) -> set:
    if not path.is_file():
        return set()
    with open(path, newline="", encoding="utf-8") as fh:
        return {(r["method"], r["subcorpus"], r["src"], r["tgt"], r["granularity"])
                for r in csv.DictReader(fh)}


def evaluate(cfg: RunConfig, out_dir: Path, jobs: int = 1) -> tuple[Path, int, int]:
    """Run every (method x corpus) configuration; returns (csv, done, skipped).

    Rows already present in the results file are not recomputed.  New rows
    are appended in configuration order whatever the job count.
    """
    if cfg.m == 1:
        log.warning("m=1: every row holds only its relevant cell; the protocol is degenerate")
    out_dir.mkdir(parents=True, exist_ok=True)
    results_csv = out_dir / "results.csv"
    done_keys = _existing_keys(results_csv)
    cache = ResourceCache()
    corpora = load_corpora(cfg)

    tasks, skipped = [], 0
    for mc in cfg.methods:
        for name, variants in corpora.items():
            for corpus in variants:
                task = Task(mc.method, corpus)
                if task.key in done_keys:
                    log.info("already evaluated: %s", "/".join(task.key))
                    continue
                try:
                    scorer = make_scorer(mc, corpus, cfg, cache)
                except MissingResource as exc:
                    log.warning("skipping %s on %s %s-%s: %s", mc.method, name,
                                corpus.src_lang, corpus.tgt_lang, exc)
                    skipped += 1
                    continue
                tasks.append((task, scorer))

    def run(item):
        task, scorer = item
        log.info("evaluating %s", "/".join(task.key))
        return run_folds(task.corpus, scorer, cfg.m, cfg.folds, cfg.seed)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(run, tasks))
    else:
        results = [run(t) for t in tasks]

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if not results_csv.is_file():
        w.writerow(RESULT_COLUMNS)
    for (task, scorer), res in zip(tasks, results):
        w.writerow(result_row(scorer.label, task.corpus, res))
    with open(results_csv, "a", encoding="utf-8", newline="") as fh:
        fh.write(buf.getvalue())
    return results_csv, len(tasks), skipped


def run_fingerprints(cfg: RunConfig, seed: int) -> list[Fingerprint]:
    fpc = cfg.fingerprint
    src, tgt = fpc.pair.split("-")
    cache = ResourceCache()
    corpora = []
    for name, manifest in cfg.corpora.items():
        if fpc.corpora and name not in fpc.corpora:
            continue
        c = load_manifest(manifest)
        if c.gran.value != "sentence":
            continue
        if (c.src_lang, c.tgt_lang) == (tgt, src):
            c = c.reversed()
        if (c.src_lang, c.tgt_lang) == (src, tgt):
            corpora.append(c)
    if not corpora:
        raise MissingResource(f"no sentence-level corpora for {fpc.pair}")
    methods = fpc.methods or [mc.method for mc in cfg.methods]
    out = []
    for m in methods:
        mc = cfg.method(m)
        merged = _merge_for_resources(corpora)
        scorer = make_scorer(mc, merged, cfg, cache)
        out.append(fingerprint(corpora, scorer, fpc.pairs_per_corpus, fpc.folds, seed))
    return out


def _merge_for_resources(corpora: list[AlignedCorpus]) -> AlignedCorpus:
    """One corpus spanning all sub-corpora, for corpus-scoped resources (idf, exclusions)."""
    pairs = tuple(p for c in corpora for p in c.pairs)
    first = corpora[0]
    relabeled = tuple(AlignedPair(p.id, p.source, p.target, "all") for p in pairs)
    return AlignedCorpus(relabeled, first.src_lang, first.tgt_lang, first.gran, "all")
