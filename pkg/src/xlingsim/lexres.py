"""Lexical resources: bilingual lexicons, IBM Model 1 tables, length statistics.

File formats (UTF-8, ``#`` comment lines ignored):

* lexicon      ``source_word<TAB>target_word``
* table        ``source_word<TAB>target_word<TAB>probability``
* length stats ``mu=<float>`` and ``sigma=<float>`` lines
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Mapping

import numpy as np

from . import _kernels
from .corpus import AlignedCorpus, CorpusError

log = logging.getLogger(__name__)

NULL = "<NULL>"
SIGMA_FLOOR = 1e-6
DEFAULT_ITERATIONS = 5


class ResourceError(ValueError):
    """Malformed or invalid resource file."""


# -- bilingual lexicon ---------------------------------------------------------

@dataclass(frozen=True)
class BilingualLexicon:
    entries: Mapping[str, frozenset]
    src_lang: str
    tgt_lang: str

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[str, str]], src_lang: str,
                   tgt_lang: str) -> "BilingualLexicon":
        entries: dict[str, set] = {}
        for s, t in pairs:
            s, t = s.strip().lower(), t.strip().lower()
            if s and t:
                entries.setdefault(s, set()).add(t)
        return cls({k: frozenset(v) for k, v in entries.items()}, src_lang, tgt_lang)

    @classmethod
    def from_table(cls, table: "TranslationTable", top_k: "int | None" = None) -> "BilingualLexicon":
        """Translation sets from a probability table, optionally the top-k per word."""
        pairs = []
        for s, row in table.probs.items():
            if s == NULL:
                continue
            ranked = sorted(row.items(), key=lambda kv: (-kv[1], kv[0]))
            if top_k is not None:
                ranked = ranked[:top_k]
            pairs.extend((s, t) for t, _ in ranked)
        return cls.from_pairs(pairs, table.src_lang, table.tgt_lang)

    def lookup(self, word: str) -> frozenset:
        return self.entries.get(word, frozenset())

    def __contains__(self, word: str) -> bool:
        return word in self.entries

    def inverted(self) -> "BilingualLexicon":
        pairs = ((t, s) for s, ts in self.entries.items() for t in ts)
        return BilingualLexicon.from_pairs(pairs, self.tgt_lang, self.src_lang)


def _data_lines(path: Path):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot read {path}: {exc.strerror or exc}") from exc
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        yield lineno, line


def load_lexicon(path: "str | Path", src_lang: str = "en", tgt_lang: str = "fr") -> BilingualLexicon:
    pairs = []
    for lineno, line in _data_lines(Path(path)):
        cols = line.split("\t")
        if len(cols) != 2 or not cols[0].strip() or not cols[1].strip():
            raise ResourceError(f"{path}:{lineno}: expected source<TAB>target")
        pairs.append((cols[0], cols[1]))
    return BilingualLexicon.from_pairs(pairs, src_lang, tgt_lang)


def save_lexicon(lex: BilingualLexicon, path: "str | Path") -> None:
    lines = [f"{s}\t{t}\n" for s in sorted(lex.entries) for t in sorted(lex.entries[s])]
    Path(path).write_text("".join(lines), encoding="utf-8")


# -- translation table ---------------------------------------------------------

@dataclass(frozen=True)
class TranslationTable:
    """p(target | source) for unigram pairs.  ``probs[s][t]``."""

    probs: Mapping[str, Mapping[str, float]]
    src_lang: str
    tgt_lang: str
    pruned: bool = False

    def prob(self, source: str, target: str) -> float:
        row = self.probs.get(source)
        return row.get(target, 0.0) if row else 0.0

    def row_sums(self) -> dict[str, float]:
        return {s: math.fsum(row.values()) for s, row in self.probs.items()}

    def __len__(self) -> int:
        return sum(len(row) for row in self.probs.values())


def _encode_corpus(pairs: list[tuple[list[str], list[str]]]):
    src_vocab = sorted({w for s, _ in pairs for w in s} | {NULL})
    tgt_vocab = sorted({w for _, t in pairs for w in t})
    s_id = {w: i for i, w in enumerate(src_vocab)}
    t_id = {w: i for i, w in enumerate(tgt_vocab)}
    null = s_id[NULL]
    n_t = len(tgt_vocab)

    keys, groups, group_logz = [], [], []
    g = 0
    for src, tgt in pairs:
        if not tgt:
            continue
        sids = np.array([null] + [s_id[w] for w in src], dtype=np.int64)
        tids = np.array([t_id[w] for w in tgt], dtype=np.int64)
        # cells ordered by target occurrence, then by source position
        keys.append((sids[None, :] * n_t + tids[:, None]).ravel())
        groups.append(np.repeat(np.arange(g, g + len(tids)), len(sids)))
        group_logz.extend([math.log(len(sids))] * len(tids))
        g += len(tids)
    if not keys:
        raise CorpusError("corpus has no target tokens to align")
    keys = np.concatenate(keys)
    slot_keys, cell_slot = np.unique(keys, return_inverse=True)
    return dict(
        src_vocab=src_vocab, tgt_vocab=tgt_vocab,
        cell_slot=cell_slot.astype(np.int64).ravel(),
        cell_group=np.concatenate(groups).astype(np.int64),
        slot_src=(slot_keys // n_t).astype(np.int64),
        slot_tgt=(slot_keys % n_t).astype(np.int64),
        group_logz=np.asarray(group_logz, dtype=np.float64),
    )


def _tokenized_pairs(parallel) -> list[tuple[list[str], list[str]]]:
    if isinstance(parallel, AlignedCorpus):
        return [(p.source.tokens, p.target.tokens) for p in parallel.pairs]
    return [(list(s), list(t)) for s, t in parallel]


def train_ibm1(parallel: "AlignedCorpus | Iterable[tuple[list[str], list[str]]]",
               iterations: int = DEFAULT_ITERATIONS, *,
               src_lang: "str | None" = None, tgt_lang: "str | None" = None,
               on_iteration: "Callable[[int, float], None] | None" = None) -> TranslationTable:
    """Train IBM Model 1 p(target | source) by expectation-maximization.

    Probabilities start uniform over the targets each source word co-occurs
    with; a NULL source word takes part in every sentence.  ``on_iteration``
    receives (iteration, log-likelihood of the corpus before that update),
    where the log-likelihood omits the constant length term.
    """
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    pairs = _tokenized_pairs(parallel)
    if not pairs:
        raise CorpusError("cannot train on an empty corpus")
    if isinstance(parallel, AlignedCorpus):
        src_lang = src_lang or parallel.src_lang
        tgt_lang = tgt_lang or parallel.tgt_lang
    enc = _encode_corpus(pairs)
    n_src = len(enc["src_vocab"])
    slot_src = enc["slot_src"]
    fanout = np.bincount(slot_src, minlength=n_src)
    prob = 1.0 / fanout[slot_src].astype(np.float64)

    for it in range(1, iterations + 1):
        prob, loglik = _kernels.em_step(prob, enc["cell_slot"], enc["cell_group"],
                                        slot_src, n_src, enc["group_logz"])
        log.debug("ibm1 iteration %d log-likelihood %.6f", it, loglik)
        if on_iteration is not None:
            on_iteration(it, loglik)

    src_vocab, tgt_vocab = enc["src_vocab"], enc["tgt_vocab"]
    probs: dict[str, dict[str, float]] = {}
    for s, t, p in zip(slot_src.tolist(), enc["slot_tgt"].tolist(), prob.tolist()):
        if p > 0.0:
            probs.setdefault(src_vocab[s], {})[tgt_vocab[t]] = p
    return TranslationTable(probs, src_lang or "", tgt_lang or "")


def corpus_log_likelihood(table: TranslationTable, parallel) -> float:
    """Log-likelihood of the corpus under ``table`` (length term omitted)."""
    total = 0.0
    for src, tgt in _tokenized_pairs(parallel):
        sources = [NULL] + list(src)
        for t in tgt:
            total += math.log(sum(table.prob(s, t) for s in sources)) - math.log(len(sources))
    return total


def prune_table(table: TranslationTable, top_k: "int | None" = None,
                min_prob: float = 0.0) -> TranslationTable:
    """Keep at most ``top_k`` targets with p >= ``min_prob`` per source word.

    Probabilities are not renormalized.  ``top_k=None`` means unbounded.
    """
    if top_k is not None and top_k < 1:
        raise ValueError("top_k must be >= 1")
    if not 0.0 <= min_prob < 1.0:
        raise ValueError("min_prob must be in [0, 1)")
    probs = {}
    for s, row in table.probs.items():
        ranked = sorted(((t, p) for t, p in row.items() if p >= min_prob),
                        key=lambda kv: (-kv[1], kv[0]))
        if top_k is not None:
            ranked = ranked[:top_k]
        if ranked:
            probs[s] = dict(ranked)
    return TranslationTable(probs, table.src_lang, table.tgt_lang, pruned=True)


def save_table(table: TranslationTable, path: "str | Path") -> None:
    lines = [f"# src_lang={table.src_lang} tgt_lang={table.tgt_lang} "
             f"pruned={int(table.pruned)}\n"]
    for s in sorted(table.probs):
        row = table.probs[s]
        for t in sorted(row):
            lines.append(f"{s}\t{t}\t{row[t]:.12g}\n")
    Path(path).write_text("".join(lines), encoding="utf-8")


def load_table(path: "str | Path", src_lang: "str | None" = None,
               tgt_lang: "str | None" = None) -> TranslationTable:
    path = Path(path)
    header = {}
    try:
        first = path.read_text(encoding="utf-8").split("\n", 1)[0]
    except OSError as exc:
        raise OSError(f"cannot read {path}: {exc.strerror or exc}") from exc
    if first.startswith("#"):
        for item in first[1:].split():
            k, _, v = item.partition("=")
            header[k] = v
    probs: dict[str, dict[str, float]] = {}
    for lineno, line in _data_lines(path):
        cols = line.split("\t")
        if len(cols) != 3:
            raise ResourceError(f"{path}:{lineno}: expected source<TAB>target<TAB>probability")
        try:
            p = float(cols[2])
        except ValueError:
            raise ResourceError(f"{path}:{lineno}: bad probability {cols[2]!r}") from None
        if not 0.0 < p <= 1.0:
            raise ResourceError(f"{path}:{lineno}: probability {p} outside (0, 1]")
        probs.setdefault(cols[0], {})[cols[1]] = p
    return TranslationTable(
        probs,
        src_lang or header.get("src_lang", ""),
        tgt_lang or header.get("tgt_lang", ""),
        pruned=header.get("pruned", "0") == "1",
    )


# -- length statistics ---------------------------------------------------------

@dataclass(frozen=True)
class LengthStats:
    """Mean and spread of target/source character-length ratios."""

    mu: float
    sigma: float

    def __post_init__(self):
        if not (math.isfinite(self.mu) and math.isfinite(self.sigma)) or self.sigma <= 0:
            raise ResourceError(f"invalid length stats mu={self.mu} sigma={self.sigma}")


def estimate_length_stats(parallel: "AlignedCorpus | Iterable") -> LengthStats:
    """Mean and sample standard deviation of target/source length ratios."""
    pairs = parallel.pairs if isinstance(parallel, AlignedCorpus) else list(parallel)
    if len(pairs) < 2:
        raise CorpusError("length statistics need at least 2 pairs")
    ratios = np.array([p.target.char_len / p.source.char_len for p in pairs])
    sigma = float(np.std(ratios, ddof=1))
    return LengthStats(float(np.mean(ratios)), max(sigma, SIGMA_FLOOR))


def save_length_stats(stats: LengthStats, path: "str | Path") -> None:
    Path(path).write_text(f"mu={stats.mu!r}\nsigma={stats.sigma!r}\n", encoding="utf-8")


def load_length_stats(path: "str | Path") -> LengthStats:
    values = {}
    for lineno, line in _data_lines(Path(path)):
        key, sep, value = line.partition("=")
        if not sep:
            raise ResourceError(f"{path}:{lineno}: expected key=value")
        try:
            values[key.strip()] = float(value)
        except ValueError:
            raise ResourceError(f"{path}:{lineno}: bad number {value.strip()!r}") from None
    if set(values) != {"mu", "sigma"}:
        raise ResourceError(f"{path}: need exactly mu and sigma")
    return LengthStats(values["mu"], values["sigma"])
