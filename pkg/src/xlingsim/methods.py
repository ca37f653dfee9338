"""Cross-language similarity scorers.

Every scorer maps a (source unit, target unit) pair to a similarity in
[0, 1], higher meaning more similar.  ``Scorer.bind`` prepares a batch
scorer over fixed source/target lists; the evaluation protocol scores whole
matrix rows through it.  Degenerate inputs (no usable tokens or n-grams)
score 0.
"""
from __future__ import annotations

import hashlib
import math
from collections import Counter
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from . import _kernels
from .corpus import AlignedCorpus, CorpusError, TextUnit
from .lexres import NULL, BilingualLexicon, LengthStats, TranslationTable

METHOD_LABELS = {
    "c3g": "CL-C3G",
    "cts": "CL-CTS",
    "asa": "CL-ASA",
    "esa": "CL-ESA",
    "tma": "T+MA",
    "len": "Length Model",
    "rand": "Random baseline",
    "oracle": "Oracle",
}

PairScores = Callable[[np.ndarray, np.ndarray], np.ndarray]


class Scorer:
    """Base scorer.  Subclasses implement ``score`` or ``bind`` (or both)."""

    method = ""

    @property
    def label(self) -> str:
        return METHOD_LABELS.get(self.method, self.method)

    def score(self, a: TextUnit, b: TextUnit) -> float:
        return float(self.bind([a], [b])(np.zeros(1, np.int64), np.zeros(1, np.int64))[0])

    def bind(self, sources: Sequence[TextUnit], targets: Sequence[TextUnit]) -> PairScores:
        """Return f(rows, cols) -> scores of sources[rows[k]] vs targets[cols[k]]."""
        def run(rows, cols):
            return np.array([self.score(sources[i], targets[j]) for i, j in zip(rows, cols)],
                            dtype=np.float64)
        return run


# -- sparse vector helpers ------------------------------------------------------

def _to_csr(vectors: list[Mapping]):
    """Pack term->weight maps into CSR arrays over a sorted shared vocabulary."""
    vocab = sorted({t for v in vectors for t in v})
    ids = {t: i for i, t in enumerate(vocab)}
    ptr = np.zeros(len(vectors) + 1, dtype=np.int64)
    idx, val = [], []
    for k, v in enumerate(vectors):
        items = sorted((ids[t], w) for t, w in v.items() if w != 0.0)
        idx.extend(i for i, _ in items)
        val.extend(w for _, w in items)
        ptr[k + 1] = len(idx)
    idx = np.asarray(idx, dtype=np.int64)
    val = np.asarray(val, dtype=np.float64)
    return ptr, idx, val


def _norms(ptr, val):
    row = np.repeat(np.arange(len(ptr) - 1), np.diff(ptr))
    return np.sqrt(np.bincount(row, weights=val * val, minlength=len(ptr) - 1))


def _cosine_batch(src_vecs: list[Mapping], tgt_vecs: list[Mapping]) -> PairScores:
    n_src = len(src_vecs)
    ptr, idx, val = _to_csr(src_vecs + tgt_vecs)
    norms = _norms(ptr, val)

    def run(rows, cols):
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64) + n_src
        dots = _kernels.pair_dots(ptr, idx, val, ptr, idx, val, rows, cols)
        den = norms[rows] * norms[cols]
        with np.errstate(invalid="ignore", divide="ignore"):
            out = np.where(den > 0, dots / den, 0.0)
        return np.clip(out, 0.0, 1.0)
    return run


# -- CL-C3G ----------------------------------------------------------------------

def char_ngrams(text: str, n: int = 3) -> Counter:
    return Counter(text[i:i + n] for i in range(len(text) - n + 1))


@dataclass(frozen=True)
class IdfIndex:
    df: Mapping[str, int]
    n_docs: int
    scope: str = ""

    def idf(self, term: str) -> float:
        return math.log(self.n_docs / max(self.df.get(term, 0), 1))


def build_idf(units: Iterable[TextUnit], scope: str = "") -> IdfIndex:
    """Document frequencies of character 3-grams over ``units``."""
    df: Counter = Counter()
    n = 0
    for u in units:
        n += 1
        df.update(set(char_ngrams(u.c3g_text)))
    if n == 0:
        raise CorpusError("cannot build idf over an empty collection")
    return IdfIndex(dict(df), n, scope)


def c3g_vector(unit: TextUnit, idf: IdfIndex) -> dict[str, float]:
    """Raw-count tf times idf over overlapping character 3-grams."""
    text = unit.c3g_text
    if len(text) < 3:
        return {}
    vec = {}
    for gram, tf in char_ngrams(text).items():
        w = tf * idf.idf(gram)
        if w > 0.0:
            vec[gram] = w
    return vec


class C3GScorer(Scorer):
    method = "c3g"

    def __init__(self, idf: IdfIndex):
        self.idf = idf

    @staticmethod
    def degenerate(unit: TextUnit) -> bool:
        return len(unit.c3g_text) < 3

    def bind(self, sources, targets):
        return _cosine_batch([c3g_vector(u, self.idf) for u in sources],
                             [c3g_vector(u, self.idf) for u in targets])


def c3g_score(a: TextUnit, b: TextUnit, idf: IdfIndex) -> float:
    return C3GScorer(idf).score(a, b)


# -- CL-CTS ------------------------------------------------------------------------

FUZZY_MIN_LEN = 5


def within_one_edit(x: str, y: str) -> bool:
    """Levenshtein distance between x and y is at most 1."""
    if x == y:
        return True
    lx, ly = len(x), len(y)
    if abs(lx - ly) > 1:
        return False
    if lx > ly:
        x, y, lx, ly = y, x, ly, lx
    i = 0
    while i < lx and x[i] == y[i]:
        i += 1
    if lx == ly:
        return x[i + 1:] == y[i + 1:]
    return x[i:] == y[i + 1:]


def fuzzy_match(x: str, y: str) -> bool:
    if x == y:
        return True
    return (len(x) >= FUZZY_MIN_LEN and len(y) >= FUZZY_MIN_LEN
            and within_one_edit(x, y))


def fuzzy_jaccard(bag_a: Iterable[str], bag_b: Iterable[str]) -> float:
    """|fuzzy intersection| / |fuzzy union| with greedy sorted matching."""
    a, b = set(bag_a), set(bag_b)
    if not a and not b:
        return 0.0
    exact = a & b
    matches = len(exact)
    rest_b = sorted(w for w in b - exact if len(w) >= FUZZY_MIN_LEN)
    used = set()
    for x in sorted(a - exact):
        if len(x) < FUZZY_MIN_LEN:
            continue
        for y in rest_b:
            if y not in used and within_one_edit(x, y):
                used.add(y)
                matches += 1
                break
    return matches / (len(a) + len(b) - matches)


def translation_bag(tokens: Iterable[str], lex: BilingualLexicon) -> set[str]:
    """Union of all translations of each token; untranslatable tokens kept as-is."""
    bag = set()
    for tok in tokens:
        tr = lex.lookup(tok)
        if tr:
            bag.update(tr)
        else:
            bag.add(tok)
    return bag


class CTSScorer(Scorer):
    method = "cts"

    def __init__(self, lexicon: BilingualLexicon):
        self.lexicon = lexicon

    def score(self, a, b):
        return fuzzy_jaccard(translation_bag(a.tokens, self.lexicon), b.tokens)

    def bind(self, sources, targets):
        src_bags = [translation_bag(u.tokens, self.lexicon) for u in sources]
        tgt_bags = [set(u.tokens) for u in targets]

        def run(rows, cols):
            return np.array([fuzzy_jaccard(src_bags[i], tgt_bags[j])
                             for i, j in zip(rows.tolist(), cols.tolist())], dtype=np.float64)
        return run


def cts_score(a: TextUnit, b: TextUnit, lex: BilingualLexicon) -> float:
    return CTSScorer(lex).score(a, b)


# -- T+MA ------------------------------------------------------------------------------

class TMAScorer(Scorer):
    """Dictionary pseudo-translation of the source, strict set Jaccard."""

    method = "tma"

    def __init__(self, lexicon: BilingualLexicon):
        self.lexicon = lexicon

    @classmethod
    def from_table(cls, table: TranslationTable, top_k: "int | None" = None) -> "TMAScorer":
        return cls(BilingualLexicon.from_table(table, top_k))

    def bind(self, sources, targets):
        n_src = len(sources)
        bags = ([dict.fromkeys(translation_bag(u.tokens, self.lexicon), 1.0) for u in sources]
                + [dict.fromkeys(u.tokens, 1.0) for u in targets])
        ptr, idx, val = _to_csr(bags)
        sizes = np.diff(ptr).astype(np.float64)

        def run(rows, cols):
            rows = np.asarray(rows, dtype=np.int64)
            cols = np.asarray(cols, dtype=np.int64) + n_src
            inter = _kernels.pair_dots(ptr, idx, val, ptr, idx, val, rows, cols)
            union = sizes[rows] + sizes[cols] - inter
            with np.errstate(invalid="ignore", divide="ignore"):
                return np.where(union > 0, inter / union, 0.0)
        return run


def tma_score(a: TextUnit, b: TextUnit, lex: BilingualLexicon) -> float:
    return TMAScorer(lex).score(a, b)


# -- CL-ASA -------------------------------------------------------------------------------

def gaussian_factor(ratio, stats: LengthStats):
    return np.exp(-0.5 * ((np.asarray(ratio, dtype=np.float64) - stats.mu) / stats.sigma) ** 2)


class ASAScorer(Scorer):
    """Length factor times averaged translation-probability mass.

    With ``direction="target_to_source"`` (default) the table is keyed by
    target-unit words and gives p(source word | target word); with
    ``"source_to_target"`` it is keyed by source-unit words.  The length
    factor compares char_len(source) / char_len(target) with ``length_stats``.
    """

    method = "asa"

    def __init__(self, table: TranslationTable, length_stats: LengthStats,
                 direction: str = "target_to_source"):
        if direction not in ("target_to_source", "source_to_target"):
            raise ValueError(f"unknown direction {direction!r}")
        self.table = table
        self.length_stats = length_stats
        self.direction = direction

    def _mass(self, a_tokens, b_tokens) -> float:
        probs = self.table.probs
        total = 0.0
        if self.direction == "target_to_source":
            for y in b_tokens:
                row = probs.get(y)
                if row and y != NULL:
                    total += sum(row.get(x, 0.0) for x in a_tokens)
        else:
            for x in a_tokens:
                row = probs.get(x)
                if row and x != NULL:
                    total += sum(row.get(y, 0.0) for y in b_tokens)
        return total

    def translation_factor(self, a: TextUnit, b: TextUnit) -> float:
        if not a.tokens or not b.tokens:
            return 0.0
        return min(1.0, self._mass(a.tokens, b.tokens) / (len(a.tokens) * len(b.tokens)))

    def score(self, a, b):
        tf = self.translation_factor(a, b)
        if tf == 0.0:
            return 0.0
        return float(tf * gaussian_factor(a.char_len / b.char_len, self.length_stats))

    def bind(self, sources, targets):
        src_len = np.array([u.char_len for u in sources], dtype=np.float64)
        tgt_len = np.array([u.char_len for u in targets], dtype=np.float64)
        src_tok = [u.tokens for u in sources]
        tgt_tok = [u.tokens for u in targets]
        probs = self.table.probs
        # Collapse one side into word -> summed probability so each cell
        # costs O(len) lookups instead of O(len_a * len_b).
        if self.direction == "target_to_source":
            keyed, other, keyed_is_target = tgt_tok, src_tok, True
        else:
            keyed, other, keyed_is_target = src_tok, tgt_tok, False
        cache: dict[int, dict] = {}

        def collapsed(k):
            agg = cache.get(k)
            if agg is None:
                agg = {}
                for w in keyed[k]:
                    row = probs.get(w)
                    if row and w != NULL:
                        for x, p in row.items():
                            agg[x] = agg.get(x, 0.0) + p
                cache[k] = agg
            return agg

        def run(rows, cols):
            out = np.zeros(len(rows), dtype=np.float64)
            for k, (i, j) in enumerate(zip(rows.tolist(), cols.tolist())):
                a_tok, b_tok = src_tok[i], tgt_tok[j]
                if not a_tok or not b_tok:
                    continue
                agg = collapsed(j) if keyed_is_target else collapsed(i)
                words = other[i] if keyed_is_target else other[j]
                mass = 0.0
                for w in words:
                    mass += agg.get(w, 0.0)
                out[k] = min(1.0, mass / (len(a_tok) * len(b_tok)))
            nz = out > 0
            out[nz] *= gaussian_factor(src_len[rows[nz]] / tgt_len[cols[nz]], self.length_stats)
            return out
        return run


def asa_score(a: TextUnit, b: TextUnit, table: TranslationTable, len_stats: LengthStats,
              direction: str = "target_to_source") -> float:
    return ASAScorer(table, len_stats, direction).score(a, b)


# -- CL-ESA ---------------------------------------------------------------------------------

@dataclass(frozen=True)
class ConceptIndex:
    """Aligned concept documents and per-language word -> {concept: tf.idf} maps."""

    concept_ids: tuple
    inverted: Mapping[str, Mapping[str, Mapping[int, float]]]

    @property
    def languages(self) -> tuple[str, ...]:
        return tuple(self.inverted)

    def vector(self, unit: TextUnit) -> dict[int, float]:
        side = self.inverted.get(unit.lang)
        if side is None:
            raise CorpusError(f"concept index has no {unit.lang!r} side")
        vec: dict[int, float] = {}
        for tok in unit.tokens:
            for c, w in side.get(tok, {}).items():
                vec[c] = vec.get(c, 0.0) + w
        return vec


def _tfidf_side(docs: list[list[str]]) -> dict[str, dict[int, float]]:
    n = len(docs)
    tfs = [Counter(d) for d in docs]
    df: Counter = Counter()
    for tf in tfs:
        df.update(tf.keys())
    inv: dict[str, dict[int, float]] = {}
    for c, tf in enumerate(tfs):
        for w, count in tf.items():
            weight = count * math.log(n / df[w])
            if weight > 0.0:
                inv.setdefault(w, {})[c] = weight
    return inv


def build_concept_index(concept_pairs: AlignedCorpus,
                        exclude: Iterable[str] = ()) -> ConceptIndex:
    """One concept per aligned document pair.

    Concept pairs whose source or target text appears in ``exclude`` are
    removed first, so evaluation units never serve as concepts.
    """
    excluded = {t.strip() for t in exclude}
    pairs = [p for p in concept_pairs.pairs
             if p.source.raw.strip() not in excluded and p.target.raw.strip() not in excluded]
    if not pairs:
        raise CorpusError("cannot build a concept index from an empty collection")
    inverted = {
        concept_pairs.src_lang: _tfidf_side([p.source.tokens for p in pairs]),
        concept_pairs.tgt_lang: _tfidf_side([p.target.tokens for p in pairs]),
    }
    return ConceptIndex(tuple(range(len(pairs))), inverted)


class ESAScorer(Scorer):
    method = "esa"

    def __init__(self, index: ConceptIndex):
        self.index = index

    def bind(self, sources, targets):
        return _cosine_batch([self.index.vector(u) for u in sources],
                             [self.index.vector(u) for u in targets])


def esa_score(a: TextUnit, b: TextUnit, index: ConceptIndex) -> float:
    return ESAScorer(index).score(a, b)


# -- baselines ----------------------------------------------------------------------------

class LengthModelScorer(Scorer):
    """Gaussian on char_len(target) / char_len(source)."""

    method = "len"

    def __init__(self, length_stats: LengthStats):
        self.length_stats = length_stats

    def bind(self, sources, targets):
        src_len = np.array([u.char_len for u in sources], dtype=np.float64)
        tgt_len = np.array([u.char_len for u in targets], dtype=np.float64)

        def run(rows, cols):
            a = src_len[rows]
            with np.errstate(divide="ignore", invalid="ignore"):
                out = gaussian_factor(tgt_len[cols] / a, self.length_stats)
            return np.where(a > 0, out, 0.0)
        return run


def length_model_score(a: TextUnit, b: TextUnit, len_stats: LengthStats) -> float:
    return LengthModelScorer(len_stats).score(a, b)


def _hash_unit_interval(seed: int, a_id: str, b_id: str) -> float:
    h = hashlib.blake2b(f"{seed}\x1f{a_id}\x1f{b_id}".encode("utf-8"), digest_size=8)
    return int.from_bytes(h.digest(), "little") / 2.0 ** 64


class RandomScorer(Scorer):
    """Uniform scores, a deterministic hash of (seed, source id, target id)."""

    method = "rand"

    def __init__(self, seed: int = 0):
        self.seed = seed

    def score(self, a, b):
        return _hash_unit_interval(self.seed, a.id, b.id)

    def bind(self, sources, targets):
        def run(rows, cols):
            return np.array([_hash_unit_interval(self.seed, sources[i].id, targets[j].id)
                             for i, j in zip(rows.tolist(), cols.tolist())], dtype=np.float64)
        return run


def random_score(a: TextUnit, b: TextUnit, seed: int) -> float:
    return _hash_unit_interval(seed, a.id, b.id)


class OracleScorer(Scorer):
    """1 for aligned units, 0 otherwise.  A protocol test fixture."""

    method = "oracle"

    def score(self, a, b):
        return 1.0 if a.pair_id and a.pair_id == b.pair_id else 0.0

    def bind(self, sources, targets):
        src = np.array([u.pair_id for u in sources], dtype=object)
        tgt = np.array([u.pair_id for u in targets], dtype=object)

        def run(rows, cols):
            return (src[rows] == tgt[cols]).astype(np.float64)
        return run
