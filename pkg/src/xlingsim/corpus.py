"""Aligned cross-language corpora: ingestion, unit views and sampling.

The dataset ships as line-aligned plain-text files, one textual unit per
line, two files per (sub-corpus, language pair, granularity).  A small
manifest of ``key = value`` lines names the languages, the granularity,
the sub-corpus label and the two files.
"""
from __future__ import annotations

import enum
import re
import unicodedata
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "AlignmentError",
    "CorpusError",
    "Granularity",
    "TextUnit",
    "AlignedPair",
    "AlignedCorpus",
    "LANGUAGES",
    "normalize_lang",
    "load_corpus",
    "load_manifest",
    "read_manifest",
    "sample_units",
    "normalize_c3g",
    "tokenize_words",
]

LANGUAGES = frozenset({"en", "fr", "es"})


class CorpusError(ValueError):
    """Invalid corpus input or domain error on a corpus."""


class AlignmentError(CorpusError):
    """The two sides of a parallel file pair do not line up."""


class Granularity(str, enum.Enum):
    DOCUMENT = "document"
    SENTENCE = "sentence"
    CHUNK = "chunk"

    @classmethod
    def parse(cls, value: "str | Granularity") -> "Granularity":
        if isinstance(value, Granularity):
            return value
        try:
            return cls(value.strip().lower())
        except ValueError:
            raise CorpusError(f"unknown granularity {value!r}") from None


def normalize_lang(code: str, languages: Iterable[str] = LANGUAGES) -> str:
    lang = code.strip().lower()
    if lang not in languages:
        raise CorpusError(f"unsupported language {code!r}")
    return lang


_C3G_DROP = re.compile(r"[^a-z0-9 ]+")
_SPACES = re.compile(r" {2,}")


def normalize_c3g(text: str) -> str:
    """Lower-case and keep only ASCII letters, digits and single spaces.

    Accented letters are deleted rather than transliterated.

    >>> normalize_c3g("The CAT!")
    'the cat'
    >>> normalize_c3g("a---b  c")
    'ab c'
    """
    text = _C3G_DROP.sub("", text.lower())
    return _SPACES.sub(" ", text).strip(" ")


def _is_boundary_junk(ch: str) -> bool:
    cat = unicodedata.category(ch)
    return cat[0] in "PSZC" or ch == "_"


def tokenize_words(text: str) -> list[str]:
    """Lower-cased whitespace tokens with punctuation stripped at both ends.

    Internal apostrophes and hyphens survive (``don't``, ``peut-être``).
    """
    tokens = []
    for raw in text.lower().split():
        start, end = 0, len(raw)
        while start < end and _is_boundary_junk(raw[start]):
            start += 1
        while end > start and _is_boundary_junk(raw[end - 1]):
            end -= 1
        if start < end:
            tokens.append(raw[start:end])
    return tokens


@dataclass(frozen=True)
class TextUnit:
    """One chunk or sentence.

    ``pair_id`` is the alignment key shared by a source unit and its
    aligned target; ``id`` is unique per unit.
    """

    id: str
    lang: str
    gran: Granularity
    raw: str
    pair_id: str = ""

    def __post_init__(self):
        if not self.raw.strip():
            raise CorpusError(f"unit {self.id!r} is blank")

    @property
    def char_len(self) -> int:
        return len(self.raw)

    @cached_property
    def tokens(self) -> list[str]:
        return tokenize_words(self.raw)

    @cached_property
    def c3g_text(self) -> str:
        return normalize_c3g(self.raw)


@dataclass(frozen=True)
class AlignedPair:
    id: str
    source: TextUnit
    target: TextUnit
    subcorpus: str

    def __post_init__(self):
        if self.source.lang == self.target.lang:
            raise CorpusError(f"pair {self.id!r}: both sides are {self.source.lang!r}")
        if self.source.gran != self.target.gran:
            raise CorpusError(f"pair {self.id!r}: granularity mismatch")


@dataclass(frozen=True)
class AlignedCorpus:
    pairs: tuple[AlignedPair, ...]
    src_lang: str
    tgt_lang: str
    gran: Granularity
    subcorpus: str
    dropped: int = 0

    def __post_init__(self):
        ids = set()
        for p in self.pairs:
            if (p.source.lang, p.target.lang) != (self.src_lang, self.tgt_lang):
                raise CorpusError(f"pair {p.id!r} has languages "
                                  f"{p.source.lang}->{p.target.lang}")
            if p.source.gran != self.gran or p.subcorpus != self.subcorpus:
                raise CorpusError(f"pair {p.id!r} does not belong to this corpus")
            if p.id in ids:
                raise CorpusError(f"duplicate pair id {p.id!r}")
            ids.add(p.id)

    @classmethod
    def from_texts(cls, sources: Sequence[str], targets: Sequence[str], *,
                   src_lang: str, tgt_lang: str,
                   gran: "Granularity | str" = Granularity.SENTENCE,
                   subcorpus: str = "corpus") -> "AlignedCorpus":
        """Build a corpus from two aligned lists, dropping blank pairs."""
        if len(sources) != len(targets):
            raise AlignmentError(f"line counts differ: {len(sources)} vs {len(targets)}")
        src_lang, tgt_lang = normalize_lang(src_lang), normalize_lang(tgt_lang)
        gran = Granularity.parse(gran)
        pairs = []
        dropped = 0
        for lineno, (s, t) in enumerate(zip(sources, targets), start=1):
            if not s.strip() or not t.strip():
                dropped += 1
                continue
            pid = f"{subcorpus}/{gran.value}/{lineno}"
            pairs.append(AlignedPair(
                id=pid,
                source=TextUnit(f"{pid}/{src_lang}", src_lang, gran, s, pid),
                target=TextUnit(f"{pid}/{tgt_lang}", tgt_lang, gran, t, pid),
                subcorpus=subcorpus,
            ))
        return cls(tuple(pairs), src_lang, tgt_lang, gran, subcorpus, dropped)

    def __len__(self) -> int:
        return len(self.pairs)

    @property
    def sources(self) -> list[TextUnit]:
        return [p.source for p in self.pairs]

    @property
    def targets(self) -> list[TextUnit]:
        return [p.target for p in self.pairs]

    def reversed(self) -> "AlignedCorpus":
        """Same alignment with source and target swapped."""
        pairs = tuple(AlignedPair(p.id, p.target, p.source, p.subcorpus) for p in self.pairs)
        return AlignedCorpus(pairs, self.tgt_lang, self.src_lang, self.gran,
                             self.subcorpus, self.dropped)

    def subset(self, indices: Iterable[int]) -> "AlignedCorpus":
        pairs = tuple(self.pairs[i] for i in indices)
        return AlignedCorpus(pairs, self.src_lang, self.tgt_lang, self.gran, self.subcorpus)


def _read_lines(path: Path) -> list[str]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot read {path}: {exc.strerror or exc}") from exc
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    return [ln.rstrip("\r") for ln in lines]


MANIFEST_KEYS = ("src_lang", "tgt_lang", "granularity", "subcorpus", "src_file", "tgt_file")


def read_manifest(path: "str | Path") -> dict[str, str]:
    """Parse a ``key = value`` manifest; ``#`` starts a comment line."""
    path = Path(path)
    meta = {}
    for lineno, line in enumerate(_read_lines(path), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise CorpusError(f"{path}:{lineno}: expected key = value")
        meta[key.strip()] = value.strip()
    missing = [k for k in MANIFEST_KEYS if k not in meta]
    if missing:
        raise CorpusError(f"{path}: manifest missing keys {', '.join(missing)}")
    return meta


def load_corpus(src_file: "str | Path", tgt_file: "str | Path", meta: dict) -> AlignedCorpus:
    """Load a line-aligned file pair.

    ``meta`` supplies ``src_lang``, ``tgt_lang``, ``granularity`` and
    ``subcorpus``.  Pair *i* comes from line *i* of both files; a line that
    is blank on either side drops the whole pair.
    """
    src = _read_lines(Path(src_file))
    tgt = _read_lines(Path(tgt_file))
    if len(src) != len(tgt):
        raise AlignmentError(f"{src_file} and {tgt_file} are not aligned: "
                             f"{len(src)} vs {len(tgt)} lines")
    return AlignedCorpus.from_texts(
        src, tgt,
        src_lang=meta["src_lang"], tgt_lang=meta["tgt_lang"],
        gran=meta.get("granularity", "sentence"),
        subcorpus=meta.get("subcorpus", "corpus"),
    )


def load_manifest(path: "str | Path") -> AlignedCorpus:
    """Load the corpus a manifest describes; file paths are manifest-relative."""
    path = Path(path)
    meta = read_manifest(path)
    base = path.parent
    return load_corpus(base / meta["src_file"], base / meta["tgt_file"], meta)


def sample_units(corpus: "AlignedCorpus | int", m: int, seed: int) -> np.ndarray:
    """Draw ``m - 1`` target indices uniformly with replacement.

    The draw depends only on (corpus size, m, seed).
    """
    n = corpus if isinstance(corpus, int) else len(corpus)
    if m < 1:
        raise CorpusError("m must be >= 1")
    if n == 0:
        raise CorpusError("cannot sample from an empty corpus")
    rng = np.random.default_rng(seed)
    return rng.integers(0, n, size=m - 1, dtype=np.int64)
