"""Correlation and ranking analyses over a grid of F1 results."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .methods import METHOD_LABELS

OVERALL = "Overall"
GRID_COLUMNS = ("method", "src", "tgt", "granularity", "subcorpus", "f1_mean", "f1_ci")

_PAIR_ORDER = ["en-fr", "fr-en", "en-es", "es-en", "es-fr", "fr-es"]
_METHOD_ORDER = [METHOD_LABELS[k] for k in ("c3g", "cts", "asa", "esa", "tma", "len", "rand")]


class AnalysisError(ValueError):
    pass


class UndefinedCorrelationError(AnalysisError):
    """Pearson correlation with a zero-variance input."""


class IncompleteGridError(AnalysisError):
    def __init__(self, missing: Sequence):
        self.missing = list(missing)
        shown = ", ".join("/".join(map(str, k)) for k in self.missing[:10])
        more = f" (+{len(self.missing) - 10} more)" if len(self.missing) > 10 else ""
        super().__init__(f"grid is missing {len(self.missing)} cells: {shown}{more}")


class SchemaError(AnalysisError):
    def __init__(self, path, column):
        self.column = column
        super().__init__(f"{path}: missing column {column!r}")


def pair_label(pair: str) -> str:
    src, tgt = pair.split("-")
    return f"{src.upper()}→{tgt.upper()}"


def _order(items: Iterable[str], preferred: Sequence[str]) -> list[str]:
    rank = {k: i for i, k in enumerate(preferred)}
    return sorted(set(items), key=lambda k: (rank.get(k, len(rank)), k))


def pearson(x: Sequence[float], y: Sequence[float]) -> float:
    """Sample Pearson correlation coefficient."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise AnalysisError("pearson needs two equal-length vectors")
    if len(x) < 2:
        raise AnalysisError("pearson needs at least 2 points")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(np.dot(dx, dx))
    syy = float(np.dot(dy, dy))
    if sxx == 0.0 or syy == 0.0:
        raise UndefinedCorrelationError("correlation undefined: zero variance")
    r = float(np.dot(dx, dy)) / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))


@dataclass
class Cell:
    f1: float
    ci: float = 0.0
    n_pairs: "int | None" = None


@dataclass
class ResultGrid:
    """F1 by (method, language pair, granularity, sub-corpus).

    Language pairs are ``"src-tgt"`` strings.  A sub-corpus named
    ``Overall`` is taken as given; otherwise the overall value is aggregated
    from the sub-corpora, weighted by pair counts when all are known
    (``weighted=False`` forces the unweighted mean).
    """

    cells: dict = field(default_factory=dict)
    weighted: bool = True

    def add(self, method: str, pair: str, gran: str, subcorpus: str, f1: float,
            ci: float = 0.0, n_pairs: "int | None" = None) -> None:
        if not 0.0 <= f1 <= 1.0 or math.isnan(f1):
            raise AnalysisError(f"F1 {f1} outside [0, 1] for {method}/{pair}/{gran}/{subcorpus}")
        self.cells[(method, pair, gran, subcorpus)] = Cell(f1, ci, n_pairs)

    def __len__(self) -> int:
        return len(self.cells)

    def methods(self, gran: "str | None" = None) -> list[str]:
        return _order((k[0] for k in self.cells if gran is None or k[2] == gran), _METHOD_ORDER)

    def pairs(self, gran: "str | None" = None) -> list[str]:
        return _order((k[1] for k in self.cells if gran is None or k[2] == gran), _PAIR_ORDER)

    def granularities(self) -> list[str]:
        return _order((k[2] for k in self.cells), ["chunk", "sentence", "document"])

    def subcorpora(self, pair: "str | None" = None, gran: "str | None" = None) -> list[str]:
        return sorted({k[3] for k in self.cells if k[3] != OVERALL
                       and (pair is None or k[1] == pair) and (gran is None or k[2] == gran)})

    def cell(self, method, pair, gran, subcorpus) -> "Cell | None":
        return self.cells.get((method, pair, gran, subcorpus))

    def overall(self, method: str, pair: str, gran: str) -> "float | None":
        given = self.cells.get((method, pair, gran, OVERALL))
        if given is not None:
            return given.f1
        subs = [c for (m, p, g, s), c in self.cells.items()
                if (m, p, g) == (method, pair, gran) and s != OVERALL]
        if not subs:
            return None
        if self.weighted and all(c.n_pairs for c in subs):
            w = np.array([c.n_pairs for c in subs], dtype=np.float64)
            return float(np.dot(w, [c.f1 for c in subs]) / w.sum())
        return float(np.mean([c.f1 for c in subs]))

    def overall_ci(self, method: str, pair: str, gran: str) -> float:
        given = self.cells.get((method, pair, gran, OVERALL))
        if given is not None:
            return given.ci
        cis = [c.ci for (m, p, g, s), c in self.cells.items()
               if (m, p, g) == (method, pair, gran) and s != OVERALL]
        return float(np.mean(cis)) if cis else 0.0

    def overall_vector(self, methods: Sequence[str], pairs: Sequence[str], gran: str,
                       missing: list) -> list[float]:
        out = []
        for m in methods:
            for p in pairs:
                v = self.overall(m, p, gran)
                if v is None:
                    missing.append((m, p, gran))
                out.append(v)
        return out


@dataclass(frozen=True)
class CorrelationReport:
    labels: tuple
    r: np.ndarray
    mean_r: tuple

    def value(self, a: str, b: str) -> float:
        return float(self.r[self.labels.index(a), self.labels.index(b)])


def correlation_matrix(labels: Sequence[str], vectors: Sequence[Sequence[float]],
                       include_self: bool = True) -> CorrelationReport:
    """Pairwise Pearson matrix plus a per-label mean.

    With ``include_self`` the mean runs over the whole row, diagonal
    included; otherwise over the off-diagonal entries only.
    """
    k = len(labels)
    r = np.eye(k)
    for i in range(k):
        for j in range(i + 1, k):
            r[i, j] = r[j, i] = pearson(vectors[i], vectors[j])
    if include_self or k < 2:
        mean_r = tuple(float(v) for v in r.mean(axis=1))
    else:
        mean_r = tuple(float((r[i].sum() - 1.0) / (k - 1)) for i in range(k))
    return CorrelationReport(tuple(labels), r, mean_r)


def correlate_language_pairs(grid: ResultGrid, granularity: str,
                             include_self: bool = True) -> CorrelationReport:
    """Correlate language pairs through their method-wise overall F1 vectors."""
    methods = grid.methods(granularity)
    pairs = grid.pairs(granularity)
    missing: list = []
    vectors = [grid.overall_vector(methods, [p], granularity, missing) for p in pairs]
    if missing:
        raise IncompleteGridError(missing)
    if len(pairs) < 2:
        raise AnalysisError(f"need at least two language pairs at {granularity} level")
    return correlation_matrix(pairs, vectors, include_self)


@dataclass(frozen=True)
class GranularityCorrelation:
    by_pair: dict
    by_method: dict


def correlate_granularities(grid: ResultGrid, gran_a: str = "chunk",
                            gran_b: str = "sentence", strict: bool = True) -> GranularityCorrelation:
    """Chunk-vs-sentence correlation, per language pair and per method.

    With ``strict=False`` an undefined coefficient (zero variance) is
    reported as NaN instead of raising.
    """
    def corr(a, b):
        try:
            return pearson(a, b)
        except UndefinedCorrelationError:
            if strict:
                raise
            return math.nan

    methods = _order(set(grid.methods(gran_a)) | set(grid.methods(gran_b)), _METHOD_ORDER)
    pairs = _order(set(grid.pairs(gran_a)) | set(grid.pairs(gran_b)), _PAIR_ORDER)
    missing: list = []
    for g in (gran_a, gran_b):
        grid.overall_vector(methods, pairs, g, missing)
    if missing:
        raise IncompleteGridError(missing)
    by_pair = {}
    for p in pairs:
        a = [grid.overall(m, p, gran_a) for m in methods]
        b = [grid.overall(m, p, gran_b) for m in methods]
        by_pair[p] = corr(a, b)
    by_method = {}
    for m in methods:
        a = [grid.overall(m, p, gran_a) for p in pairs]
        b = [grid.overall(m, p, gran_b) for p in pairs]
        by_method[m] = corr(a, b)
    return GranularityCorrelation(by_pair, by_method)


@dataclass(frozen=True)
class Ranked:
    method: str
    f1: float
    tied: bool = False


def top_k_methods(grid: ResultGrid, k: int = 3) -> dict[tuple[str, str], list[Ranked]]:
    """Methods by overall F1, descending; ties broken alphabetically and flagged."""
    out = {}
    for gran in grid.granularities():
        for pair in grid.pairs(gran):
            scored = [(m, grid.overall(m, pair, gran)) for m in grid.methods(gran)]
            scored = [(m, v) for m, v in scored if v is not None]
            scored.sort(key=lambda mv: (-mv[1], mv[0]))
            values = [v for _, v in scored]
            out[(pair, gran)] = [Ranked(m, v, values.count(v) > 1) for m, v in scored[:k]]
    return out


# -- grid interchange ------------------------------------------------------------

def read_grid(paths: "str | Path | Sequence", weighted: bool = True) -> ResultGrid:
    """Load result rows; a later row for the same key replaces an earlier one."""
    if isinstance(paths, (str, Path)):
        paths = [paths]
    grid = ResultGrid(weighted=weighted)
    rows = 0
    for path in paths:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            header = reader.fieldnames or []
            for col in GRID_COLUMNS:
                if col not in header:
                    raise SchemaError(path, col)
            for lineno, row in enumerate(reader, start=2):
                try:
                    n = row.get("n_pairs") or ""
                    grid.add(row["method"], f"{row['src'].lower()}-{row['tgt'].lower()}",
                             row["granularity"].lower(), row["subcorpus"],
                             float(row["f1_mean"]), float(row["f1_ci"] or 0.0),
                             int(n) if n else None)
                except (TypeError, ValueError) as exc:
                    raise AnalysisError(f"{path}:{lineno}: {exc}") from None
                rows += 1
    if rows == 0:
        raise AnalysisError("no result rows to analyse")
    return grid
