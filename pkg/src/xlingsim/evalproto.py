"""Distance-matrix evaluation protocol and the match/mismatch fingerprint.

Each source unit is scored against its aligned target (the relevant cell)
and against ``m - 1`` other targets of the same corpus, drawn uniformly
with replacement.  The best-F1 threshold is then searched over all N*M cells
pooled together.
"""
from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import stats

from .corpus import AlignedCorpus, CorpusError, sample_units
from .methods import Scorer

log = logging.getLogger(__name__)

N_BINS = 100
ROW_BLOCK = 2048


@dataclass(frozen=True)
class ScoreMatrix:
    """Row i: column 0 is the relevant (aligned) target, columns 1.. are distractors."""

    target_idx: np.ndarray   # (N, M) int
    scores: np.ndarray       # (N, M) float
    m: int
    seed: int
    errors: int = 0

    @property
    def relevant(self) -> np.ndarray:
        rel = np.zeros(self.scores.shape, dtype=bool)
        rel[:, 0] = True
        return rel

    @property
    def n_rows(self) -> int:
        return self.scores.shape[0]

    def to_csv(self, path: "str | Path", target_ids: "Sequence[str] | None" = None) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["row_id", "col_rank", "target_id", "score", "is_relevant"])
            for i in range(self.n_rows):
                for k in range(self.m):
                    j = int(self.target_idx[i, k])
                    w.writerow([i, k, target_ids[j] if target_ids else j,
                                repr(float(self.scores[i, k])), int(k == 0)])


@dataclass(frozen=True)
class EvalResult:
    """Best-F1 operating point.

    For a single fold ``f1 == mean_f1``.  Over several folds, threshold,
    precision and recall are fold means, ``f1`` is their harmonic mean and
    ``mean_f1`` is the mean of the per-fold F1 values.
    """

    threshold: float
    precision: float
    recall: float
    f1: float
    fold_f1s: tuple = ()
    mean_f1: float = 0.0
    ci_half_width: float = 0.0
    folds: tuple = field(default=(), repr=False)


def f1_score(precision: float, recall: float) -> float:
    return 0.0 if precision + recall == 0 else 2 * precision * recall / (precision + recall)


def _row_seed(seed: int, row: int) -> int:
    return int(seed) ^ int(row)


def distractors(n: int, row: int, m: int, seed: int) -> np.ndarray:
    """``m - 1`` target indices other than ``row``, uniform with replacement."""
    if n == 1:
        return sample_units(1, m, seed)
    idx = sample_units(n - 1, m, seed)
    return idx + (idx >= row)


def build_matrix(corpus: AlignedCorpus, scorer: Scorer, m: int, seed: int,
                 bound=None) -> ScoreMatrix:
    """Score every source against its aligned target and ``m - 1`` distractors.

    Distractors are drawn with replacement from the targets other than the
    row's own (a one-pair corpus can only offer its own target).  Row i
    draws with seed ``seed ^ i``, so rows can be evaluated in any order.
    ``bound`` reuses a prior ``scorer.bind`` over this corpus.  Cells whose
    score is not finite count as errors and score 0.
    """
    if len(corpus) == 0:
        raise CorpusError("cannot evaluate an empty corpus")
    if m < 1:
        raise ValueError("m must be >= 1")
    n = len(corpus)
    target_idx = np.empty((n, m), dtype=np.int64)
    target_idx[:, 0] = np.arange(n)
    for i in range(n):
        target_idx[i, 1:] = distractors(n, i, m, _row_seed(seed, i))

    run = bound if bound is not None else scorer.bind(corpus.sources, corpus.targets)
    scores = np.zeros((n, m), dtype=np.float64)
    errors = 0
    for start in range(0, n, ROW_BLOCK):
        stop = min(start + ROW_BLOCK, n)
        rows = np.repeat(np.arange(start, stop), m)
        cols = target_idx[start:stop].ravel()
        try:
            block = np.asarray(run(rows, cols), dtype=np.float64)
        except (ValueError, ArithmeticError) as exc:
            log.warning("scorer %s failed on rows %d-%d (%s); scoring cell by cell",
                        scorer.method, start, stop, exc)
            block, bad = _score_cells(scorer, corpus, rows, cols)
            errors += bad
        bad = ~np.isfinite(block)
        errors += int(bad.sum())
        block = np.clip(np.where(bad, 0.0, block), 0.0, 1.0)
        scores[start:stop] = block.reshape(stop - start, m)
    return ScoreMatrix(target_idx, scores, m, seed, errors)


def _score_cells(scorer, corpus, rows, cols):
    out = np.zeros(len(rows))
    bad = 0
    src, tgt = corpus.sources, corpus.targets
    for k, (i, j) in enumerate(zip(rows.tolist(), cols.tolist())):
        try:
            out[k] = scorer.score(src[i], tgt[j])
        except (ValueError, ArithmeticError):
            bad += 1
    return out, bad


def sweep_scores(scores: np.ndarray, positive: np.ndarray) -> EvalResult:
    """Best-F1 threshold over pooled (score, label) cells.

    Candidates are 0, 1 and midpoints between consecutive distinct scores;
    a cell is predicted a match when score >= threshold.  Ties go to the
    larger threshold.
    """
    scores = np.asarray(scores, dtype=np.float64).ravel()
    positive = np.asarray(positive, dtype=bool).ravel()
    n_pos = int(positive.sum())
    if scores.size == 0:
        raise ValueError("no cells to threshold")
    uniq = np.unique(scores)
    thresholds = np.concatenate([[0.0], (uniq[:-1] + uniq[1:]) / 2.0, [1.0]])
    # Each midpoint admits exactly the scores >= its upper neighbour; counting
    # by that score rather than by the midpoint avoids rounding ambiguity.
    admit = np.concatenate([[0.0], uniq[1:], [1.0]])
    all_sorted = np.sort(scores)
    pos_sorted = np.sort(scores[positive])
    n_pred = len(all_sorted) - np.searchsorted(all_sorted, admit, side="left")
    tp = len(pos_sorted) - np.searchsorted(pos_sorted, admit, side="left")
    denom = n_pred + n_pos
    f1 = np.where(denom > 0, 2.0 * tp / np.maximum(denom, 1), 0.0)
    best = len(f1) - 1 - int(np.argmax(f1[::-1]))
    p = tp[best] / n_pred[best] if n_pred[best] else 0.0
    r = tp[best] / n_pos if n_pos else 0.0
    return EvalResult(float(thresholds[best]), float(p), float(r), float(f1[best]),
                      fold_f1s=(float(f1[best]),), mean_f1=float(f1[best]))


def sweep_threshold(matrix: ScoreMatrix) -> EvalResult:
    return sweep_scores(matrix.scores, matrix.relevant)


def fold_seed(base_seed: int, fold: int) -> int:
    return int(np.random.SeedSequence([int(base_seed), int(fold)]).generate_state(1)[0])


def ci_half_width(values: Sequence[float], confidence: float = 0.95) -> float:
    """Student-t half-width of the mean; 0 for fewer than two values."""
    k = len(values)
    if k < 2 or min(values) == max(values):
        return 0.0
    sd = float(np.std(values, ddof=1))
    return float(stats.t.ppf(0.5 + confidence / 2, k - 1) * sd / math.sqrt(k))


def combine_folds(results: Sequence[EvalResult]) -> EvalResult:
    f1s = tuple(r.f1 for r in results)
    p = float(np.mean([r.precision for r in results]))
    rcl = float(np.mean([r.recall for r in results]))
    return EvalResult(
        threshold=float(np.mean([r.threshold for r in results])),
        precision=p, recall=rcl, f1=f1_score(p, rcl),
        fold_f1s=f1s, mean_f1=float(np.mean(f1s)),
        ci_half_width=ci_half_width(f1s), folds=tuple(results),
    )


def run_folds(corpus: AlignedCorpus, scorer: Scorer, m: int = 1000, folds: int = 10,
              base_seed: int = 0) -> EvalResult:
    if folds < 1:
        raise ValueError("folds must be >= 1")
    bound = scorer.bind(corpus.sources, corpus.targets)
    results = [sweep_threshold(build_matrix(corpus, scorer, m, fold_seed(base_seed, k), bound))
               for k in range(folds)]
    return combine_folds(results)


# -- fingerprint -------------------------------------------------------------------

@dataclass
class Fingerprint:
    pos_hist: np.ndarray
    neg_hist: np.ndarray
    n_pos: int
    n_neg: int
    best: EvalResult
    method: str = ""

    def to_csv(self, path: "str | Path") -> None:
        Path(path).write_text(fingerprint_csv(self), encoding="utf-8")


def score_bins(scores: np.ndarray) -> np.ndarray:
    return np.minimum(np.floor(np.asarray(scores) * N_BINS).astype(np.int64), N_BINS - 1)


def fingerprint(subcorpora: Sequence[AlignedCorpus], scorer: Scorer,
                pairs_per_corpus: int = 200, folds: int = 10, seed: int = 0) -> Fingerprint:
    """Balanced match/mismatch experiment.

    Per fold, ``pairs_per_corpus`` pairs are drawn without replacement from
    every sub-corpus; each source is scored against its aligned target and
    against one other target of the same sub-corpus.  Histograms accumulate
    over all folds; the reported operating point is the fold average.
    """
    for c in subcorpora:
        if len(c) < pairs_per_corpus + 1:
            raise CorpusError(f"sub-corpus {c.subcorpus!r} has {len(c)} pairs, "
                              f"needs at least {pairs_per_corpus + 1}")
    if folds < 1:
        raise ValueError("folds must be >= 1")
    pos_hist = np.zeros(N_BINS, dtype=np.int64)
    neg_hist = np.zeros(N_BINS, dtype=np.int64)
    bound = [scorer.bind(c.sources, c.targets) for c in subcorpora]
    results = []
    for k in range(folds):
        rng = np.random.default_rng(fold_seed(seed, k))
        pos_scores, neg_scores = [], []
        for c, run in zip(subcorpora, bound):
            n = len(c)
            rows = rng.choice(n, size=pairs_per_corpus, replace=False)
            # uniform over the n-1 non-aligned targets
            other = rng.integers(0, n - 1, size=pairs_per_corpus)
            other = other + (other >= rows)
            pos_scores.append(run(rows, rows))
            neg_scores.append(run(rows, other))
        pos = np.clip(np.concatenate(pos_scores), 0.0, 1.0)
        neg = np.clip(np.concatenate(neg_scores), 0.0, 1.0)
        pos_hist += np.bincount(score_bins(pos), minlength=N_BINS)
        neg_hist += np.bincount(score_bins(neg), minlength=N_BINS)
        labels = np.concatenate([np.ones(len(pos), bool), np.zeros(len(neg), bool)])
        results.append(sweep_scores(np.concatenate([pos, neg]), labels))
    k_total = folds * pairs_per_corpus * len(subcorpora)
    return Fingerprint(pos_hist, neg_hist, k_total, k_total, combine_folds(results),
                       scorer.label)


def fingerprint_csv(fp: Fingerprint) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["bin", "pos_count", "neg_count"])
    for b in range(N_BINS):
        w.writerow([b, int(fp.pos_hist[b]), int(fp.neg_hist[b])])
    w.writerow(["total", fp.n_pos, fp.n_neg])
    return buf.getvalue()


def fingerprint_svg(fp: Fingerprint, width: int = 600, height: int = 300) -> str:
    """Histogram with matches above the axis and mismatches below."""
    peak = max(int(fp.pos_hist.max(initial=0)), int(fp.neg_hist.max(initial=0)), 1)
    mid = height / 2
    bar_w = width / N_BINS
    scale = (mid - 20) / peak
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
             f'viewBox="0 0 {width} {height}">',
             f'<rect width="{width}" height="{height}" fill="#cccccc"/>']
    for b in range(N_BINS):
        x = b * bar_w
        hp = fp.pos_hist[b] * scale
        hn = fp.neg_hist[b] * scale
        if hp:
            parts.append(f'<rect x="{x:.2f}" y="{mid - hp:.2f}" width="{bar_w:.2f}" '
                         f'height="{hp:.2f}" fill="white" stroke="black" stroke-width="0.3"/>')
        if hn:
            parts.append(f'<rect x="{x:.2f}" y="{mid:.2f}" width="{bar_w:.2f}" '
                         f'height="{hn:.2f}" fill="black"/>')
    parts.append(f'<line x1="0" y1="{mid}" x2="{width}" y2="{mid}" stroke="black"/>')
    parts.append(f'<text x="4" y="14" font-size="12">{fp.method}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
