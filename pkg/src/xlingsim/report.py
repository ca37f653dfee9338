"""CSV and Markdown renderings of the result and analysis tables.

All files are rendered in memory first and then moved into place, so a
failure leaves no partial report set behind.
"""
from __future__ import annotations

import csv
import io
import logging
import math
import os
import shutil
import tempfile
from pathlib import Path
from typing import Sequence

from .analysis import (
    AnalysisError,
    ResultGrid,
    correlate_granularities,
    correlate_language_pairs,
    pair_label,
    top_k_methods,
)
from .evalproto import Fingerprint

log = logging.getLogger(__name__)


def _csv(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _markdown(title: str, header: Sequence[str], rows: Sequence[Sequence]) -> str:
    lines = [f"## {title}", "", "| " + " | ".join(header) + " |",
             "|" + "|".join("---" for _ in header) + "|"]
    lines.extend("| " + " | ".join(str(c) for c in row) + " |" for row in rows)
    return "\n".join(lines) + "\n"


def _coef(v: float) -> str:
    return "undefined" if math.isnan(v) else f"{v:.3f}"


def _table(files: dict, stem: str, title: str, header, rows) -> None:
    files[f"{stem}.csv"] = _csv(header, rows)
    files[f"{stem}.md"] = _markdown(title, header, rows)


def render_reports(grid: ResultGrid,
                   fingerprints: Sequence[Fingerprint] = ()) -> dict[str, str]:
    """File name -> content for every analysis the grid supports."""
    if len(grid) == 0:
        raise AnalysisError("empty result grid")
    files: dict[str, str] = {}
    grans = grid.granularities()

    for gran in grans:
        methods, pairs = grid.methods(gran), grid.pairs(gran)
        rows = []
        for m in methods:
            vals = [grid.overall(m, p, gran) for p in pairs]
            rows.append([m] + ["" if v is None else f"{v:.4f}" for v in vals])
        _table(files, f"overall_f1_{gran}", f"Overall F1 ({gran} level)",
               ["method"] + [pair_label(p) for p in pairs], rows)

        try:
            rep = correlate_language_pairs(grid, gran)
        except AnalysisError as exc:
            log.info("skipping language-pair correlation at %s level: %s", gran, exc)
        else:
            labels = [pair_label(p) for p in rep.labels]
            rows = [[labels[i]] + [f"{rep.r[i, j]:.3f}" for j in range(len(labels))]
                    + [f"{rep.mean_r[i]:.3f}"] for i in range(len(labels))]
            _table(files, f"correlation_language_pairs_{gran}",
                   f"Pearson correlation between language pairs ({gran} level)",
                   ["pair"] + labels + ["overall"], rows)

        for pair in pairs:
            subs = grid.subcorpora(pair, gran)
            if not subs:
                continue
            rows = []
            for m in methods:
                row = [m]
                for s in subs:
                    c = grid.cell(m, pair, gran, s)
                    row.append("" if c is None else f"{100 * c.f1:.2f} ± {100 * c.ci:.3f}")
                ov = grid.overall(m, pair, gran)
                row.append("" if ov is None else
                           f"{100 * ov:.2f} ± {100 * grid.overall_ci(m, pair, gran):.3f}")
                rows.append(row)
            _table(files, f"subcorpus_f1_{pair}_{gran}",
                   f"F1 (%) by sub-corpus, {pair_label(pair)} ({gran} level)",
                   ["method"] + [f"{s} (%)" for s in subs] + ["Overall (%)"], rows)

    rows = []
    for (pair, gran), ranked in top_k_methods(grid).items():
        for rank, r in enumerate(ranked, start=1):
            rows.append([gran, pair_label(pair), rank, r.method, f"{r.f1:.4f}", int(r.tied)])
    _table(files, "top3_methods", "Top 3 methods by language pair",
           ["granularity", "pair", "rank", "method", "f1", "tied"], rows)

    if "chunk" in grans and "sentence" in grans:
        try:
            gc = correlate_granularities(grid, "chunk", "sentence", strict=False)
        except AnalysisError as exc:
            log.info("skipping granularity correlation: %s", exc)
        else:
            _table(files, "correlation_granularity_by_pair",
                   "Chunk vs sentence correlation by language pair", ["pair", "correlation"],
                   [[pair_label(p), _coef(v)] for p, v in gc.by_pair.items()])
            _table(files, "correlation_granularity_by_method",
                   "Chunk vs sentence correlation by method", ["method", "correlation"],
                   [[m, _coef(v)] for m, v in gc.by_method.items()])

    if fingerprints:
        files.update(render_fingerprint_summary(fingerprints))
    return files


def render_fingerprint_summary(fingerprints: Sequence[Fingerprint]) -> dict[str, str]:
    files: dict[str, str] = {}
    rows = [[fp.method, f"{fp.best.threshold:.3f}", f"{fp.best.precision:.3f}",
             f"{fp.best.recall:.3f}", f"{fp.best.mean_f1:.3f}"] for fp in fingerprints]
    _table(files, "fingerprint_summary", "Match/mismatch operating points",
           ["method", "threshold", "precision", "recall", "f1"], rows)
    return files


def write_files(files: dict[str, str], out_dir: "str | Path") -> list[Path]:
    """Write all files or none."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    tmp = Path(tempfile.mkdtemp(prefix=".report-", dir=out))
    try:
        for name, content in files.items():
            (tmp / name).write_bytes(content.encode("utf-8"))
        written = []
        for name in sorted(files):
            os.replace(tmp / name, out / name)
            written.append(out / name)
        return written
    finally:
        shutil.rmtree(tmp, ignore_errors=True)


def emit_reports(grid: ResultGrid, out_dir: "str | Path",
                 fingerprints: Sequence[Fingerprint] = ()) -> list[Path]:
    return write_files(render_reports(grid, fingerprints), out_dir)
