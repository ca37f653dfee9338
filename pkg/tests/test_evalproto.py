from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from xlingsim.corpus import AlignedCorpus, CorpusError
from xlingsim.evalproto import (
    N_BINS,
    EvalResult,
    ScoreMatrix,
    build_matrix,
    ci_half_width,
    combine_folds,
    distractors,
    fingerprint,
    fingerprint_csv,
    fingerprint_svg,
    run_folds,
    score_bins,
    sweep_scores,
    sweep_threshold,
)
from xlingsim.methods import OracleScorer, RandomScorer, Scorer

from synth import make_corpus


def brute_force_f1(scores, positive):
    """Best F1 over every observed score used as a threshold, in exact arithmetic."""
    scores = list(map(float, scores))
    positive = list(map(bool, positive))
    n_pos = sum(positive)
    best = Fraction(0)
    for t in set(scores):
        pred = [s >= t for s in scores]
        tp = sum(p and y for p, y in zip(pred, positive))
        denom = sum(pred) + n_pos
        if denom:
            best = max(best, Fraction(2 * tp, denom))
    return float(best)


class FlakyScorer(Scorer):
    """Fails on one specific pair and returns NaN on another."""

    method = "flaky"

    def score(self, a, b):
        if a.pair_id == b.pair_id and a.pair_id.endswith("/1"):
            raise ValueError("boom")
        if a.pair_id == b.pair_id and a.pair_id.endswith("/2"):
            return float("nan")
        return 0.25


class TestBuildMatrix:
    def test_shape(self):
        c = make_corpus(n_pairs=3)
        mat = build_matrix(c, RandomScorer(), 1000, seed=1)
        assert mat.scores.shape == (3, 1000)
        assert mat.relevant.sum() == 3
        assert np.array_equal(mat.target_idx[:, 0], np.arange(3))

    def test_m_one(self):
        c = make_corpus(n_pairs=4)
        mat = build_matrix(c, OracleScorer(), 1, seed=0)
        assert mat.scores.shape == (4, 1)
        np.testing.assert_array_equal(mat.scores[:, 0], 1.0)

    def test_oracle_one_hit_per_row(self):
        c = make_corpus(n_pairs=20)
        mat = build_matrix(c, OracleScorer(), 50, seed=3)
        np.testing.assert_array_equal(mat.scores.sum(axis=1), 1.0)
        np.testing.assert_array_equal(mat.scores[:, 0], 1.0)

    def test_distractors_exclude_aligned(self):
        c = make_corpus(n_pairs=5)
        mat = build_matrix(c, RandomScorer(), 200, seed=9)
        for i in range(5):
            assert i not in mat.target_idx[i, 1:]
        assert set(mat.target_idx[0, 1:]) == {1, 2, 3, 4}

    def test_single_pair_corpus(self):
        c = make_corpus(n_pairs=1)
        mat = build_matrix(c, OracleScorer(), 3, seed=0)
        np.testing.assert_array_equal(mat.target_idx, [[0, 0, 0]])

    def test_rows_are_independent_of_block_layout(self, monkeypatch):
        from xlingsim import evalproto
        c = make_corpus(n_pairs=30)
        a = build_matrix(c, RandomScorer(4), 40, seed=11)
        monkeypatch.setattr(evalproto, "ROW_BLOCK", 7)
        b = build_matrix(c, RandomScorer(4), 40, seed=11)
        np.testing.assert_array_equal(a.scores, b.scores)
        np.testing.assert_array_equal(a.target_idx[3, 1:], distractors(30, 3, 40, 11 ^ 3))

    def test_deterministic(self):
        c = make_corpus(n_pairs=10)
        a = build_matrix(c, RandomScorer(), 30, seed=5)
        b = build_matrix(c, RandomScorer(), 30, seed=5)
        np.testing.assert_array_equal(a.scores, b.scores)

    def test_scorer_errors_become_zero(self):
        c = make_corpus(n_pairs=4)
        mat = build_matrix(c, FlakyScorer(), 3, seed=0)
        assert mat.errors == 2
        # pair ids carry 1-based line numbers
        assert mat.scores[0, 0] == 0.0 and mat.scores[1, 0] == 0.0
        assert mat.scores[2, 0] == 0.25
        assert np.all((mat.scores >= 0) & (mat.scores <= 1))

    def test_invalid(self):
        with pytest.raises(ValueError):
            build_matrix(make_corpus(n_pairs=2), OracleScorer(), 0, seed=0)
        empty = AlignedCorpus.from_texts([], [], src_lang="en", tgt_lang="fr")
        with pytest.raises(CorpusError):
            build_matrix(empty, OracleScorer(), 5, seed=0)

    def test_csv_dump(self, tmp_path):
        c = make_corpus(n_pairs=2)
        mat = build_matrix(c, OracleScorer(), 2, seed=0)
        mat.to_csv(tmp_path / "m.csv", [u.id for u in c.targets])
        lines = (tmp_path / "m.csv").read_text().splitlines()
        assert lines[0] == "row_id,col_rank,target_id,score,is_relevant"
        assert len(lines) == 5
        assert lines[1].endswith(",1.0,1")


class TestSweep:
    def test_hand_example(self):
        r = sweep_scores([0.9, 0.8, 0.7, 0.1], [True, False, True, False])
        assert r.f1 == pytest.approx(0.8)
        assert r.threshold == pytest.approx(0.4)
        assert (r.precision, r.recall) == (pytest.approx(2 / 3), 1.0)

    def test_oracle_matrix(self):
        scores = np.zeros((5, 10))
        scores[:, 0] = 1.0
        r = sweep_threshold(ScoreMatrix(np.zeros((5, 10), int), scores, 10, 0))
        assert (r.precision, r.recall, r.f1) == (1.0, 1.0, 1.0)
        assert r.threshold == 1.0

    @pytest.mark.parametrize("n,m", [(1, 1), (3, 10), (10, 1000)])
    def test_equal_scores(self, n, m):
        scores = np.full((n, m), 0.3)
        r = sweep_threshold(ScoreMatrix(np.zeros((n, m), int), scores, m, 0))
        assert r.f1 == pytest.approx(2 * n / (n + n * m))
        assert r.recall == 1.0

    def test_ties_prefer_larger_threshold(self):
        # predicting {0.9} or all four both give F1 = 2/3
        r = sweep_scores([0.9, 0.8, 0.7, 0.6], [True, False, False, True])
        assert r.f1 == pytest.approx(2 / 3)
        assert r.threshold == pytest.approx(0.85)

    def test_no_positives(self):
        r = sweep_scores([0.2, 0.4], [False, False])
        assert r.f1 == 0.0 and r.threshold == 1.0

    @settings(max_examples=200, deadline=None)
    @given(st.lists(st.tuples(st.sampled_from([0.0, 0.1, 0.25, 0.5, 0.75, 1.0]), st.booleans()),
                    min_size=1, max_size=40))
    def test_brute_force_and_maximality(self, cells):
        scores = np.array([c[0] for c in cells])
        pos = np.array([c[1] for c in cells])
        r = sweep_scores(scores, pos)
        assert r.f1 == brute_force_f1(scores, pos)
        assert r.f1 == pytest.approx(2 * r.precision * r.recall / (r.precision + r.recall)
                                     if r.precision + r.recall else 0.0)
        # nothing on the candidate grid beats it
        for t in np.linspace(0, 1, 41):
            pred = scores >= t
            tp = int((pred & pos).sum())
            denom = int(pred.sum() + pos.sum())
            assert (2 * tp / denom if denom else 0.0) <= r.f1 + 1e-15

    @settings(max_examples=100, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_monotone_transform_invariance(self, seed):
        rng = np.random.default_rng(seed)
        scores = rng.random((6, 8))
        pos = np.zeros_like(scores, dtype=bool)
        pos[:, 0] = True
        base = sweep_scores(scores, pos)
        for fn in (np.sqrt, lambda x: x ** 3, lambda x: 0.2 + 0.5 * x):
            assert sweep_scores(fn(scores), pos).f1 == base.f1


class TestFolds:
    def test_ci_half_width(self):
        vals = [0.5, 0.52, 0.49, 0.51]
        expected = stats.t.ppf(0.975, 3) * np.std(vals, ddof=1) / 2
        assert ci_half_width(vals) == pytest.approx(expected)
        assert ci_half_width([0.7]) == 0.0
        assert ci_half_width([0.7, 0.7, 0.7]) == 0.0

    def test_single_fold(self):
        c = make_corpus(n_pairs=20)
        r = run_folds(c, RandomScorer(), m=10, folds=1, base_seed=4)
        assert len(r.fold_f1s) == 1
        assert r.mean_f1 == r.fold_f1s[0] and r.ci_half_width == 0.0

    def test_oracle_perfect(self):
        c = make_corpus(n_pairs=25)
        r = run_folds(c, OracleScorer(), m=40, folds=4, base_seed=1)
        assert r.fold_f1s == (1.0,) * 4
        assert r.mean_f1 == 1.0 and r.ci_half_width == 0.0

    def test_deterministic_and_seed_sensitive(self):
        c = make_corpus(n_pairs=20)
        a = run_folds(c, RandomScorer(), m=15, folds=3, base_seed=2)
        b = run_folds(c, RandomScorer(), m=15, folds=3, base_seed=2)
        d = run_folds(c, RandomScorer(), m=15, folds=3, base_seed=3)
        assert a.fold_f1s == b.fold_f1s
        assert a.fold_f1s != d.fold_f1s

    def test_combine(self):
        rs = [EvalResult(0.2, 0.5, 1.0, 2 / 3), EvalResult(0.4, 1.0, 0.5, 2 / 3)]
        r = combine_folds(rs)
        assert r.threshold == pytest.approx(0.3)
        assert (r.precision, r.recall) == (0.75, 0.75)
        assert r.f1 == pytest.approx(0.75)
        assert r.mean_f1 == pytest.approx(2 / 3)

    def test_invalid_folds(self):
        with pytest.raises(ValueError):
            run_folds(make_corpus(n_pairs=3), OracleScorer(), m=2, folds=0)


class TestFingerprint:
    def _subcorpora(self, n_corpora=3, n_pairs=30):
        return [make_corpus(seed=i, n_pairs=n_pairs, subcorpus=f"sc{i}") for i in range(n_corpora)]

    def test_counts(self):
        fp = fingerprint(self._subcorpora(), RandomScorer(), pairs_per_corpus=20, folds=2, seed=0)
        assert fp.n_pos == fp.n_neg == 2 * 3 * 20
        assert fp.pos_hist.sum() == fp.n_pos and fp.neg_hist.sum() == fp.n_neg
        assert fp.pos_hist.shape == (N_BINS,)

    def test_oracle(self):
        fp = fingerprint(self._subcorpora(), OracleScorer(), pairs_per_corpus=20, folds=3)
        assert fp.pos_hist[N_BINS - 1] == fp.n_pos
        assert fp.neg_hist[0] == fp.n_neg
        assert fp.best.f1 == 1.0 and fp.best.mean_f1 == 1.0

    def test_insufficient_pairs(self):
        small = self._subcorpora(n_pairs=20)
        with pytest.raises(CorpusError, match="sc0"):
            fingerprint(small, RandomScorer(), pairs_per_corpus=20)

    def test_bins(self):
        np.testing.assert_array_equal(score_bins([0.0, 0.005, 0.01, 0.999, 1.0]), [0, 0, 1, 99, 99])

    def test_outputs(self):
        fp = fingerprint(self._subcorpora(), OracleScorer(), pairs_per_corpus=10, folds=1)
        lines = fingerprint_csv(fp).splitlines()
        assert lines[0] == "bin,pos_count,neg_count"
        assert len(lines) == N_BINS + 2
        assert lines[-1] == "total,30,30"
        assert lines[-2] == "99,30,0"
        svg = fingerprint_svg(fp)
        assert svg.startswith("<svg") and 'fill="white"' in svg and 'fill="black"' in svg
