import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from xlingsim import _kernels
from xlingsim.lexres import _encode_corpus


def random_csr(rng, n_rows, width, density):
    dense = np.where(rng.random((n_rows, width)) < density, rng.random((n_rows, width)), 0.0)
    ptr = np.zeros(n_rows + 1, dtype=np.int64)
    idx, val = [], []
    for i, row in enumerate(dense):
        nz = np.flatnonzero(row)
        idx.append(nz)
        val.append(row[nz])
        ptr[i + 1] = ptr[i] + len(nz)
    return dense, ptr, np.concatenate(idx).astype(np.int64), np.concatenate(val)


class TestPairDots:
    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(1, 8), st.integers(1, 8),
           st.integers(1, 12), st.floats(0.0, 1.0), st.integers(0, 40))
    def test_matches_dense(self, seed, na, nb, width, density, n_pairs):
        rng = np.random.default_rng(seed)
        da, *a = random_csr(rng, na, width, density)
        db, *b = random_csr(rng, nb, width, density)
        rows = rng.integers(0, na, n_pairs)
        cols = rng.integers(0, nb, n_pairs)
        expected = np.einsum("kj,kj->k", da[rows], db[cols])
        for fn in (_kernels.pair_dots_numpy, _kernels.pair_dots_numba, _kernels._pair_dots_py):
            np.testing.assert_allclose(fn(*a, *b, rows, cols), expected, rtol=1e-12, atol=1e-15)

    def test_empty_rows(self):
        ptr = np.array([0, 0, 0], dtype=np.int64)
        idx = np.zeros(0, dtype=np.int64)
        val = np.zeros(0)
        out = _kernels.pair_dots(ptr, idx, val, ptr, idx, val, [0, 1], [1, 0])
        np.testing.assert_array_equal(out, [0.0, 0.0])

    def test_no_pairs(self):
        _, *a = random_csr(np.random.default_rng(0), 3, 4, 0.5)
        assert _kernels.pair_dots(*a, *a, [], []).shape == (0,)


class TestEMStep:
    @settings(max_examples=40, deadline=None)
    @given(st.lists(st.tuples(st.lists(st.sampled_from("abcd"), max_size=4),
                              st.lists(st.sampled_from("wxyz"), min_size=1, max_size=4)),
                    min_size=1, max_size=6),
           st.integers(0, 2**32 - 1))
    def test_paths_agree(self, pairs, seed):
        enc = _encode_corpus(pairs)
        rng = np.random.default_rng(seed)
        prob = rng.random(len(enc["slot_src"])) + 0.05
        n_src = len(enc["src_vocab"])
        args = (enc["cell_slot"], enc["cell_group"], enc["slot_src"], n_src, enc["group_logz"])
        p_np, ll_np = _kernels.em_step_numpy(prob, *args)
        p_nb, ll_nb = _kernels.em_step_numba(prob, *args)
        p_py, ll_py = _kernels._em_step_py(prob, *args)
        np.testing.assert_allclose(p_nb, p_np, rtol=1e-12)
        np.testing.assert_allclose(p_py, p_np, rtol=1e-12)
        assert ll_nb == pytest.approx(ll_np, rel=1e-12, abs=1e-12)
        assert ll_py == pytest.approx(ll_np, rel=1e-12, abs=1e-12)
        sums = np.bincount(enc["slot_src"], weights=p_np, minlength=n_src)
        np.testing.assert_allclose(sums[np.unique(enc["slot_src"])], 1.0, atol=1e-12)


class TestFlag:
    @pytest.mark.parametrize("value,expected", [("1", "False"), ("0", "True"), ("", "True")])
    def test_env_flag(self, value, expected):
        env = dict(os.environ, XLINGSIM_DISABLE_NUMBA=value)
        out = subprocess.run([sys.executable, "-c",
                              "from xlingsim import _kernels; print(_kernels.USE_NUMBA)"],
                             env=env, capture_output=True, text=True, check=True)
        assert out.stdout.strip() == expected

    def test_numpy_path_trains_same_table(self, monkeypatch, toy_ibm_corpus):
        from xlingsim.lexres import train_ibm1
        monkeypatch.setattr(_kernels, "USE_NUMBA", True)
        a = train_ibm1(toy_ibm_corpus, 5)
        monkeypatch.setattr(_kernels, "USE_NUMBA", False)
        b = train_ibm1(toy_ibm_corpus, 5)
        for s, row in a.probs.items():
            for t, p in row.items():
                assert b.prob(s, t) == pytest.approx(p, rel=1e-12)
