"""Hot numeric kernels.

Each kernel has a numba implementation and a pure-numpy one with the same
signature.  The numba path is used when numba imports and the environment
variable ``XLINGSIM_DISABLE_NUMBA`` is unset (or ``0``); both paths are
always importable so they can be compared directly.

Sparse vectors are stored CSR-style: ``indptr`` of length ``n_rows + 1``,
sorted unique column ``indices`` per row, and float64 ``data``.
"""
from __future__ import annotations

import os

import numpy as np

__all__ = [
    "USE_NUMBA",
    "pair_dots",
    "pair_dots_numpy",
    "pair_dots_numba",
    "em_step",
    "em_step_numpy",
    "em_step_numba",
]


def _numba_wanted() -> bool:
    flag = os.environ.get("XLINGSIM_DISABLE_NUMBA", "").strip().lower()
    return flag in ("", "0", "false", "no")


try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

HAVE_NUMBA = numba is not None
USE_NUMBA = HAVE_NUMBA and _numba_wanted()


# -- sparse row-pair dot products ---------------------------------------------

def pair_dots_numpy(a_ptr, a_idx, a_val, b_ptr, b_idx, b_val, rows, cols):
    """out[k] = <A[rows[k]], B[cols[k]]> for CSR matrices A and B."""
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    out = np.zeros(len(rows), dtype=np.float64)
    if len(rows) == 0:
        return out
    # Expand every referenced row of A into (pair, column, value) triples,
    # then look each column up in the matching row of B by binary search on
    # a global key: pair ordering keeps the keys sorted.
    a_len = a_ptr[rows + 1] - a_ptr[rows]
    pair_of = np.repeat(np.arange(len(rows)), a_len)
    starts = np.repeat(a_ptr[rows], a_len)
    offs = np.arange(len(pair_of)) - np.repeat(np.cumsum(a_len) - a_len, a_len)
    a_pos = starts + offs
    a_cols = a_idx[a_pos]

    b_len = b_ptr[cols + 1] - b_ptr[cols]
    b_pair = np.repeat(np.arange(len(cols)), b_len)
    b_starts = np.repeat(b_ptr[cols], b_len)
    b_offs = np.arange(len(b_pair)) - np.repeat(np.cumsum(b_len) - b_len, b_len)
    b_pos = b_starts + b_offs

    width = np.int64(max(int(a_idx.max(initial=0)), int(b_idx.max(initial=0))) + 1)
    a_key = pair_of * width + a_cols
    b_key = b_pair * width + b_idx[b_pos]
    hit = np.searchsorted(b_key, a_key)
    hit_c = np.minimum(hit, max(len(b_key) - 1, 0))
    found = (hit < len(b_key)) & (b_key[hit_c] == a_key) if len(b_key) else np.zeros(len(a_key), bool)
    prod = a_val[a_pos[found]] * b_val[b_pos[hit_c[found]]]
    # Accumulate in row order so the summation order matches the merge kernel.
    for_pair = pair_of[found]
    np.add.at(out, for_pair, prod)
    return out


def _pair_dots_py(a_ptr, a_idx, a_val, b_ptr, b_idx, b_val, rows, cols):
    out = np.zeros(len(rows), dtype=np.float64)
    for k in range(len(rows)):
        i = a_ptr[rows[k]]
        i_end = a_ptr[rows[k] + 1]
        j = b_ptr[cols[k]]
        j_end = b_ptr[cols[k] + 1]
        acc = 0.0
        while i < i_end and j < j_end:
            ai = a_idx[i]
            bj = b_idx[j]
            if ai == bj:
                acc += a_val[i] * b_val[j]
                i += 1
                j += 1
            elif ai < bj:
                i += 1
            else:
                j += 1
        out[k] = acc
    return out


# -- IBM Model 1 EM step ------------------------------------------------------

def em_step_numpy(prob, cell_slot, cell_group, slot_src, n_src, group_logz):
    """One EM iteration over the flattened co-occurrence grid.

    ``cell_slot[c]`` is the table slot (s, t) of grid cell ``c`` and
    ``cell_group[c]`` the target-token occurrence it explains.  Cells are
    grouped contiguously by occurrence.  Returns the new slot probabilities
    and the corpus log-likelihood under ``prob`` (before the update).
    """
    pv = prob[cell_slot]
    n_groups = len(group_logz)
    denom = np.bincount(cell_group, weights=pv, minlength=n_groups)
    frac = pv / denom[cell_group]
    counts = np.bincount(cell_slot, weights=frac, minlength=len(prob))
    totals = np.bincount(slot_src, weights=counts, minlength=n_src)
    loglik = float(np.sum(np.log(denom)) - np.sum(group_logz))
    return counts / totals[slot_src], loglik


def _em_step_py(prob, cell_slot, cell_group, slot_src, n_src, group_logz):
    n_groups = len(group_logz)
    counts = np.zeros(len(prob))
    totals = np.zeros(n_src)
    loglik = 0.0
    c = 0
    n_cells = len(cell_slot)
    for g in range(n_groups):
        start = c
        denom = 0.0
        while c < n_cells and cell_group[c] == g:
            denom += prob[cell_slot[c]]
            c += 1
        for k in range(start, c):
            counts[cell_slot[k]] += prob[cell_slot[k]] / denom
        loglik += np.log(denom) - group_logz[g]
    for s in range(len(prob)):
        totals[slot_src[s]] += counts[s]
    new = np.empty(len(prob))
    for s in range(len(prob)):
        new[s] = counts[s] / totals[slot_src[s]]
    return new, loglik


if HAVE_NUMBA:
    pair_dots_numba = numba.njit(cache=True, nogil=True)(_pair_dots_py)
    em_step_numba = numba.njit(cache=True, nogil=True)(_em_step_py)
else:  # pragma: no cover
    pair_dots_numba = _pair_dots_py
    em_step_numba = _em_step_py


def _as_csr_args(a_ptr, a_idx, a_val, b_ptr, b_idx, b_val, rows, cols):
    return (np.ascontiguousarray(a_ptr, np.int64), np.ascontiguousarray(a_idx, np.int64),
            np.ascontiguousarray(a_val, np.float64), np.ascontiguousarray(b_ptr, np.int64),
            np.ascontiguousarray(b_idx, np.int64), np.ascontiguousarray(b_val, np.float64),
            np.ascontiguousarray(rows, np.int64), np.ascontiguousarray(cols, np.int64))


def pair_dots(a_ptr, a_idx, a_val, b_ptr, b_idx, b_val, rows, cols):
    args = _as_csr_args(a_ptr, a_idx, a_val, b_ptr, b_idx, b_val, rows, cols)
    if USE_NUMBA:
        return pair_dots_numba(*args)
    return pair_dots_numpy(*args)


def em_step(prob, cell_slot, cell_group, slot_src, n_src, group_logz):
    if USE_NUMBA:
        return em_step_numba(prob, cell_slot, cell_group, slot_src, n_src, group_logz)
    return em_step_numpy(prob, cell_slot, cell_group, slot_src, n_src, group_logz)
