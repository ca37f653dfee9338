"""Compare the numba and pure-numpy kernel paths.

Usage: python3 benchmarks/bench_kernels.py [--repeat 5]

Times ``pair_dots`` on a random sparse trigram-like matrix and ``em_step`` on
a synthetic parallel corpus, checks both paths agree, and prints a table.
"""
import argparse
import time

import numpy as np

from xlingsim import _kernels
from xlingsim.lexres import _encode_corpus


def random_csr(rng, n_rows, n_cols, nnz_per_row):
    ptr = np.zeros(n_rows + 1, dtype=np.int64)
    idx, val = [], []
    for r in range(n_rows):
        k = int(rng.integers(1, 2 * nnz_per_row))
        cols = np.sort(rng.choice(n_cols, size=min(k, n_cols), replace=False))
        idx.append(cols)
        val.append(rng.random(len(cols)))
        ptr[r + 1] = ptr[r] + len(cols)
    return ptr, np.concatenate(idx).astype(np.int64), np.concatenate(val)


def random_pairs(rng, n_pairs, vocab=2000):
    words = [f"w{i}" for i in range(vocab)]
    out = []
    for _ in range(n_pairs):
        n = int(rng.integers(5, 25))
        src = [words[i] for i in rng.integers(0, vocab, n)]
        tgt = [words[i] for i in rng.integers(0, vocab, n + int(rng.integers(-2, 3)))]
        out.append((src, tgt))
    return out


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    rng = np.random.default_rng(args.seed)

    ptr, idx, val = random_csr(rng, 2000, 20000, 60)
    rows = rng.integers(0, 2000, 200_000)
    cols = rng.integers(0, 2000, 200_000)
    csr = _kernels._as_csr_args(ptr, idx, val, ptr, idx, val, rows, cols)

    enc = _encode_corpus(random_pairs(rng, 5000))
    prob = np.full(len(enc["slot_src"]), 0.01)
    em_args = (prob, enc["cell_slot"], enc["cell_group"], enc["slot_src"],
               len(enc["src_vocab"]), enc["group_logz"])

    cases = [
        ("pair_dots (200k pairs)", _kernels.pair_dots_numba, _kernels.pair_dots_numpy, csr),
        (f"em_step ({len(enc['cell_slot']):,} cells)", _kernels.em_step_numba,
         _kernels.em_step_numpy, em_args),
    ]
    print(f"numba available: {_kernels.HAVE_NUMBA}  (default path: "
          f"{'numba' if _kernels.USE_NUMBA else 'numpy'})")
    print(f"{'kernel':<32}{'numba s':>10}{'numpy s':>10}{'speedup':>10}")
    for name, fast, slow, fargs in cases:
        a, b = fast(*fargs), slow(*fargs)  # warm-up and JIT compile
        if isinstance(a, tuple):
            np.testing.assert_allclose(a[0], b[0], rtol=1e-10)
            np.testing.assert_allclose(a[1], b[1], rtol=1e-10)
        else:
            np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-12)
        t_fast = best_of(lambda: fast(*fargs), args.repeat)
        t_slow = best_of(lambda: slow(*fargs), args.repeat)
        print(f"{name:<32}{t_fast:>10.4f}{t_slow:>10.4f}{t_slow / t_fast:>9.1f}x")


if __name__ == "__main__":
    main()
