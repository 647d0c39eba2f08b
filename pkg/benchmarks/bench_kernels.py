"""Compare the compiled kernels with the pure-Python fallback.

    python3 benchmarks/bench_kernels.py --docs 20000 --queries 50

Both backends run the same safe-mode queries on the same index; results are
checked for equality before timings are reported.
"""

import argparse
import time

import numpy as np

from bmp import _kernels
from bmp.core import SearchParams
from bmp.engine import build_index
from bmp.search import partial_sort_blocks
from bmp.synth import make_corpus

KERNELS = ["upper_bounds_raw", "upper_bounds_compressed", "decode_term",
           "counting_sort_blocks", "evaluate_block", "process_blocks"]


def use(mod):
    for name in KERNELS:
        setattr(_kernels, name, getattr(mod, name))


def timed(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--docs", type=int, default=20_000)
    ap.add_argument("--vocab", type=int, default=5_000)
    ap.add_argument("--queries", type=int, default=50)
    ap.add_argument("--topics", type=int, default=50)
    ap.add_argument("--block-size", type=int, default=64)
    ap.add_argument("--k", type=int, default=10)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    corpus = make_corpus(num_docs=args.docs, vocab=args.vocab, num_queries=args.queries,
                         seed=args.seed, num_topics=args.topics)
    rng = np.random.default_rng(args.seed)
    ub = rng.integers(0, 5000, size=200_000).astype(np.uint32)
    backends = _kernels.available_backends()
    results = {}
    print(f"docs={args.docs} queries={args.queries} b={args.block_size} k={args.k}")
    print(f"{'backend':<8} {'mode':<11} {'search ms/q':>12} {'sort ms':>9}")
    for mode in ("raw", "compressed"):
        index = build_index(corpus.documents, corpus.num_docs, args.block_size, mode, num_terms=corpus.vocab)
        for mod in backends:
            use(mod)
            params = SearchParams(k=args.k)
            t_search, res = timed(lambda: [index.search(q, params) for q in corpus.queries], args.repeat)
            t_sort, _ = timed(lambda: partial_sort_blocks(ub, 100), args.repeat)
            results[(mod.NAME, mode)] = (t_search, res)
            print(f"{mod.NAME:<8} {mode:<11} {1e3 * t_search / len(corpus.queries):>12.3f} {1e3 * t_sort:>9.2f}")
        names = [m.NAME for m in backends]
        first = results[(names[0], mode)][1]
        if any(results[(n, mode)][1] != first for n in names[1:]):
            raise SystemExit(f"backends disagree in {mode} mode")
    if len(backends) > 1:
        for mode in ("raw", "compressed"):
            speedup = results[("python", mode)][0] / results[("cython", mode)][0]
            print(f"speedup ({mode}): {speedup:.1f}x")
    use(_kernels.backend)


if __name__ == "__main__":
    main()
