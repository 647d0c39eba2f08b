"""The compiled kernels must agree with the pure-Python fallback bit for bit."""

import numpy as np
import pytest

from bmp import _kernels, _pykernels
from bmp.bmindex import build_block_max
from bmp.core import SearchParams
from bmp.engine import build_index
from bmp.search import estimate_threshold, partial_sort_blocks, prune_query_terms

ck = pytest.importorskip("bmp._ckernels")


def test_backend_selected():
    assert _kernels.BACKEND in ("cython", "python")
    assert [m.NAME for m in _kernels.available_backends()] == ["python", "cython"]


def test_counting_sort_parity(rng):
    for _ in range(200):
        n = int(rng.integers(0, 5000))
        ub = rng.integers(0, int(rng.choice([2, 300, 70000, 3_000_000])), size=n).astype(np.uint32)
        tau = int(rng.integers(0, 500))
        a, b = _pykernels.counting_sort_blocks(ub, tau), ck.counting_sort_blocks(ub, tau)
        assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])


def test_decode_parity(small_corpus):
    idx = build_index(small_corpus.documents, small_corpus.num_docs, 8, "compressed")
    bm = idx.bm
    for t in range(0, bm.num_terms, 7):
        off = int(bm.offsets[t])
        a, b = _pykernels.decode_term(bm.data, off), ck.decode_term(bm.data, off)
        assert all(np.array_equal(x, y) for x, y in zip(a, b))
        assert _pykernels.read_term_header(bm.data, off) == ck.read_term_header(bm.data, off)


@pytest.mark.parametrize("b", [8, 64])
def test_process_blocks_parity(clustered_corpus, b):
    c = clustered_corpus
    idx = build_index(c.documents, c.num_docs, b, "raw")
    f = idx.bfi
    for q in c.queries:
        for alpha, beta, max_blocks in ((1.0, 1.0, None), (0.6, 0.5, None), (1.0, 1.0, 3)):
            qq = prune_query_terms(q, beta)
            ub_py = np.zeros(idx.num_blocks, dtype=np.uint32)
            ub_c = np.zeros(idx.num_blocks, dtype=np.uint32)
            _pykernels.upper_bounds_raw(idx.bm.raw, qq.terms, qq.weights, ub_py)
            ck.upper_bounds_raw(idx.bm.raw, qq.terms, qq.weights, ub_c)
            assert np.array_equal(ub_py, ub_c)
            queue = partial_sort_blocks(ub_py, estimate_threshold(idx.tq, qq, 10))
            args = (queue.block_ids, queue.upper_bounds, f.term_ptr, f.dir_terms, f.post_ptr,
                    f.local_ids, f.impacts, b, qq.terms, qq.weights, 10, alpha, max_blocks)
            d1, s1, e1 = _pykernels.process_blocks(*args)
            d2, s2, e2 = ck.process_blocks(*args)
            assert e1 == e2
            assert sorted(zip(d1.tolist(), s1.tolist())) == sorted(zip(d2.tolist(), s2.tolist()))


def test_compressed_bounds_parity(rng):
    postings = [sorted((int(d), int(rng.integers(1, 256)))
                       for d in rng.choice(3000, int(rng.integers(0, 400)), replace=False))
                for _ in range(50)]
    bm = build_block_max(postings, 3000, 16, "compressed", num_terms=50)
    terms = np.arange(0, 50, 3, dtype=np.uint32)
    weights = rng.integers(1, 1000, size=terms.size).astype(np.int64)
    a = np.zeros(bm.num_blocks, dtype=np.uint32)
    b = np.zeros(bm.num_blocks, dtype=np.uint32)
    _pykernels.upper_bounds_compressed(bm.data, bm.offsets, terms, weights, a)
    ck.upper_bounds_compressed(bm.data, bm.offsets, terms, weights, b)
    assert np.array_equal(a, b)


def test_search_results_equal_across_backends(small_corpus, monkeypatch):
    idx = build_index(small_corpus.documents, small_corpus.num_docs, 32)
    params = SearchParams(k=25, alpha=0.8)
    results = {}
    for mod in _kernels.available_backends():
        for name in ("upper_bounds_raw", "upper_bounds_compressed", "decode_term",
                     "counting_sort_blocks", "evaluate_block", "process_blocks"):
            monkeypatch.setattr(_kernels, name, getattr(mod, name))
        results[mod.NAME] = [idx.search(q, params) for q in small_corpus.queries]
    assert results["python"] == results["cython"]
