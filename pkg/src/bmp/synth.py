"""Seeded synthetic learned-sparse collections for tests and benchmarks."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import QuantizedVector, Quantizer, SparseVector, quantize_document, quantize_query


def zipf_probs(vocab: int, exponent: float = 1.0) -> np.ndarray:
    p = 1.0 / np.arange(1, vocab + 1, dtype=np.float64) ** exponent
    return p / p.sum()


def _sample_without_replacement(rng, logp, sizes, batch=512):
    """Weighted sampling without replacement via the Gumbel top-k trick."""
    out = []
    for lo in range(0, len(sizes), batch):
        sz = sizes[lo:lo + batch]
        keys = logp + rng.gumbel(size=(len(sz), logp.size))
        top = np.argsort(-keys, axis=1)[:, : int(sz.max()) if len(sz) else 0]
        out.extend(top[i, :s] for i, s in enumerate(sz))
    return out


def random_vectors(rng, vocab, sizes, exponent=1.0, gamma_shape=2.0, gamma_scale=0.5,
                   topic_of=None, perms=None):
    """SparseVectors with Zipf-distributed terms and gamma-distributed weights.

    With ``topic_of`` each vector maps Zipf ranks to terms through its topic's
    permutation in ``perms``, so vectors of one topic share a vocabulary.
    """
    logp = np.log(zipf_probs(vocab, exponent))
    picks = _sample_without_replacement(rng, logp, np.asarray(sizes))
    vecs = []
    for i, ranks in enumerate(picks):
        terms = perms[topic_of[i]][ranks] if topic_of is not None else ranks
        w = rng.gamma(gamma_shape, gamma_scale, size=terms.size)
        vecs.append(SparseVector(zip(terms.tolist(), w.tolist())))
    return vecs


@dataclass
class SyntheticCorpus:
    doc_vectors: list
    query_vectors: list
    quantizer: Quantizer
    documents: list  # [(doc_id, QuantizedVector)]
    queries: list  # [QuantizedVector]
    vocab: int

    @property
    def num_docs(self) -> int:
        return len(self.documents)


def make_corpus(num_docs=20_000, vocab=5_000, avg_terms=40, num_queries=200,
                min_query_terms=2, max_query_terms=40, seed=0, exponent=1.0,
                num_topics=1, query_scale=100.0) -> SyntheticCorpus:
    """Documents and queries quantized the way the engine expects.

    ``num_topics > 1`` assigns documents to topics in contiguous doc-id
    ranges, a stand-in for a similarity-based doc-id reordering.
    """
    rng = np.random.default_rng(seed)
    perms = [np.arange(vocab)] + [rng.permutation(vocab) for _ in range(num_topics - 1)]
    sizes = np.clip(rng.poisson(avg_terms, size=num_docs), 1, vocab)
    topic_of = qtopic = None
    if num_topics > 1:
        topic_of = np.sort(rng.integers(0, num_topics, size=num_docs))
        qtopic = rng.integers(0, num_topics, size=num_queries)
    docs = random_vectors(rng, vocab, sizes, exponent, topic_of=topic_of, perms=perms)
    qsizes = np.minimum(rng.integers(min_query_terms, max_query_terms + 1, size=num_queries), vocab)
    queries = random_vectors(rng, vocab, qsizes, exponent, topic_of=qtopic, perms=perms)

    max_w = max((float(v.weights.max()) for v in docs if len(v)), default=1.0)
    quantizer = Quantizer(max_w)
    qdocs = [(i, quantize_document(quantizer, v)) for i, v in enumerate(docs)]
    qqueries = [quantize_query(v, query_scale) for v in queries]
    return SyntheticCorpus(docs, queries, quantizer, qdocs, qqueries, vocab)


def random_small_collection(rng, max_docs=500, max_vocab=60, max_terms=12):
    """Tiny random collection of quantized documents for brute-force checks."""
    n = int(rng.integers(1, max_docs + 1))
    vocab = int(rng.integers(1, max_vocab + 1))
    docs = []
    for d in range(n):
        m = int(rng.integers(0, min(max_terms, vocab) + 1))
        terms = rng.choice(vocab, size=m, replace=False)
        imps = rng.integers(1, 256, size=m)
        docs.append((d, QuantizedVector(zip(terms.tolist(), imps.tolist()))))
    return docs, vocab


def random_small_query(rng, vocab, max_terms=10, max_weight=300):
    m = int(rng.integers(0, min(max_terms, vocab) + 1))
    terms = rng.choice(vocab + 3, size=m, replace=False)  # may include unknown terms
    w = rng.integers(1, max_weight + 1, size=m)
    return QuantizedVector(zip(terms.tolist(), w.tolist()))
