"""Exhaustive reference scorer.

Scores every document by the integer dot product over quantized vectors.
Shares no code with the block-max path; it is the ground truth that path is
checked against.
"""

from __future__ import annotations

import numpy as np

from .core import QuantizedQuery, TopKResult


class ExhaustiveScorer:
    """Document-major posting arrays, reusable across many queries."""

    def __init__(self, documents):
        docs, terms, weights = [], [], []
        for doc_id, vec in documents:
            docs.append(np.full(len(vec), int(doc_id), dtype=np.int64))
            terms.append(vec.terms.astype(np.int64))
            weights.append(np.asarray(vec.weights, dtype=np.int64))
        self.docs = np.concatenate(docs) if docs else np.zeros(0, dtype=np.int64)
        self.terms = np.concatenate(terms) if terms else np.zeros(0, dtype=np.int64)
        self.weights = np.concatenate(weights) if weights else np.zeros(0, dtype=np.int64)
        self.num_docs = int(self.docs.max()) + 1 if self.docs.size else 0

    def scores(self, query: QuantizedQuery) -> np.ndarray:
        """Exact score of every document id in ``[0, num_docs)``."""
        vocab = int(self.terms.max()) + 1 if self.terms.size else 0
        qw = np.zeros(vocab, dtype=np.int64)
        inside = query.terms < vocab
        qw[query.terms[inside].astype(np.int64)] = query.weights[inside]
        contrib = qw[self.terms] * self.weights
        hit = contrib > 0
        out = np.zeros(self.num_docs, dtype=np.int64)
        np.add.at(out, self.docs[hit], contrib[hit])
        return out

    def topk(self, query: QuantizedQuery, k: int) -> TopKResult:
        s = self.scores(query)
        cand = np.flatnonzero(s > 0)
        order = np.lexsort((cand, -s[cand]))[:k]
        top = cand[order]
        return TopKResult(tuple(zip(top.tolist(), s[top].tolist())))


def oracle_topk(collection, query: QuantizedQuery, k: int) -> TopKResult:
    return ExhaustiveScorer(collection).topk(query, k)
