"""Bundle of the three query-time structures plus a one-call builder."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

import numpy as np

from . import bmindex, fwdindex
from .core import CorruptInputError, QuantizedQuery, SearchParams, TopKResult, check_block_size
from .search import DEFAULT_RANKS, SearchStats, TermQuantiles, build_term_quantiles, search


@dataclass(eq=False)
class Index:
    bm: bmindex.BlockMaxIndex
    bfi: fwdindex.BlockForwardIndex
    tq: TermQuantiles
    manifest: Any = None

    @property
    def block_size(self) -> int:
        return self.bm.block_size

    @property
    def num_docs(self) -> int:
        return self.bm.num_docs

    @property
    def num_terms(self) -> int:
        return self.bm.num_terms

    @property
    def num_blocks(self) -> int:
        return self.bm.num_blocks

    def search(self, query: QuantizedQuery, params: SearchParams | None = None,
               stats: SearchStats | None = None) -> TopKResult:
        return search(self.bm, self.bfi, self.tq, query, params or SearchParams(), stats)

    def with_bm_mode(self, mode: str) -> "Index":
        return Index(self.bm.to_mode(mode), self.bfi, self.tq, self.manifest)

    def __eq__(self, other):
        if not isinstance(other, Index):
            return NotImplemented
        return (self.bm == other.bm and self.bfi == other.bfi and self.tq == other.tq
                and self.manifest == other.manifest)


def build_index(documents, n: int, b: int, mode: str = "compressed",
                num_terms: int | None = None, ranks=DEFAULT_RANKS, manifest=None) -> Index:
    """Build every structure from ``(doc_id, QuantizedVector)`` pairs."""
    b = check_block_size(b)
    docs, terms, impacts = fwdindex.documents_to_coo(documents, n)
    vocab = int(terms.max()) + 1 if terms.size else 0
    if num_terms is None:
        num_terms = vocab
    elif vocab > num_terms:
        raise CorruptInputError(f"term id {vocab - 1} outside vocabulary of size {num_terms}")
    bm = bmindex.build_from_coo(terms, docs, impacts, num_terms, n, b, mode)
    bfi = fwdindex.build_from_coo(docs, terms, impacts, n, b)
    tq = build_term_quantiles(terms, impacts.astype(np.int64), num_terms, ranks)
    return Index(bm, bfi, tq, manifest)
