"""Hybrid block-forward index.

For each block of ``b`` documents we keep a sorted directory of the terms that
occur in it, and per directory entry a short posting list of
``(local_doc, impact)`` pairs. All blocks share five flat arrays:

``term_ptr[j]:term_ptr[j+1]``
    directory slice of block ``j`` inside ``dir_terms``
``post_ptr[e]:post_ptr[e+1]``
    postings of directory entry ``e`` inside ``local_ids`` / ``impacts``
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .core import (
    CorruptInputError,
    InvalidArgumentError,
    QuantizedQuery,
    check_block_size,
    num_blocks_for,
)


@dataclass(eq=False)
class BlockForwardIndex:
    block_size: int
    num_docs: int
    term_ptr: np.ndarray
    dir_terms: np.ndarray
    post_ptr: np.ndarray
    local_ids: np.ndarray
    impacts: np.ndarray

    def __post_init__(self):
        self.block_size = check_block_size(self.block_size)
        self.term_ptr = np.ascontiguousarray(self.term_ptr, dtype=np.int64)
        self.dir_terms = np.ascontiguousarray(self.dir_terms, dtype=np.uint32)
        self.post_ptr = np.ascontiguousarray(self.post_ptr, dtype=np.int64)
        self.local_ids = np.ascontiguousarray(self.local_ids, dtype=np.uint8)
        self.impacts = np.ascontiguousarray(self.impacts, dtype=np.uint8)
        if self.term_ptr.size != self.num_blocks + 1:
            raise CorruptInputError("term_ptr length does not match number of blocks")
        if self.post_ptr.size != self.dir_terms.size + 1:
            raise CorruptInputError("post_ptr length does not match directory size")

    @property
    def num_blocks(self) -> int:
        return num_blocks_for(self.num_docs, self.block_size)

    @property
    def num_postings(self) -> int:
        return int(self.local_ids.size)

    @property
    def directory_size(self) -> int:
        return int(self.dir_terms.size)

    def block(self, j: int) -> dict:
        """Readable view of block ``j``: ``{term: [(local_doc, impact), ...]}``."""
        s, e = int(self.term_ptr[j]), int(self.term_ptr[j + 1])
        out = {}
        for i in range(s, e):
            ps, pe = int(self.post_ptr[i]), int(self.post_ptr[i + 1])
            out[int(self.dir_terms[i])] = list(zip(self.local_ids[ps:pe].tolist(), self.impacts[ps:pe].tolist()))
        return out

    def __eq__(self, other):
        if not isinstance(other, BlockForwardIndex):
            return NotImplemented
        return (self.block_size, self.num_docs) == (other.block_size, other.num_docs) and all(
            np.array_equal(getattr(self, f), getattr(other, f))
            for f in ("term_ptr", "dir_terms", "post_ptr", "local_ids", "impacts")
        )


def build_from_coo(docs, terms, impacts, n, b) -> BlockForwardIndex:
    """Build from flat posting arrays with unique (doc, term) pairs."""
    b = check_block_size(b)
    nb = num_blocks_for(n, b)
    docs = np.asarray(docs, dtype=np.int64)
    terms = np.asarray(terms, dtype=np.int64)
    impacts = np.asarray(impacts, dtype=np.uint8)
    blocks, local = np.divmod(docs, b)
    order = np.lexsort((local, terms, blocks))
    blocks, terms, local, impacts = blocks[order], terms[order], local[order], impacts[order]
    new_entry = np.ones(blocks.size, dtype=bool)
    if blocks.size:
        new_entry[1:] = (blocks[1:] != blocks[:-1]) | (terms[1:] != terms[:-1])
    starts = np.flatnonzero(new_entry)
    dir_terms = terms[starts]
    dir_blocks = blocks[starts]
    post_ptr = np.append(starts, blocks.size)
    term_ptr = np.searchsorted(dir_blocks, np.arange(nb + 1))
    return BlockForwardIndex(b, n, term_ptr, dir_terms, post_ptr, local, impacts)


def documents_to_coo(documents, n):
    """Flatten ``(doc_id, QuantizedVector)`` pairs into (docs, terms, impacts)."""
    seen = np.zeros(n, dtype=bool)
    d_parts, t_parts, s_parts = [], [], []
    for doc_id, vec in documents:
        doc_id = int(doc_id)
        if not 0 <= doc_id < n:
            raise CorruptInputError(f"doc id {doc_id} outside [0, {n})")
        if seen[doc_id]:
            raise CorruptInputError(f"duplicate doc id {doc_id}")
        seen[doc_id] = True
        if len(vec) == 0:
            continue
        if vec.weights.min() < 1 or vec.weights.max() > 255:
            raise CorruptInputError(f"doc {doc_id}: impact outside 1..255")
        d_parts.append(np.full(len(vec), doc_id, dtype=np.int64))
        t_parts.append(vec.terms.astype(np.int64))
        s_parts.append(vec.weights)
    if not d_parts:
        z = np.zeros(0, dtype=np.int64)
        return z, z, z.astype(np.uint8)
    return (np.concatenate(d_parts), np.concatenate(t_parts),
            np.concatenate(s_parts).astype(np.uint8))


def build_block_forward(documents, n: int, b: int) -> BlockForwardIndex:
    docs, terms, impacts = documents_to_coo(documents, n)
    return build_from_coo(docs, terms, impacts, n, b)


def evaluate_block(bfi: BlockForwardIndex, j: int, query: QuantizedQuery, accumulators=None):
    """Exact scores of the documents in block ``j``.

    Returns a list of ``(doc_id, score)`` for documents with a positive score,
    ordered by doc id.
    """
    if not 0 <= j < bfi.num_blocks:
        raise InvalidArgumentError(f"block {j} outside [0, {bfi.num_blocks})")
    b = bfi.block_size
    if accumulators is None:
        accumulators = np.zeros(b, dtype=np.uint32)
    locs, scores = _kernels.evaluate_block(
        bfi.term_ptr, bfi.dir_terms, bfi.post_ptr, bfi.local_ids, bfi.impacts,
        b, j, query.terms, query.weights, accumulators,
    )
    base = j * b
    return [(base + loc, s) for loc, s in zip(locs.tolist(), scores.tolist())]
