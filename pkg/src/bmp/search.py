"""Query driver: term pruning, upper bounds, threshold estimate, block loop."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .bmindex import BlockMaxIndex, compute_upper_bounds
from .core import (
    InvalidArgumentError,
    QuantizedQuery,
    QuantizedVector,
    SearchParams,
    TopKResult,
)
from .fwdindex import BlockForwardIndex

DEFAULT_RANKS = (10, 100, 1000)


class TermQuantiles:
    """Per term, the r-th largest impact for each r in ``ranks`` (0 = absent)."""

    def __init__(self, ranks, values):
        self.ranks = tuple(int(r) for r in ranks)
        if not self.ranks:
            raise InvalidArgumentError("at least one quantile rank is required")
        if list(self.ranks) != sorted(set(self.ranks)) or (self.ranks and self.ranks[0] < 1):
            raise InvalidArgumentError(f"quantile ranks must be distinct, ascending and >= 1: {ranks!r}")
        self.values = np.ascontiguousarray(values, dtype=np.uint8).reshape(-1, len(self.ranks))

    @property
    def num_terms(self) -> int:
        return int(self.values.shape[0])

    def impact_at(self, t: int, r: int) -> int | None:
        c = self.ranks.index(r)
        if not 0 <= t < self.num_terms:
            return None
        v = int(self.values[t, c])
        return v or None

    def __eq__(self, other):
        if not isinstance(other, TermQuantiles):
            return NotImplemented
        return self.ranks == other.ranks and np.array_equal(self.values, other.values)

    def __repr__(self):
        return f"TermQuantiles(ranks={self.ranks}, V={self.num_terms})"


def build_term_quantiles(terms, impacts, num_terms, ranks=DEFAULT_RANKS) -> TermQuantiles:
    """From flat posting arrays (one entry per posting)."""
    ranks = tuple(sorted(set(int(r) for r in ranks)))
    terms = np.asarray(terms, dtype=np.int64)
    impacts = np.asarray(impacts, dtype=np.int64)
    order = np.lexsort((-impacts, terms))
    terms, impacts = terms[order], impacts[order]
    counts = np.bincount(terms, minlength=num_terms)[:num_terms]
    starts = np.concatenate(([0], np.cumsum(counts)[:-1])).astype(np.int64)
    values = np.zeros((num_terms, len(ranks)), dtype=np.uint8)
    for c, r in enumerate(ranks):
        has = counts >= r
        values[has, c] = impacts[starts[has] + r - 1]
    return TermQuantiles(ranks, values)


def prune_query_terms(query: QuantizedQuery, beta: float) -> QuantizedQuery:
    """Keep the ceil(beta * |q|) heaviest terms; ties keep the smaller term id."""
    if not (0 < beta <= 1):
        raise InvalidArgumentError(f"beta must be in (0, 1], got {beta!r}")
    n = len(query)
    if beta == 1 or n == 0:
        return query
    # tolerance absorbs binary representation error, e.g. 0.3 * 10
    keep = max(1, math.ceil(beta * n - 1e-9))
    if keep >= n:
        return query
    order = np.lexsort((query.terms, -query.weights))[:keep]
    order.sort()
    return QuantizedVector.from_arrays(query.terms[order], query.weights[order])


def estimate_threshold(tq: TermQuantiles, query: QuantizedQuery, k: int) -> int:
    """Lower bound on the k-th best score from single-term quantiles.

    A term with weight ``w`` whose r-th largest impact is ``v`` (``r >= k``)
    guarantees at least ``k`` documents scoring ``>= w * v``.
    """
    cols = [c for c, r in enumerate(tq.ranks) if r >= k]
    if not cols or len(query) == 0:
        return 0
    known = query.terms < tq.num_terms
    terms = query.terms[known].astype(np.int64)
    weights = query.weights[known]
    if terms.size == 0:
        return 0
    picked = np.zeros(terms.size, dtype=np.int64)
    for c in reversed(cols):
        v = tq.values[terms, c].astype(np.int64)
        picked = np.where(v > 0, v, picked)
    return int((weights * picked).max())


@dataclass
class CandidateQueue:
    """Blocks worth visiting, ordered by (upper bound desc, block id asc)."""

    block_ids: np.ndarray
    upper_bounds: np.ndarray

    def __len__(self):
        return int(self.block_ids.size)

    def __iter__(self):
        return iter(zip(self.block_ids.tolist(), self.upper_bounds.tolist()))

    def pairs(self) -> list:
        return list(self)


def partial_sort_blocks(ub: np.ndarray, threshold: int) -> CandidateQueue:
    ub = np.ascontiguousarray(ub, dtype=np.uint32)
    ids, vals = _kernels.counting_sort_blocks(ub, int(threshold))
    return CandidateQueue(ids, vals)


@dataclass
class SearchStats:
    blocks_total: int = 0
    candidates: int = 0
    blocks_evaluated: int = 0
    threshold: int = 0
    query_terms: int = 0

    @property
    def evaluated_fraction(self) -> float:
        return self.blocks_evaluated / self.blocks_total if self.blocks_total else 0.0


def search(bm: BlockMaxIndex, bfi: BlockForwardIndex, tq: TermQuantiles,
           query: QuantizedQuery, params: SearchParams,
           stats: SearchStats | None = None) -> TopKResult:
    """Top-k documents for ``query`` by block-max pruning.

    With ``alpha == beta == 1`` and no block cap the result equals the
    exhaustive top-k exactly.
    """
    if bm.block_size != bfi.block_size or bm.num_docs != bfi.num_docs:
        raise InvalidArgumentError(
            f"index mismatch: block-max (b={bm.block_size}, n={bm.num_docs}) vs "
            f"forward (b={bfi.block_size}, n={bfi.num_docs})"
        )
    if params.bm_mode is not None and params.bm_mode != bm.mode:
        raise InvalidArgumentError(f"index block-max layout is {bm.mode!r}, params ask for {params.bm_mode!r}")
    q = prune_query_terms(query, params.beta)
    ub = compute_upper_bounds(bm, q)
    tau = estimate_threshold(tq, q, params.k)
    queue = partial_sort_blocks(ub, tau)
    docs, scores, evaluated = _kernels.process_blocks(
        queue.block_ids, queue.upper_bounds,
        bfi.term_ptr, bfi.dir_terms, bfi.post_ptr, bfi.local_ids, bfi.impacts,
        bfi.block_size, q.terms, q.weights, params.k, float(params.alpha), params.max_blocks,
    )
    if stats is not None:
        stats.blocks_total = bm.num_blocks
        stats.candidates = len(queue)
        stats.blocks_evaluated = evaluated
        stats.threshold = tau
        stats.query_terms = len(q)
    return TopKResult.from_arrays(docs, scores)
