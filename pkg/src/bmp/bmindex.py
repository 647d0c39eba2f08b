"""Block-max index: per-term maxima over blocks of ``b`` consecutive doc ids.

Two layouts are supported:

raw
    a dense ``(V, num_blocks)`` uint8 matrix.
compressed
    one record per term, concatenated into a single byte buffer::

        count  : u32 little-endian, number of non-zero blocks
        width  : u8, bit width of every packed delta
        deltas : ceil(count * width / 8) bytes, LSB-first bit stream
        maxima : count bytes

    Deltas are taken between successive block ids, the first one from 0.
"""

from __future__ import annotations

import numpy as np

from . import _kernels
from .core import (
    CorruptInputError,
    InvalidArgumentError,
    QuantizedQuery,
    check_block_size,
    check_query_admissible,
    num_blocks_for,
)

MODES = ("raw", "compressed")
TERM_HEADER_BYTES = 5


def _check_mode(mode):
    if mode not in MODES:
        raise InvalidArgumentError(f"bm_mode must be one of {MODES}, got {mode!r}")
    return mode


def pack_bits(values: np.ndarray, width: int) -> bytes:
    if width == 0 or values.size == 0:
        return b""
    bits = (values[:, None] >> np.arange(width, dtype=np.int64)) & 1
    return np.packbits(bits.astype(np.uint8).ravel(), bitorder="little").tobytes()


def encode_term(block_ids: np.ndarray, maxima: np.ndarray) -> bytes:
    block_ids = np.asarray(block_ids, dtype=np.int64)
    deltas = np.diff(block_ids, prepend=0)
    width = int(deltas.max()).bit_length() if deltas.size else 0
    header = int(block_ids.size).to_bytes(4, "little") + bytes([width])
    return header + pack_bits(deltas, width) + np.asarray(maxima, dtype=np.uint8).tobytes()


class BlockMaxIndex:
    """Per-term block maxima in either raw or compressed layout."""

    def __init__(self, block_size, num_docs, num_terms, mode, raw=None, data=None, offsets=None):
        self.block_size = check_block_size(block_size)
        self.num_docs = int(num_docs)
        self.num_terms = int(num_terms)
        self.num_blocks = num_blocks_for(self.num_docs, self.block_size)
        self.mode = _check_mode(mode)
        if mode == "raw":
            raw = np.ascontiguousarray(raw, dtype=np.uint8)
            if raw.shape != (self.num_terms, self.num_blocks):
                raise CorruptInputError(
                    f"raw block-max shape {raw.shape} != ({self.num_terms}, {self.num_blocks})"
                )
            self.raw = raw
            self.data = None
            self.offsets = None
        else:
            self.raw = None
            self.data = np.ascontiguousarray(data, dtype=np.uint8)
            self.offsets = np.ascontiguousarray(offsets, dtype=np.int64)
            if self.offsets.shape != (self.num_terms + 1,):
                raise CorruptInputError("compressed block-max offsets have wrong length")

    def __eq__(self, other):
        if not isinstance(other, BlockMaxIndex):
            return NotImplemented
        same = (self.block_size, self.num_docs, self.num_terms, self.mode) == (
            other.block_size, other.num_docs, other.num_terms, other.mode)
        if not same:
            return False
        if self.mode == "raw":
            return np.array_equal(self.raw, other.raw)
        return np.array_equal(self.data, other.data) and np.array_equal(self.offsets, other.offsets)

    def __repr__(self):
        return (f"BlockMaxIndex(b={self.block_size}, n={self.num_docs}, V={self.num_terms}, "
                f"blocks={self.num_blocks}, mode={self.mode!r}, nbytes={self.nbytes})")

    @property
    def nbytes(self) -> int:
        if self.mode == "raw":
            return int(self.raw.nbytes)
        return int(self.data.nbytes)

    def term_entries(self, t: int):
        """Non-zero ``(block_ids, maxima)`` of term ``t``."""
        if not 0 <= t < self.num_terms:
            return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.uint8)
        if self.mode == "raw":
            ids = np.flatnonzero(self.raw[t])
            return ids.astype(np.int64), self.raw[t, ids]
        return _kernels.decode_term(self.data, int(self.offsets[t]))

    def to_mode(self, mode: str) -> "BlockMaxIndex":
        _check_mode(mode)
        if mode == self.mode:
            return self
        if mode == "raw":
            raw = np.zeros((self.num_terms, self.num_blocks), dtype=np.uint8)
            for t in range(self.num_terms):
                ids, imp = self.term_entries(t)
                raw[t, ids] = imp
            return BlockMaxIndex(self.block_size, self.num_docs, self.num_terms, "raw", raw=raw)
        records = [encode_term(*self.term_entries(t)) for t in range(self.num_terms)]
        return _from_records(self.block_size, self.num_docs, records)


def _from_records(b, n, records):
    sizes = np.fromiter((len(r) for r in records), dtype=np.int64, count=len(records))
    offsets = np.concatenate(([0], np.cumsum(sizes))).astype(np.int64)
    data = np.frombuffer(b"".join(records), dtype=np.uint8)
    return BlockMaxIndex(b, n, len(records), "compressed", data=data, offsets=offsets)


def build_from_coo(terms, docs, impacts, num_terms, n, b, mode) -> BlockMaxIndex:
    """Build from flat posting arrays; callers have validated the inputs."""
    b = check_block_size(b)
    _check_mode(mode)
    nb = num_blocks_for(n, b)
    terms = np.asarray(terms, dtype=np.int64)
    blocks = np.asarray(docs, dtype=np.int64) // b
    impacts = np.asarray(impacts, dtype=np.uint8)
    key = terms * max(nb, 1) + blocks
    order = np.lexsort((impacts, key))
    key, impacts = key[order], impacts[order]
    # last entry of each key group holds the group maximum after the sort
    last = np.ones(key.size, dtype=bool)
    if key.size:
        last[:-1] = key[1:] != key[:-1]
    key, maxima = key[last], impacts[last]
    t_of, blk_of = np.divmod(key, max(nb, 1))
    if mode == "raw":
        raw = np.zeros((num_terms, nb), dtype=np.uint8)
        raw[t_of, blk_of] = maxima
        return BlockMaxIndex(b, n, num_terms, "raw", raw=raw)
    bounds = np.searchsorted(t_of, np.arange(num_terms + 1))
    records = [
        encode_term(blk_of[bounds[t]:bounds[t + 1]], maxima[bounds[t]:bounds[t + 1]])
        for t in range(num_terms)
    ]
    return _from_records(b, n, records)


def build_block_max(postings, n: int, b: int, mode: str = "compressed", num_terms: int | None = None):
    """Build a block-max index from per-term posting lists.

    ``postings[t]`` is a doc-id-sorted sequence of ``(doc_id, impact)`` pairs.
    """
    b = check_block_size(b)
    _check_mode(mode)
    if num_terms is None:
        num_terms = len(postings)
    t_parts, d_parts, s_parts = [], [], []
    for t, plist in enumerate(postings):
        arr = np.asarray(plist, dtype=np.int64).reshape(-1, 2)
        if arr.size == 0:
            continue
        d, s = arr[:, 0], arr[:, 1]
        if d.min() < 0 or d.max() >= n:
            raise CorruptInputError(f"term {t}: doc id outside [0, {n})")
        if np.any(d[1:] <= d[:-1]):
            raise CorruptInputError(f"term {t}: postings not strictly sorted by doc id")
        if s.min() < 1 or s.max() > 255:
            raise CorruptInputError(f"term {t}: impact outside 1..255")
        t_parts.append(np.full(d.size, t, dtype=np.int64))
        d_parts.append(d)
        s_parts.append(s)
    if t_parts:
        terms, docs, imps = (np.concatenate(p) for p in (t_parts, d_parts, s_parts))
    else:
        terms = docs = imps = np.zeros(0, dtype=np.int64)
    return build_from_coo(terms, docs, imps, num_terms, n, b, mode)


def densify_term(bm: BlockMaxIndex, t: int) -> np.ndarray:
    if bm.mode == "raw" and 0 <= t < bm.num_terms:
        return bm.raw[t].copy()
    out = np.zeros(bm.num_blocks, dtype=np.uint8)
    ids, imp = bm.term_entries(t)
    out[ids] = imp
    return out


def compute_upper_bounds(bm: BlockMaxIndex, query: QuantizedQuery, out: np.ndarray | None = None) -> np.ndarray:
    """Weighted sum of block maxima over the query terms, one uint32 per block.

    ``out`` is optional caller-owned scratch of length ``num_blocks``.
    """
    check_query_admissible(query)
    if out is None:
        out = np.empty(bm.num_blocks, dtype=np.uint32)
    if bm.num_blocks == 0:
        return out
    if bm.mode == "raw":
        _kernels.upper_bounds_raw(bm.raw, query.terms, query.weights, out)
    else:
        _kernels.upper_bounds_compressed(bm.data, bm.offsets, query.terms, query.weights, out)
    return out
