"""Pure-Python/numpy implementations of the hot kernels.

Same signatures and outputs as the compiled ``_ckernels`` module; used when
the extension is unavailable or ``BMP_FORCE_PYTHON`` is set.
"""

import heapq

import numpy as np

NAME = "python"

MAX_COUNTING_BUCKETS = 1 << 20


def read_term_header(data, start):
    count = int(data[start]) | int(data[start + 1]) << 8 | int(data[start + 2]) << 16 | int(data[start + 3]) << 24
    width = int(data[start + 4])
    return count, width


def decode_term(data, start):
    """Decode one compressed block-max record into (block_ids, impacts)."""
    count, width = read_term_header(data, start)
    packed_start = start + 5
    packed_len = (count * width + 7) // 8
    imp_start = packed_start + packed_len
    impacts = np.asarray(data[imp_start:imp_start + count], dtype=np.uint8)
    if count == 0:
        return np.zeros(0, dtype=np.int64), impacts
    if width == 0:
        deltas = np.zeros(count, dtype=np.int64)
    else:
        bits = np.unpackbits(np.asarray(data[packed_start:imp_start], dtype=np.uint8), bitorder="little")
        bits = bits[: count * width].reshape(count, width).astype(np.int64)
        deltas = bits @ (np.int64(1) << np.arange(width, dtype=np.int64))
    return np.cumsum(deltas), impacts


def upper_bounds_raw(raw, terms, weights, out):
    out[:] = 0
    num_terms = raw.shape[0]
    for t, w in zip(terms.tolist(), weights.tolist()):
        if t < num_terms:
            out += raw[t].astype(np.uint32) * np.uint32(w)
    return out


def upper_bounds_compressed(data, offsets, terms, weights, out):
    out[:] = 0
    num_terms = offsets.shape[0] - 1
    for t, w in zip(terms.tolist(), weights.tolist()):
        if t < num_terms:
            ids, imp = decode_term(data, int(offsets[t]))
            if ids.size:
                out[ids] += imp.astype(np.uint32) * np.uint32(w)
    return out


def counting_sort_blocks(ub, threshold):
    """Blocks with ub >= max(threshold, 1), ordered by (ub desc, id asc)."""
    lo = max(int(threshold), 1)
    ids = np.flatnonzero(ub >= lo)
    if ids.size == 0:
        return ids.astype(np.int64), np.zeros(0, dtype=np.uint32)
    vals = ub[ids]
    hi = int(vals.max())
    if hi - lo + 1 > MAX_COUNTING_BUCKETS:
        order = np.lexsort((ids, -vals.astype(np.int64)))
        return ids[order].astype(np.int64), vals[order]
    bucket = hi - vals.astype(np.int64)
    counts = np.bincount(bucket, minlength=hi - lo + 1)
    nxt = np.concatenate(([0], np.cumsum(counts)[:-1])).tolist()
    out_ids = np.empty(ids.size, dtype=np.int64)
    for i, bk in zip(ids.tolist(), bucket.tolist()):
        out_ids[nxt[bk]] = i
        nxt[bk] += 1
    return out_ids, ub[out_ids]


def evaluate_block(term_ptr, dir_terms, post_ptr, local_ids, impacts, b, j, qterms, qweights, acc):
    """Score every document of block ``j``; returns (local ids, scores) with score > 0."""
    acc[:b] = 0
    s, e = int(term_ptr[j]), int(term_ptr[j + 1])
    bt = dir_terms[s:e]
    if bt.size and qterms.size:
        pos = np.searchsorted(bt, qterms)
        inside = pos < bt.size
        pos, qw, qt = pos[inside], qweights[inside], qterms[inside]
        hit = bt[pos] == qt
        for p, w in zip(pos[hit].tolist(), qw[hit].tolist()):
            ps, pe = int(post_ptr[s + p]), int(post_ptr[s + p + 1])
            acc[local_ids[ps:pe]] += impacts[ps:pe].astype(np.uint32) * np.uint32(w)
    nz = np.flatnonzero(acc[:b])
    return nz.astype(np.int64), acc[nz].astype(np.int64)


def process_blocks(block_ids, block_ubs, term_ptr, dir_terms, post_ptr, local_ids, impacts,
                   b, qterms, qweights, k, alpha, max_blocks):
    """Evaluate candidate blocks in order until the stop rule fires.

    Returns (docs, scores, blocks_evaluated); docs are unordered.
    """
    heap = []
    acc = np.zeros(b, dtype=np.uint32)
    evaluated = 0
    limit = -1 if max_blocks is None else int(max_blocks)
    for j, u in zip(block_ids.tolist(), block_ubs.tolist()):
        if evaluated == limit:
            break
        theta = heap[0][0] if len(heap) == k else 0
        if theta > alpha * u:
            break
        locs, scores = evaluate_block(term_ptr, dir_terms, post_ptr, local_ids, impacts,
                                      b, j, qterms, qweights, acc)
        evaluated += 1
        base = j * b
        for loc, sc in zip(locs.tolist(), scores.tolist()):
            item = (sc, -(base + loc))
            if len(heap) < k:
                heapq.heappush(heap, item)
            elif item > heap[0]:
                heapq.heapreplace(heap, item)
    docs = np.array([-d for _, d in heap], dtype=np.int64)
    scores = np.array([s for s, _ in heap], dtype=np.int64)
    return docs, scores, evaluated
