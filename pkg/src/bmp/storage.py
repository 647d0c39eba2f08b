"""Collection ingestion and the binary index file.

Index file layout (little-endian)::

    header   magic "BMPI", u16 version, u8 bm_mode (0 raw, 1 compressed),
             u8 reserved, u32 b, u64 n, u64 V, f64 quantizer max, u32 nsections
    table    nsections x (u32 id, u64 offset, u64 length, u64 checksum)
    sections lexicons | block-max | block-forward | term-quantiles

Checksums are 8-byte BLAKE2b digests of each section's bytes. The raw
block-max section is exactly ``V * ceil(n / b)`` bytes with no bookkeeping;
its shape is recovered from the header.
"""

from __future__ import annotations

import hashlib
import io
import json
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .bmindex import TERM_HEADER_BYTES, BlockMaxIndex
from .core import (
    BMPError,
    CorruptInputError,
    Quantizer,
    SparseVector,
    num_blocks_for,
    quantize_document,
    quantize_query,
)
from .engine import Index
from .fwdindex import BlockForwardIndex
from .search import TermQuantiles

MAGIC = b"BMPI"
FORMAT_VERSION = 1

HEADER = struct.Struct("<4sHBBIQQdI")
SECTION = struct.Struct("<IQQQ")

SEC_LEXICONS, SEC_BLOCK_MAX, SEC_BLOCK_FORWARD, SEC_QUANTILES = 1, 2, 3, 4
SECTION_NAMES = {
    SEC_LEXICONS: "lexicons",
    SEC_BLOCK_MAX: "block-max",
    SEC_BLOCK_FORWARD: "block-forward",
    SEC_QUANTILES: "term-quantiles",
}
_MODE_CODE = {"raw": 0, "compressed": 1}
_CODE_MODE = {v: k for k, v in _MODE_CODE.items()}


class IndexFormatError(BMPError):
    pass


class BadMagicError(IndexFormatError):
    pass


class UnsupportedVersionError(IndexFormatError):
    pass


class TruncatedIndexError(IndexFormatError):
    pass


class ChecksumMismatchError(IndexFormatError):
    pass


@dataclass(eq=True)
class CollectionManifest:
    """Vocabulary and document names; list position is the dense id."""

    terms: list = field(default_factory=list)
    doc_names: list = field(default_factory=list)
    quantizer: Quantizer = field(default_factory=lambda: Quantizer(1.0))

    @property
    def n(self) -> int:
        return len(self.doc_names)

    @property
    def V(self) -> int:
        return len(self.terms)

    @property
    def term_lexicon(self) -> dict:
        return {t: i for i, t in enumerate(self.terms)}

    @property
    def doc_lexicon(self) -> dict:
        return {d: i for i, d in enumerate(self.doc_names)}

    @classmethod
    def synthetic(cls, n, V, quantizer=None):
        return cls([f"t{i}" for i in range(V)], [f"d{i}" for i in range(n)], quantizer or Quantizer(1.0))


# ---------------------------------------------------------------- ingestion

def parse_record(line: str, lineno: int):
    """One JSON line -> (external id, {term: weight}).

    Accepts ``{"id": ..., "vector": {...}}`` or a single-key
    ``{external_id: {...}}`` object.
    """
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as e:
        raise CorruptInputError(f"line {lineno}: invalid JSON ({e.msg})") from None
    if isinstance(obj, dict) and "id" in obj and "vector" in obj:
        ext, vec = obj["id"], obj["vector"]
    elif isinstance(obj, dict) and len(obj) == 1:
        (ext, vec), = obj.items()
    else:
        raise CorruptInputError(f"line {lineno}: expected {{\"id\", \"vector\"}} or {{id: vector}}")
    if not isinstance(vec, dict):
        raise CorruptInputError(f"line {lineno}: vector must be an object of term -> weight")
    for term, w in vec.items():
        if isinstance(w, bool) or not isinstance(w, (int, float)) or not math.isfinite(w) or w < 0:
            raise CorruptInputError(f"line {lineno}: weight for {term!r} must be a non-negative number")
    return str(ext), vec


def read_records(path):
    path = Path(path)
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if line.strip():
                yield parse_record(line, lineno)


def read_permutation(path) -> list:
    with Path(path).open("r", encoding="utf-8") as fh:
        return [line.strip() for line in fh if line.strip()]


def ingest_collection(path, reorder=None):
    """Read a documents file; returns (manifest, [(doc_id, QuantizedVector)]).

    ``reorder`` is a permutation file whose i-th line names the document that
    receives doc id i.
    """
    records = list(read_records(path))
    names = [ext for ext, _ in records]
    if len(set(names)) != len(names):
        seen = set()
        dup = next(x for x in names if x in seen or seen.add(x))
        raise CorruptInputError(f"duplicate document id {dup!r}")

    if reorder is not None:
        perm = read_permutation(reorder) if not isinstance(reorder, (list, tuple)) else list(reorder)
        if len(perm) != len(names) or set(perm) != set(names) or len(set(perm)) != len(perm):
            raise CorruptInputError("permutation is not a bijection over the collection's document ids")
        position = {name: i for i, name in enumerate(names)}
        records = [records[position[name]] for name in perm]

    term_ids: dict = {}
    vectors = []
    max_w = 0.0
    for _, vec in records:
        entries = {}
        for term, w in vec.items():
            if w > 0:
                entries[term_ids.setdefault(term, len(term_ids))] = float(w)
                max_w = max(max_w, float(w))
        vectors.append(SparseVector(entries))
    quantizer = Quantizer(max_w) if max_w > 0 else Quantizer(1.0)
    manifest = CollectionManifest(list(term_ids), [ext for ext, _ in records], quantizer)
    docs = [(i, quantize_document(quantizer, v)) for i, v in enumerate(vectors)]
    return manifest, docs


def read_queries(path, manifest: CollectionManifest, scale=None):
    """[(query id, QuantizedQuery)]; terms missing from the vocabulary are dropped."""
    lex = manifest.term_lexicon
    out = []
    for qid, vec in read_records(path):
        entries = {lex[t]: float(w) for t, w in vec.items() if t in lex and w > 0}
        out.append((qid, quantize_query(SparseVector(entries), scale)))
    return out


def read_qrels(path) -> dict:
    """TREC qrels -> {qid: {doc name: relevance}}."""
    qrels: dict = {}
    with Path(path).open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.split()
            if not parts:
                continue
            if len(parts) != 4:
                raise CorruptInputError(f"qrels line {lineno}: expected 4 columns, got {len(parts)}")
            qid, _, doc, rel = parts
            try:
                qrels.setdefault(qid, {})[doc] = int(rel)
            except ValueError:
                raise CorruptInputError(f"qrels line {lineno}: relevance {rel!r} is not an integer") from None
    return qrels


def write_run(fh, qid, result, doc_names, tag="bmp"):
    for rank, (doc, score) in enumerate(result.hits, 1):
        fh.write(f"{qid} Q0 {doc_names[doc]} {rank} {score} {tag}\n")


def read_run(path) -> dict:
    """TREC run -> {qid: [doc name, ...] in rank order}."""
    runs: dict = {}
    with Path(path).open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.split()
            if not parts:
                continue
            if len(parts) != 6:
                raise CorruptInputError(f"run line {lineno}: expected 6 columns, got {len(parts)}")
            qid, _, doc, rank, _, _ = parts
            runs.setdefault(qid, []).append((int(rank), doc))
    return {q: [d for _, d in sorted(v)] for q, v in runs.items()}


# ---------------------------------------------------------------- binary format

def _put_strings(buf, strings):
    buf.write(struct.pack("<I", len(strings)))
    for s in strings:
        b = s.encode("utf-8")
        buf.write(struct.pack("<I", len(b)))
        buf.write(b)


def _get_strings(mv, pos):
    (count,) = struct.unpack_from("<I", mv, pos)
    pos += 4
    out = []
    for _ in range(count):
        (ln,) = struct.unpack_from("<I", mv, pos)
        pos += 4
        out.append(bytes(mv[pos:pos + ln]).decode("utf-8"))
        pos += ln
    return out, pos


def _encode_lexicons(m: CollectionManifest) -> bytes:
    buf = io.BytesIO()
    _put_strings(buf, m.terms)
    _put_strings(buf, m.doc_names)
    return buf.getvalue()


def _encode_block_max(bm: BlockMaxIndex) -> bytes:
    return bm.raw.tobytes() if bm.mode == "raw" else bm.data.tobytes()


def _encode_block_forward(bfi: BlockForwardIndex) -> bytes:
    parts = [
        struct.pack("<QQ", bfi.directory_size, bfi.num_postings),
        bfi.term_ptr.astype("<u8").tobytes(),
        bfi.dir_terms.astype("<u4").tobytes(),
        bfi.post_ptr.astype("<u8").tobytes(),
        bfi.local_ids.tobytes(),
        bfi.impacts.tobytes(),
    ]
    return b"".join(parts)


def _encode_quantiles(tq: TermQuantiles) -> bytes:
    return (struct.pack("<I", len(tq.ranks)) + np.asarray(tq.ranks, dtype="<u4").tobytes()
            + tq.values.tobytes())


def _checksum(data: bytes) -> int:
    return int.from_bytes(hashlib.blake2b(data, digest_size=8).digest(), "little")


def encode_index(index: Index) -> bytes:
    bm, bfi, tq = index.bm, index.bfi, index.tq
    manifest = index.manifest or CollectionManifest.synthetic(bm.num_docs, bm.num_terms)
    if manifest.n != bm.num_docs or manifest.V != bm.num_terms:
        raise CorruptInputError("manifest does not match index dimensions")
    sections = [
        (SEC_LEXICONS, _encode_lexicons(manifest)),
        (SEC_BLOCK_MAX, _encode_block_max(bm)),
        (SEC_BLOCK_FORWARD, _encode_block_forward(bfi)),
        (SEC_QUANTILES, _encode_quantiles(tq)),
    ]
    header = HEADER.pack(MAGIC, FORMAT_VERSION, _MODE_CODE[bm.mode], 0, bm.block_size,
                         bm.num_docs, bm.num_terms, manifest.quantizer.max_raw_score, len(sections))
    offset = HEADER.size + SECTION.size * len(sections)
    table = []
    for sid, data in sections:
        table.append(SECTION.pack(sid, offset, len(data), _checksum(data)))
        offset += len(data)
    return header + b"".join(table) + b"".join(d for _, d in sections)


def write_index(index: Index, path) -> dict:
    """Write ``index`` to ``path``; returns {section name: byte length}."""
    blob = encode_index(index)
    Path(path).write_bytes(blob)
    return section_sizes(blob)


def _parse_table(blob):
    if len(blob) < HEADER.size:
        if len(blob) >= 4 and blob[:4] != MAGIC:
            raise BadMagicError(f"bad magic {bytes(blob[:4])!r}")
        raise TruncatedIndexError("file shorter than header")
    magic, version, mode, _, b, n, V, qmax, nsec = HEADER.unpack_from(blob, 0)
    if magic != MAGIC:
        raise BadMagicError(f"bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise UnsupportedVersionError(f"unknown format version {version}")
    if mode not in _CODE_MODE:
        raise IndexFormatError(f"unknown block-max mode code {mode}")
    if len(blob) < HEADER.size + SECTION.size * nsec:
        raise TruncatedIndexError("file ends inside the section table")
    sections = {}
    for i in range(nsec):
        sid, off, ln, ck = SECTION.unpack_from(blob, HEADER.size + i * SECTION.size)
        if off + ln > len(blob):
            raise TruncatedIndexError(f"section {SECTION_NAMES.get(sid, sid)} extends past end of file")
        sections[sid] = (off, ln, ck)
    spans = sorted((off, off + ln) for off, ln, _ in sections.values())
    for (_, e1), (s2, _) in zip(spans, spans[1:]):
        if s2 < e1:
            raise IndexFormatError("overlapping sections")
    return (_CODE_MODE[mode], b, n, V, qmax), sections


def section_sizes(blob) -> dict:
    _, sections = _parse_table(memoryview(blob))
    return {SECTION_NAMES.get(sid, str(sid)): ln for sid, (_, ln, _) in sections.items()}


def _compressed_offsets(data: np.ndarray, V: int) -> np.ndarray:
    offsets = np.zeros(V + 1, dtype=np.int64)
    pos = 0
    for t in range(V):
        if pos + TERM_HEADER_BYTES > data.size:
            raise IndexFormatError("block-max record header past end of section")
        count = int.from_bytes(data[pos:pos + 4].tobytes(), "little")
        width = int(data[pos + 4])
        pos += TERM_HEADER_BYTES + (count * width + 7) // 8 + count
        offsets[t + 1] = pos
    if pos != data.size:
        raise IndexFormatError("block-max section length does not match its records")
    return offsets


def decode_index(blob) -> Index:
    mv = memoryview(blob)
    (mode, b, n, V, qmax), sections = _parse_table(mv)
    for sid in SECTION_NAMES:
        if sid not in sections:
            raise IndexFormatError(f"missing section {SECTION_NAMES[sid]}")
    payload = {}
    for sid, (off, ln, ck) in sections.items():
        data = bytes(mv[off:off + ln])
        if _checksum(data) != ck:
            raise ChecksumMismatchError(f"checksum mismatch in section {SECTION_NAMES.get(sid, sid)}")
        payload[sid] = data

    terms, pos = _get_strings(payload[SEC_LEXICONS], 0)
    names, pos = _get_strings(payload[SEC_LEXICONS], pos)
    manifest = CollectionManifest(terms, names, Quantizer(qmax))

    nb = num_blocks_for(n, b)
    bm_bytes = np.frombuffer(payload[SEC_BLOCK_MAX], dtype=np.uint8)
    if mode == "raw":
        if bm_bytes.size != V * nb:
            raise IndexFormatError("raw block-max section has wrong size")
        bm = BlockMaxIndex(b, n, V, "raw", raw=bm_bytes.reshape(V, nb).copy())
    else:
        bm = BlockMaxIndex(b, n, V, "compressed", data=bm_bytes.copy(),
                           offsets=_compressed_offsets(bm_bytes, V))

    fw = payload[SEC_BLOCK_FORWARD]
    ndir, npost = struct.unpack_from("<QQ", fw, 0)
    p = 16
    arrays = []
    for dtype, count in (("<u8", nb + 1), ("<u4", ndir), ("<u8", ndir + 1), ("u1", npost), ("u1", npost)):
        size = np.dtype(dtype).itemsize * count
        if p + size > len(fw):
            raise IndexFormatError("block-forward section too short")
        arrays.append(np.frombuffer(fw, dtype=dtype, count=count, offset=p))
        p += size
    bfi = BlockForwardIndex(b, n, *arrays)

    qt = payload[SEC_QUANTILES]
    (nr,) = struct.unpack_from("<I", qt, 0)
    ranks = np.frombuffer(qt, dtype="<u4", count=nr, offset=4).tolist()
    values = np.frombuffer(qt, dtype=np.uint8, offset=4 + 4 * nr).reshape(V, nr)
    tq = TermQuantiles(ranks, values)
    return Index(bm, bfi, tq, manifest)


def read_index(path) -> Index:
    return decode_index(Path(path).read_bytes())
