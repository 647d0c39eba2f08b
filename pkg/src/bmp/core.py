"""Domain types shared across the engine, plus impact/weight quantization."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Tuple, Union

import numpy as np

LEVELS = 255
# local doc ids are stored in one byte, so any power of two up to 256 works;
# PAPER_BLOCK_SIZES is the range the benchmarks sweep.
SUPPORTED_BLOCK_SIZES = (1, 2, 4, 8, 16, 32, 64, 128, 256)
PAPER_BLOCK_SIZES = (8, 16, 32, 64, 128, 256)

# Largest integer upper bound the 32-bit accumulators can hold.
MAX_ACCUMULATED_SCORE = 2**32 - 1


class BMPError(Exception):
    """Base class for engine errors."""


class InvalidArgumentError(BMPError, ValueError):
    pass


class OutOfRangeError(BMPError, ValueError):
    pass


class CorruptInputError(BMPError, ValueError):
    pass


def check_block_size(b: int) -> int:
    if isinstance(b, bool) or b not in SUPPORTED_BLOCK_SIZES:
        raise InvalidArgumentError(
            f"unsupported block size {b}; expected one of {SUPPORTED_BLOCK_SIZES}"
        )
    return int(b)


def num_blocks_for(n: int, b: int) -> int:
    return -(-n // b)


@dataclass(frozen=True)
class Quantizer:
    """Linear map of raw scores in ``(0, max_raw_score]`` onto ``1..255``.

    Ceiling rounding keeps every quantized value at or above its real-valued
    counterpart scaled to the level grid; zero is reserved for "absent".
    """

    max_raw_score: float
    levels: int = LEVELS

    def __post_init__(self):
        if not (math.isfinite(self.max_raw_score) and self.max_raw_score > 0):
            raise InvalidArgumentError(
                f"max_raw_score must be positive and finite, got {self.max_raw_score!r}"
            )

    def quantize(self, s: float) -> int:
        return quantize_impact(self, s)

    def quantize_array(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=np.float64)
        if s.size and (np.any(s < 0) or np.any(s > self.max_raw_score) or not np.all(np.isfinite(s))):
            raise OutOfRangeError("scores outside [0, max_raw_score]")
        q = np.ceil(s / self.max_raw_score * self.levels)
        q = np.clip(q, 1, self.levels)
        q[s == 0] = 0
        return q.astype(np.uint8)

    def dequantize(self, v) -> float:
        return v * self.max_raw_score / self.levels


def fit_quantizer(max_raw_score: float) -> Quantizer:
    return Quantizer(float(max_raw_score))


def quantize_impact(q: Quantizer, s: float) -> int:
    if not (0 <= s <= q.max_raw_score):
        raise OutOfRangeError(f"score {s!r} outside [0, {q.max_raw_score}]")
    if s == 0:
        return 0
    v = math.ceil(s / q.max_raw_score * q.levels)
    return min(max(v, 1), q.levels)


Pairs = Union[Mapping[int, float], Iterable[Tuple[int, float]]]


def _split_pairs(entries) -> Tuple[list, list]:
    if isinstance(entries, Mapping):
        items = list(entries.items())
    else:
        items = list(entries)
    terms = [int(t) for t, _ in items]
    values = [v for _, v in items]
    return terms, values


@dataclass(frozen=True, eq=False)
class SparseVector:
    """Term-sorted real-valued vector; zero weights are dropped."""

    terms: np.ndarray
    weights: np.ndarray

    def __init__(self, entries: Pairs = ()):
        terms, values = _split_pairs(entries)
        t = np.asarray(terms, dtype=np.int64)
        w = np.asarray(values, dtype=np.float64)
        if t.size:
            if t.min() < 0:
                raise InvalidArgumentError("negative term id")
            if not np.all(np.isfinite(w)) or np.any(w < 0):
                raise InvalidArgumentError("weights must be finite and non-negative")
        order = np.argsort(t, kind="stable")
        t, w = t[order], w[order]
        if t.size > 1 and np.any(t[1:] == t[:-1]):
            raise InvalidArgumentError("duplicate term id")
        keep = w > 0
        object.__setattr__(self, "terms", t[keep].astype(np.uint32))
        object.__setattr__(self, "weights", w[keep])

    def __len__(self):
        return int(self.terms.size)

    def items(self):
        return list(zip(self.terms.tolist(), self.weights.tolist()))

    def __eq__(self, other):
        if not isinstance(other, SparseVector):
            return NotImplemented
        return np.array_equal(self.terms, other.terms) and np.array_equal(self.weights, other.weights)

    def __repr__(self):
        return f"SparseVector({dict(self.items())})"


@dataclass(frozen=True, eq=False)
class QuantizedVector:
    """Term-sorted vector of positive integer weights.

    Used both for quantized documents (impacts in 1..255) and for quantized
    queries (weights >= 1).
    """

    terms: np.ndarray
    weights: np.ndarray

    def __init__(self, entries: Pairs = ()):
        terms, values = _split_pairs(entries)
        t = np.asarray(terms, dtype=np.int64)
        w = np.asarray(values, dtype=np.int64)
        if t.size:
            if t.min() < 0:
                raise InvalidArgumentError("negative term id")
            if w.min() < 1:
                raise InvalidArgumentError("quantized weights must be >= 1")
        order = np.argsort(t, kind="stable")
        t, w = t[order], w[order]
        if t.size > 1 and np.any(t[1:] == t[:-1]):
            raise InvalidArgumentError("duplicate term id")
        object.__setattr__(self, "terms", t.astype(np.uint32))
        object.__setattr__(self, "weights", w)

    @classmethod
    def from_arrays(cls, terms, weights) -> "QuantizedVector":
        # trusted constructor: caller guarantees sortedness and positivity
        self = object.__new__(cls)
        object.__setattr__(self, "terms", np.ascontiguousarray(terms, dtype=np.uint32))
        object.__setattr__(self, "weights", np.ascontiguousarray(weights, dtype=np.int64))
        return self

    def __len__(self):
        return int(self.terms.size)

    def items(self):
        return list(zip(self.terms.tolist(), self.weights.tolist()))

    def __eq__(self, other):
        if not isinstance(other, QuantizedVector):
            return NotImplemented
        return np.array_equal(self.terms, other.terms) and np.array_equal(self.weights, other.weights)

    def __hash__(self):
        return hash((self.terms.tobytes(), self.weights.tobytes()))

    def __repr__(self):
        return f"QuantizedVector({dict(self.items())})"


QuantizedQuery = QuantizedVector


def default_query_scale(v: SparseVector, scale: float = 100.0) -> float:
    """Scale 1 when every weight is already integral, else ``scale``."""
    if len(v) and np.all(v.weights == np.floor(v.weights)):
        return 1.0
    return scale


def quantize_query(v: SparseVector, scale: float | None = None) -> QuantizedQuery:
    if scale is None:
        scale = default_query_scale(v)
    if not (scale > 0 and math.isfinite(scale)):
        raise InvalidArgumentError(f"scale must be positive, got {scale!r}")
    # round half up, never below 1
    w = np.floor(v.weights * scale + 0.5).astype(np.int64)
    w = np.maximum(w, 1)
    return QuantizedVector.from_arrays(v.terms, w)


def quantize_document(q: Quantizer, v: SparseVector) -> QuantizedVector:
    return QuantizedVector.from_arrays(v.terms, q.quantize_array(v.weights).astype(np.int64))


def check_query_admissible(query: QuantizedQuery) -> None:
    """Reject queries whose worst-case score could overflow 32-bit accumulators."""
    if len(query) and int(query.weights.sum()) * LEVELS > MAX_ACCUMULATED_SCORE:
        raise InvalidArgumentError(
            "query weights too large: sum(weights) * 255 exceeds 32-bit accumulator range"
        )


@dataclass(frozen=True)
class SearchParams:
    k: int = 10
    alpha: float = 1.0
    beta: float = 1.0
    bm_mode: str | None = None  # None: whichever layout the index holds
    max_blocks: int | None = None

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 1:
            raise InvalidArgumentError(f"k must be a positive integer, got {self.k!r}")
        if not (0 < self.alpha <= 1):
            raise InvalidArgumentError(f"alpha must be in (0, 1], got {self.alpha!r}")
        if not (0 < self.beta <= 1):
            raise InvalidArgumentError(f"beta must be in (0, 1], got {self.beta!r}")
        if self.bm_mode not in (None, "raw", "compressed"):
            raise InvalidArgumentError(f"bm_mode must be 'raw' or 'compressed', got {self.bm_mode!r}")
        if self.max_blocks is not None and self.max_blocks < 0:
            raise InvalidArgumentError("max_blocks must be non-negative")

    @property
    def safe(self) -> bool:
        return self.alpha == 1.0 and self.beta == 1.0 and self.max_blocks is None


@dataclass(frozen=True)
class TopKResult:
    """Ranked hits ordered by (score desc, doc id asc)."""

    hits: Tuple[Tuple[int, int], ...] = field(default_factory=tuple)

    @classmethod
    def from_arrays(cls, docs, scores) -> "TopKResult":
        docs = np.asarray(docs, dtype=np.int64)
        scores = np.asarray(scores, dtype=np.int64)
        order = np.lexsort((docs, -scores))
        return cls(tuple(zip(docs[order].tolist(), scores[order].tolist())))

    def __len__(self):
        return len(self.hits)

    def __iter__(self):
        return iter(self.hits)

    @property
    def docs(self) -> list:
        return [d for d, _ in self.hits]

    @property
    def scores(self) -> list:
        return [s for _, s in self.hits]

    def truncate(self, k: int) -> "TopKResult":
        return TopKResult(self.hits[:k])
