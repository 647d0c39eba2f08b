"""Effectiveness and efficiency metrics."""

from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass
from typing import Sequence

from .core import InvalidArgumentError, TopKResult


@dataclass(frozen=True)
class QueryMetrics:
    rr_at_k: float = 0.0
    overlap_at_k: float = 0.0
    latency_ns: int = 0
    blocks_evaluated: int = 0
    blocks_total: int = 0

    def __post_init__(self):
        if self.blocks_evaluated > self.blocks_total:
            raise InvalidArgumentError("blocks_evaluated exceeds blocks_total")


@dataclass(frozen=True)
class Summary:
    queries: int
    mean_rr: float
    mean_overlap: float
    mean_latency_ns: float
    median_latency_ns: int
    p95_latency_ns: int
    p99_latency_ns: int
    evaluated_fraction: float


def _ranked_names(result, doc_names):
    if isinstance(result, TopKResult):
        docs = result.docs
        return [doc_names[d] for d in docs] if doc_names is not None else docs
    return list(result)


def reciprocal_rank(result, relevant, k: int = 10, doc_names=None) -> float:
    """1/rank of the first relevant hit within the top ``k``, else 0.

    ``result`` is a TopKResult (mapped through ``doc_names`` when given) or a
    ranked sequence of document identifiers.
    """
    if k < 1:
        raise InvalidArgumentError("k must be >= 1")
    for rank, doc in enumerate(_ranked_names(result, doc_names)[:k], 1):
        if doc in relevant:
            return 1.0 / rank
    return 0.0


def overlap(approx: TopKResult, exact: TopKResult, k: int) -> float:
    a = set(approx.docs[:k])
    e = set(exact.docs[:k])
    return len(a & e) / max(1, len(e))


def nearest_rank(sorted_values: Sequence, p: float):
    """Nearest-rank percentile of an ascending sequence (``p`` in (0, 1])."""
    r = max(1, math.ceil(p * len(sorted_values)))
    return sorted_values[r - 1]


def aggregate(metrics: Sequence[QueryMetrics]) -> Summary:
    if not metrics:
        raise InvalidArgumentError("cannot aggregate an empty metric list")
    n = len(metrics)
    lat = sorted(m.latency_ns for m in metrics)
    fractions = [m.blocks_evaluated / m.blocks_total if m.blocks_total else 0.0 for m in metrics]
    return Summary(
        queries=n,
        mean_rr=math.fsum(m.rr_at_k for m in metrics) / n,
        mean_overlap=math.fsum(m.overlap_at_k for m in metrics) / n,
        mean_latency_ns=math.fsum(lat) / n,
        median_latency_ns=nearest_rank(lat, 0.5),
        p95_latency_ns=nearest_rank(lat, 0.95),
        p99_latency_ns=nearest_rank(lat, 0.99),
        evaluated_fraction=math.fsum(sorted(fractions)) / n,
    )


CSV_FIELDS = ["b", "bm_mode", "alpha", "beta", "k", "queries", "runs", "mean_rr", "mean_overlap",
              "mrt_ms", "median_ms", "p95_ms", "p99_ms", "evaluated_block_fraction"]


def summary_row(summary: Summary, *, b, bm_mode, alpha, beta, k, runs, has_qrels=True) -> dict:
    """One CSV row; ``queries`` counts distinct queries, not timed samples."""
    return {
        "b": b,
        "bm_mode": bm_mode,
        "alpha": alpha,
        "beta": beta,
        "k": k,
        "queries": summary.queries // runs,
        "runs": runs,
        "mean_rr": f"{summary.mean_rr:.6f}" if has_qrels else "",
        "mean_overlap": f"{summary.mean_overlap:.6f}",
        "mrt_ms": f"{summary.mean_latency_ns / 1e6:.6f}",
        "median_ms": f"{summary.median_latency_ns / 1e6:.6f}",
        "p95_ms": f"{summary.p95_latency_ns / 1e6:.6f}",
        "p99_ms": f"{summary.p99_latency_ns / 1e6:.6f}",
        "evaluated_block_fraction": f"{summary.evaluated_fraction:.6f}",
    }


def write_summary_csv(fh, rows):
    writer = csv.DictWriter(fh, fieldnames=CSV_FIELDS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(row)


def summary_dict(summary: Summary) -> dict:
    return asdict(summary)
