"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 data error (including a failed
``compare``).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

from . import _kernels
from .core import (
    BMPError,
    InvalidArgumentError,
    QuantizedVector,
    SearchParams,
    check_block_size,
)
from .engine import build_index
from .evaluation import (
    QueryMetrics,
    aggregate,
    overlap,
    reciprocal_rank,
    summary_row,
    write_summary_csv,
)
from .oracle import ExhaustiveScorer
from .search import DEFAULT_RANKS, SearchStats
from .storage import (
    ingest_collection,
    read_index,
    read_qrels,
    read_queries,
    read_run,
    write_index,
    write_run,
)

log = logging.getLogger("bmp")

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _float_list(text):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _int_list(text):
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _existing(path):
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(f"file not found: {path}")
    return p


def _params(k, alpha, beta, max_blocks=None):
    try:
        return SearchParams(k=k, alpha=alpha, beta=beta, max_blocks=max_blocks)
    except InvalidArgumentError as e:
        raise UsageError(str(e)) from None


def cmd_index(args):
    try:
        check_block_size(args.block_size)
    except InvalidArgumentError:
        raise UsageError(f"unsupported block size {args.block_size}") from None
    manifest, docs = ingest_collection(_existing(args.input),
                                       _existing(args.permutation) if args.permutation else None)
    index = build_index(docs, manifest.n, args.block_size, args.bm_mode, num_terms=manifest.V,
                        ranks=args.quantile_ranks, manifest=manifest)
    sizes = write_index(index, args.output)
    print(f"n={manifest.n}")
    print(f"V={manifest.V}")
    print(f"b={index.block_size}")
    print(f"num_blocks={index.num_blocks}")
    print(f"bm_mode={args.bm_mode}")
    for name, size in sizes.items():
        print(f"section.{name}={size}")
    return EXIT_OK


def _load(args):
    index = read_index(_existing(args.index))
    queries = read_queries(_existing(args.queries), index.manifest, args.query_scale)
    return index, queries


def cmd_search(args):
    params = _params(args.k, args.alpha, args.beta, args.max_blocks)
    index, queries = _load(args)
    names = index.manifest.doc_names
    out = sys.stdout if args.output == "-" else open(args.output, "w", encoding="utf-8")
    try:
        for qid, q in queries:
            write_run(out, qid, index.search(q, params), names, tag=args.tag)
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


def cmd_bench(args):
    if args.runs < 1:
        raise UsageError("--runs must be >= 1")
    if args.warmup < 0:
        raise UsageError("--warmup must be >= 0")
    configs = [_params(args.k, a, b, args.max_blocks) for a in args.alpha for b in args.beta]
    index, queries = _load(args)
    qrels = read_qrels(_existing(args.qrels)) if args.qrels else None
    names = index.manifest.doc_names
    safe = [index.search(q, SearchParams(k=args.k)) for _, q in queries]
    rows = []
    for params in configs:
        for _ in range(args.warmup):
            for _, q in queries:
                index.search(q, params)
        metrics = []
        for _ in range(args.runs):
            for (qid, q), exact in zip(queries, safe):
                stats = SearchStats()
                t0 = time.perf_counter_ns()
                res = index.search(q, params, stats)
                elapsed = time.perf_counter_ns() - t0
                rel = {d for d, r in (qrels or {}).get(qid, {}).items() if r > 0}
                metrics.append(QueryMetrics(
                    rr_at_k=reciprocal_rank(res, rel, min(args.k, 10), names),
                    overlap_at_k=overlap(res, exact, args.k),
                    latency_ns=elapsed,
                    blocks_evaluated=stats.blocks_evaluated,
                    blocks_total=stats.blocks_total,
                ))
        if not metrics:
            continue
        rows.append(summary_row(aggregate(metrics), b=index.block_size, bm_mode=index.bm.mode,
                                alpha=params.alpha, beta=params.beta, k=args.k, runs=args.runs,
                                has_qrels=qrels is not None))
    out = sys.stdout if args.output == "-" else open(args.output, "w", encoding="utf-8")
    try:
        write_summary_csv(out, rows)
    finally:
        if out is not sys.stdout:
            out.close()
    log.info("kernel backend: %s", _kernels.BACKEND)
    return EXIT_OK


def cmd_eval(args):
    if args.k < 1:
        raise UsageError("--k must be >= 1")
    qrels = read_qrels(_existing(args.qrels))
    run = read_run(_existing(args.run))
    rrs = []
    for qid, docs in run.items():
        rel = {d for d, r in qrels.get(qid, {}).items() if r > 0}
        rrs.append(reciprocal_rank(docs, rel, args.k))
    mean = sum(rrs) / len(rrs) if rrs else 0.0
    print(f"queries={len(rrs)}")
    print(f"RR@{args.k}={mean:.6f}")
    return EXIT_OK


def _index_documents(index):
    """Rebuild the quantized collection from the block-forward index."""
    bfi = index.bfi
    per_doc: dict = {}
    for j in range(bfi.num_blocks):
        for t, plist in bfi.block(j).items():
            for loc, imp in plist:
                per_doc.setdefault(j * bfi.block_size + loc, {})[t] = imp
    return [(d, QuantizedVector(v)) for d, v in sorted(per_doc.items())]


def cmd_compare(args):
    index, queries = _load(args)
    if args.documents:
        manifest, docs = ingest_collection(_existing(args.documents),
                                           _existing(args.permutation) if args.permutation else None)
        if manifest.terms != index.manifest.terms or manifest.doc_names != index.manifest.doc_names:
            print("documents file does not match the index lexicons", file=sys.stderr)
            return EXIT_DATA
    else:
        docs = _index_documents(index)
    scorer = ExhaustiveScorer(docs)
    mismatches = 0
    for qid, q in queries:
        got = index.search(q, SearchParams(k=args.k))
        want = scorer.topk(q, args.k)
        if got != want:
            mismatches += 1
            print(f"mismatch on query {qid}", file=sys.stderr)
    print(f"queries={len(queries)} mismatches={mismatches}")
    return EXIT_DATA if mismatches else EXIT_OK


def cmd_synth(args):
    from .synth import make_corpus

    corpus = make_corpus(num_docs=args.docs, vocab=args.vocab, avg_terms=args.avg_terms,
                         num_queries=args.queries, seed=args.seed, num_topics=args.topics)
    with open(args.out_docs, "w", encoding="utf-8") as fh:
        for i, v in enumerate(corpus.doc_vectors):
            fh.write(json.dumps({"id": f"d{i}", "vector": {f"t{t}": w for t, w in v.items()}}) + "\n")
    with open(args.out_queries, "w", encoding="utf-8") as fh:
        for i, v in enumerate(corpus.query_vectors):
            fh.write(json.dumps({"id": f"q{i}", "vector": {f"t{t}": w for t, w in v.items()}}) + "\n")
    return EXIT_OK


def build_parser():
    p = _Parser(prog="bmp", description="Block-max pruning retrieval for learned sparse vectors")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("index", help="ingest a documents file and write an index")
    s.add_argument("--input", required=True)
    s.add_argument("--output", required=True)
    s.add_argument("--block-size", type=int, default=32)
    s.add_argument("--bm-mode", choices=["raw", "compressed"], default="compressed")
    s.add_argument("--permutation")
    s.add_argument("--quantile-ranks", type=_int_list, default=list(DEFAULT_RANKS))
    s.set_defaults(func=cmd_index)

    def query_args(s):
        s.add_argument("--index", required=True)
        s.add_argument("--queries", required=True)
        s.add_argument("--k", type=int, default=10)
        s.add_argument("--query-scale", type=float, default=None,
                       help="query weight scale (default: 1 for integral weights, else 100)")

    s = sub.add_parser("search", help="run queries and write a TREC run file")
    query_args(s)
    s.add_argument("--alpha", type=float, default=1.0)
    s.add_argument("--beta", type=float, default=1.0)
    s.add_argument("--max-blocks", type=int, default=None)
    s.add_argument("--output", default="-")
    s.add_argument("--tag", default="bmp")
    s.set_defaults(func=cmd_search)

    s = sub.add_parser("bench", help="time queries and emit a CSV summary")
    query_args(s)
    s.add_argument("--alpha", type=_float_list, default=[1.0])
    s.add_argument("--beta", type=_float_list, default=[1.0])
    s.add_argument("--max-blocks", type=int, default=None)
    s.add_argument("--warmup", type=int, default=1)
    s.add_argument("--runs", type=int, default=3)
    s.add_argument("--qrels")
    s.add_argument("--output", default="-")
    s.set_defaults(func=cmd_bench)

    s = sub.add_parser("eval", help="mean reciprocal rank of a run file")
    s.add_argument("--run", required=True)
    s.add_argument("--qrels", required=True)
    s.add_argument("--k", type=int, default=10)
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("compare", help="check safe-mode results against exhaustive scoring")
    query_args(s)
    s.add_argument("--documents", help="original documents file (default: rebuild from the index)")
    s.add_argument("--permutation")
    s.set_defaults(func=cmd_compare)

    s = sub.add_parser("synth", help="write a seeded synthetic collection and query set")
    s.add_argument("--docs", type=int, default=20_000)
    s.add_argument("--vocab", type=int, default=5_000)
    s.add_argument("--avg-terms", type=int, default=40)
    s.add_argument("--queries", type=int, default=200)
    s.add_argument("--topics", type=int, default=1)
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--out-docs", required=True)
    s.add_argument("--out-queries", required=True)
    s.set_defaults(func=cmd_synth)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as e:
        print(f"bmp: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as e:
        print(f"bmp: error: {e}", file=sys.stderr)
        return EXIT_DATA
    except (BMPError, OSError, UnicodeDecodeError) as e:
        print(f"bmp: error: {e}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
