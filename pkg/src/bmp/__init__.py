"""Block-max pruning top-k retrieval over learned sparse vectors."""

from ._kernels import BACKEND
from .bmindex import BlockMaxIndex, build_block_max, compute_upper_bounds, densify_term
from .core import (
    BMPError,
    CorruptInputError,
    InvalidArgumentError,
    OutOfRangeError,
    QuantizedQuery,
    QuantizedVector,
    Quantizer,
    SearchParams,
    SparseVector,
    TopKResult,
    fit_quantizer,
    quantize_document,
    quantize_impact,
    quantize_query,
)
from .engine import Index, build_index
from .fwdindex import BlockForwardIndex, build_block_forward, evaluate_block
from .oracle import ExhaustiveScorer, oracle_topk
from .search import (
    CandidateQueue,
    SearchStats,
    TermQuantiles,
    estimate_threshold,
    partial_sort_blocks,
    prune_query_terms,
    search,
)
from .storage import CollectionManifest, ingest_collection, read_index, write_index

__version__ = "0.1.0"
