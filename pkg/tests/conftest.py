import numpy as np
import pytest

from bmp import _kernels, _pykernels
from bmp.synth import make_corpus

KERNEL_NAMES = ["upper_bounds_raw", "upper_bounds_compressed", "decode_term",
                "counting_sort_blocks", "evaluate_block", "process_blocks"]


@pytest.fixture(params=[m.NAME for m in _kernels.available_backends()])
def backend(request, monkeypatch):
    """Run the test once per importable kernel backend."""
    mod = {m.NAME: m for m in _kernels.available_backends()}[request.param]
    for name in KERNEL_NAMES:
        monkeypatch.setattr(_kernels, name, getattr(mod, name))
    return mod


@pytest.fixture(scope="session")
def small_corpus():
    return make_corpus(num_docs=1500, vocab=400, avg_terms=20, num_queries=40, seed=7)


@pytest.fixture(scope="session")
def clustered_corpus():
    return make_corpus(num_docs=2000, vocab=500, avg_terms=25, num_queries=40, seed=11, num_topics=8)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


_ACCEPTANCE = []


@pytest.fixture
def report():
    """Record one acceptance line; the outcome is asserted by the caller."""

    def record(criterion, ok, detail):
        _ACCEPTANCE.append((criterion, bool(ok), detail))
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for criterion, ok, detail in sorted(_ACCEPTANCE, key=lambda r: r[0]):
        terminalreporter.write_line(f"criterion {criterion:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
