import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from bmp.core import (
    InvalidArgumentError,
    OutOfRangeError,
    QuantizedVector,
    Quantizer,
    SearchParams,
    SparseVector,
    TopKResult,
    check_query_admissible,
    fit_quantizer,
    quantize_impact,
    quantize_query,
)


def exact_ceil_level(s, m):
    # independent route: rational arithmetic, no float division
    return math.ceil(Fraction(s) / Fraction(m) * 255)


class TestFitQuantizer:
    def test_constructor(self):
        assert fit_quantizer(10.0) == Quantizer(10.0)

    @pytest.mark.parametrize("bad", [0.0, -1.0, float("inf"), float("nan")])
    def test_rejects_non_positive(self, bad):
        with pytest.raises(InvalidArgumentError):
            fit_quantizer(bad)

    def test_fitted_on_collection_maximum(self):
        values = [0.5, 10.0, 3.2]
        best = values[0]
        for v in values:
            if v > best:
                best = v
        assert best == 10.0
        assert fit_quantizer(max(values)).max_raw_score == 10.0


class TestQuantizeImpact:
    def test_absent(self):
        assert quantize_impact(Quantizer(10.0), 0.0) == 0

    def test_maximum_maps_to_top(self):
        assert quantize_impact(Quantizer(10.0), 10.0) == 255

    def test_half(self):
        assert exact_ceil_level(5.0, 10.0) == 128
        assert quantize_impact(Quantizer(10.0), 5.0) == 128

    @pytest.mark.parametrize("s", [-0.1, 10.01])
    def test_out_of_range(self, s):
        with pytest.raises(OutOfRangeError):
            quantize_impact(Quantizer(10.0), s)

    def test_array_matches_scalar(self):
        q = Quantizer(3.7)
        xs = np.linspace(0, 3.7, 1001)
        assert q.quantize_array(xs).tolist() == [quantize_impact(q, x) for x in xs]

    @given(st.floats(0.01, 1e6), st.lists(st.floats(0, 1), min_size=2, max_size=20))
    def test_monotone_and_zero_exact(self, m, fracs):
        q = Quantizer(m)
        xs = sorted(min(f * m, m) for f in fracs)
        levels = [quantize_impact(q, x) for x in xs]
        assert levels == sorted(levels)
        for x, v in zip(xs, levels):
            assert (v == 0) == (x == 0)
            assert 0 <= v <= 255

    @given(st.floats(0.01, 1e6), st.floats(1e-9, 1))
    def test_bounded_error(self, m, f):
        q = Quantizer(m)
        s = min(f * m, m)
        v = quantize_impact(q, s)
        assert abs(q.dequantize(v) - s) <= m / 255 * (1 + 1e-12)
        assert v == max(1, min(255, exact_ceil_level(s, m)))


class TestQuantizeQuery:
    def test_scale_100(self):
        assert quantize_query(SparseVector({3: 1.5}), 100) == QuantizedVector({3: 150})
        assert quantize_query(SparseVector({3: 1.0}), 100) == QuantizedVector({3: 100})

    def test_floor_at_one(self):
        assert round(0.004 * 100) == 0
        assert quantize_query(SparseVector({1: 0.004}), 100) == QuantizedVector({1: 1})

    def test_empty(self):
        assert len(quantize_query(SparseVector({}), 100)) == 0

    def test_integral_weights_default_to_scale_one(self):
        assert quantize_query(SparseVector({1: 2.0, 4: 7.0})) == QuantizedVector({1: 2, 4: 7})
        assert quantize_query(SparseVector({1: 2.5})) == QuantizedVector({1: 250})

    def test_order_and_length_preserved(self):
        v = SparseVector({9: 0.3, 2: 0.0001, 5: 2.0})
        q = quantize_query(v, 100)
        assert q.terms.tolist() == [2, 5, 9]
        assert q.weights.tolist() == [1, 200, 30]

    def test_overflow_guard(self):
        check_query_admissible(QuantizedVector({0: 1000}))
        with pytest.raises(InvalidArgumentError):
            check_query_admissible(QuantizedVector({0: 2**25, 1: 2**25}))


class TestVectors:
    def test_sparse_vector_sorts_and_drops_zeros(self):
        v = SparseVector({5: 1.0, 1: 0.0, 3: 2.0})
        assert v.items() == [(3, 2.0), (5, 1.0)]

    def test_sparse_vector_rejects_negative(self):
        with pytest.raises(InvalidArgumentError):
            SparseVector({1: -0.5})

    def test_duplicate_terms(self):
        with pytest.raises(InvalidArgumentError):
            SparseVector([(1, 1.0), (1, 2.0)])
        with pytest.raises(InvalidArgumentError):
            QuantizedVector([(1, 1), (1, 2)])

    def test_quantized_rejects_zero(self):
        with pytest.raises(InvalidArgumentError):
            QuantizedVector({1: 0})


class TestSearchParams:
    @pytest.mark.parametrize("kw", [dict(k=0), dict(alpha=0.0), dict(alpha=1.1), dict(beta=0),
                                    dict(beta=1.5), dict(bm_mode="dense")])
    def test_invalid(self, kw):
        with pytest.raises(InvalidArgumentError):
            SearchParams(**kw)

    def test_safe(self):
        assert SearchParams().safe
        assert not SearchParams(alpha=0.9).safe


def test_topk_ordering_is_strict():
    r = TopKResult.from_arrays([5, 2, 9, 1], [7, 7, 9, 3])
    assert r.hits == ((9, 9), (2, 7), (5, 7), (1, 3))
    keys = [(-s, d) for d, s in r.hits]
    assert keys == sorted(keys) and len(set(keys)) == len(keys)
