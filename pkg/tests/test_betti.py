from __future__ import annotations

import json
from fractions import Fraction
from math import floor

import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from reeb_growth.betti import (
    TruncationError, betti_numbers, convolve, differential_matrix, even_sphere_partial_sum_bound,
    odd_sphere_degree_pattern, odd_sphere_partial_sum_bound, product_partial_sum_bound,
    rank_fraction_free, rank_integer_columns, rank_rational, sullivan_class_degrees,
)
from reeb_growth.loopmodel import build_model

ROW_S5 = [1, 0, 0, 0, 1, 1, 0, 0, 1, 1, 0, 0, 1, 1, 0, 0]
ROW_S7 = [1, 0, 0, 0, 0, 0, 1, 1, 0, 0, 0, 0, 1, 1, 0, 0]
ROW_S5_S7 = [1, 0, 0, 0, 1, 1, 1, 1, 1, 1, 1, 2, 3, 2, 1, 2]


@settings(max_examples=80, deadline=None)
@given(
    st.integers(1, 7).flatmap(
        lambda m: st.integers(1, 7).flatmap(
            lambda n: st.lists(st.lists(st.integers(-4, 4), min_size=n, max_size=n), min_size=m, max_size=m)
        )
    )
)
def test_rank_matches_sympy(rows):
    assert rank_fraction_free(rows) == sympy.Matrix(rows).rank()


@settings(max_examples=40, deadline=None)
@given(st.lists(st.lists(st.fractions(min_value=-4, max_value=4, max_denominator=9), min_size=4, max_size=4),
                min_size=1, max_size=6))
def test_rank_rational_matches_sympy(cols):
    M = sympy.Matrix([[sympy.Rational(c.numerator, c.denominator) for c in col] for col in cols])
    assert rank_rational(cols) == M.rank()
    assert rank_integer_columns(cols) == M.rank()


@settings(max_examples=40, deadline=None)
@given(st.lists(st.lists(st.sampled_from([0, 0, 0, 1, -1, 2]), min_size=6, max_size=6), min_size=1, max_size=8))
def test_sparse_rank_matches_sympy(cols):
    # sparse, dependent columns resemble differential matrices
    cols = cols + [[a + b for a, b in zip(cols[0], cols[-1])]]
    assert rank_rational(cols) == sympy.Matrix(cols).rank()


def test_rank_low_rank_example():
    rows = [[1, 2, 3], [2, 4, 6], [1, 0, 1]]
    assert rank_fraction_free(rows) == 2
    assert rank_rational([]) == 0


def _sympy_betti(spec, K):
    """Independent oracle: ranks of the same differential matrices via sympy."""
    dga = build_model(spec, K + 2)
    ranks = []
    for k in range(K + 1):
        cols = differential_matrix(dga, k)
        if not cols or not cols[0]:
            ranks.append(0)
            continue
        M = sympy.Matrix([[sympy.Rational(c.numerator, c.denominator) for c in col] for col in cols]).T
        ranks.append(M.rank())
    dims = [len(dga.basis(k)) for k in range(K + 1)]
    return [dims[k] - ranks[k] - (ranks[k - 1] if k else 0) for k in range(K + 1)]


@pytest.mark.parametrize("spec", ["loop(s2)", "loop(s4)", "loop(s3*s4)", "s2*s4"])
def test_betti_matches_sympy_oracle(spec):
    assert list(betti_numbers(build_model(spec, 14), 12).values) == _sympy_betti(spec, 12)


def test_reference_table_rows():
    assert list(betti_numbers(build_model("loop(s5)", 17), 15).values) == ROW_S5
    assert list(betti_numbers(build_model("loop(s7)", 17), 15).values) == ROW_S7
    assert list(betti_numbers(build_model("loop(s5)*loop(s7)", 17), 15).values) == ROW_S5_S7


def test_rank_nullity_bookkeeping():
    t = betti_numbers(build_model("loop(s4)*loop(s3)", 22), 20)
    for k in range(21):
        prev = t.ranks[k - 1] if k else 0
        assert t.dims[k] == t.values[k] + t.ranks[k] + prev
    assert t.values[0] == 1
    assert t.reliable_up_to == 20


def test_truncation_error():
    with pytest.raises(TruncationError):
        betti_numbers(build_model("loop(s5)", 10), 9)


def test_kunneth_convolution():
    K = 20
    a = betti_numbers(build_model("loop(s3)", K + 2), K).values
    b = betti_numbers(build_model("loop(s4)", K + 2), K).values
    ab = betti_numbers(build_model("loop(s3)*loop(s4)", K + 2), K).values
    assert list(ab) == convolve(a, b, K)


def test_odd_sphere_pattern_examples():
    t5 = odd_sphere_degree_pattern(5, 12)
    assert [i for i, b in enumerate(t5.values) if b] == [0, 4, 5, 8, 9, 12]
    t3 = odd_sphere_degree_pattern(3, 10)
    assert [i for i, b in enumerate(t3.values) if b] == [0] + list(range(2, 11))
    for n in (5, 7, 9):
        assert odd_sphere_degree_pattern(n, 10)[1] == 0
    with pytest.raises(ValueError):
        odd_sphere_degree_pattern(4, 10)


@pytest.mark.parametrize("n", [3, 5])
def test_odd_pattern_oracle_equivalence(n):
    assert betti_numbers(build_model(f"loop(s{n})", 22), 20).values == odd_sphere_degree_pattern(n, 20).values


def test_sullivan_class_degrees():
    assert sullivan_class_degrees(2, 3) == [1, 3, 5, 7]
    assert sullivan_class_degrees(4, 0) == [3]
    assert betti_numbers(build_model("loop(s4)", 6), 4)[3] >= 1
    with pytest.raises(ValueError):
        sullivan_class_degrees(3, 2)


@pytest.mark.parametrize("n", [4, 6])
def test_even_sphere_classes_pattern(n):
    # classes sit in degrees (1+2s)(n−1) and (1+2s)(n−1)+1 (plus b_0, b_n)
    K = 24
    t = betti_numbers(build_model(f"loop(s{n})", K + 2), K)
    expected = {0, n}
    s = 0
    while (1 + 2 * s) * (n - 1) <= K:
        expected |= {(1 + 2 * s) * (n - 1), (1 + 2 * s) * (n - 1) + 1}
        s += 1
    assert {i for i, b in enumerate(t.values) if b} == {i for i in expected if i <= K}


def test_partial_sum_bounds():
    # as printed, the odd bound misses by one exactly at k = j(n−1); b_0 restores it
    S = betti_numbers(build_model("loop(s5)", 27), 25).partial_sums()
    assert [k for k in range(26) if S[k] < odd_sphere_partial_sum_bound(5, k)] == [4, 8, 12, 16, 20, 24]
    assert all(S[k] + 1 >= odd_sphere_partial_sum_bound(5, k) for k in range(26))
    # the even bound holds once k reaches the first class degree n−1
    S = betti_numbers(build_model("loop(s4)", 27), 25).partial_sums()
    assert [k for k in range(26) if S[k] < even_sphere_partial_sum_bound(4, k)] == [1, 2]
    assert odd_sphere_partial_sum_bound(5, 9) == 2 * floor(9 / 4)
    assert even_sphere_partial_sum_bound(4, 6) == Fraction(1)
    assert product_partial_sum_bound(3, 3, 8) == Fraction(4)


def test_table_serialization():
    t = betti_numbers(build_model("loop(s5)", 17), 15)
    rows = t.to_tsv().splitlines()
    assert len(rows) == 16 and rows[-1] == "15\t0"
    d = json.loads(t.to_json("loop(s5)"))
    assert d == {"space": "loop(s5)", "betti": ROW_S5, "reliable_up_to": 15}


def test_parallel_matches_serial(monkeypatch):
    monkeypatch.setenv("REEB_GROWTH_THREADS", "4")
    dga = build_model("loop(s3)*loop(s5)", 20)
    assert betti_numbers(dga, 18, workers=4).values == betti_numbers(dga, 18, workers=1).values
