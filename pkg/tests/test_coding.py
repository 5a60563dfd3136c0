import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from phimdp.coding import (CountVector, code_length, dimension_shift, entropy, grouped_code_lengths,
                           sparse_code_length)

counts_st = st.lists(st.integers(0, 60), min_size=1, max_size=8)


def seq_from_counts(counts):
    return [i for i, c in enumerate(counts) for _ in range(c)]


def mle_bits(seq, m):
    """-log2 of the sequence under its own frequency estimate, symbol by symbol."""
    n = len(seq)
    freq = [seq.count(i) / n for i in range(m)]
    return -sum(math.log2(freq[x]) for x in seq)


def sequential_bits(seq, m, alpha):
    """Exact sequential Dirichlet product with rationals."""
    alpha = Fraction(alpha)
    counts = [0] * m
    p = Fraction(1)
    for t, x in enumerate(seq):
        p *= (counts[x] + alpha) / (t + m * alpha)
        counts[x] += 1
    return -math.log2(p)


class TestEntropy:
    def test_fair_coin(self):
        assert entropy((0.5, 0.5)) == 1.0

    def test_degenerate(self):
        assert entropy((1.0, 0.0)) == 0.0

    def test_three_quarters(self):
        assert entropy((0.75, 0.25)) == pytest.approx(0.8112781244591328, abs=1e-12)

    @pytest.mark.parametrize("p", [(-0.1, 1.1), (0.5, 0.6), ()])
    def test_rejects_bad_vectors(self, p):
        with pytest.raises(ValueError):
            entropy(p)

    @given(st.lists(st.floats(0, 1), min_size=1, max_size=10).filter(lambda x: sum(x) > 0))
    def test_bounded_by_log_m(self, w):
        p = np.asarray(w) / sum(w)
        p[-1] = 1.0 - p[:-1].sum()
        if p[-1] < 0 or abs(p.sum() - 1) > 1e-12:
            return
        assert 0.0 <= entropy(p) <= math.log2(len(p)) + 1e-12


class TestCountVector:
    def test_totals(self):
        nv = CountVector((3, 0, 2))
        assert (nv.m, nv.total, nv.nonzero) == (3, 5, 2)

    def test_from_sequence(self):
        assert CountVector.from_sequence([0, 2, 2], 3).counts == (1, 0, 2)

    @pytest.mark.parametrize("bad", [(), (1, -1)])
    def test_invalid(self, bad):
        with pytest.raises(ValueError):
            CountVector(bad)


class TestCodeLengthExamples:
    @pytest.mark.parametrize("mode", ["exact", "sparse", "combinatorial", "incremental"])
    def test_empty_is_free(self, mode):
        assert code_length((0, 0), mode) == 0.0

    def test_exact_balanced(self):
        assert code_length((2, 2), "exact") == pytest.approx(5.0, abs=1e-12)

    def test_sparse_single_category(self):
        assert code_length((4, 0), "sparse") == pytest.approx(2.0, abs=1e-12)

    def test_kt_two_symbols(self):
        nv = CountVector.from_sequence([0, 1], 2)
        assert code_length(nv, "incremental", 0.5) == pytest.approx(3.0, abs=1e-12)

    def test_rejects_bad_alpha(self):
        with pytest.raises(ValueError):
            code_length((1, 2), "incremental", 0.0)

    def test_rejects_empty_vector(self):
        with pytest.raises(ValueError):
            code_length(())

    def test_unknown_mode(self):
        with pytest.raises(ValueError):
            code_length((1, 1), "huffman")


class TestCodeLengthProperties:
    @given(counts_st)
    def test_exact_is_mle_plus_penalty(self, counts):
        n, m = sum(counts), len(counts)
        expect = 0.0 if n == 0 else mle_bits(seq_from_counts(counts), m) + 0.5 * (m - 1) * math.log2(n)
        assert code_length(counts, "exact") == pytest.approx(expect, rel=1e-12, abs=1e-9)

    @given(counts_st, st.sampled_from([0.5, 1.0, 2.0]), st.randoms(use_true_random=False))
    @settings(max_examples=60)
    def test_incremental_matches_product_and_is_order_free(self, counts, alpha, rnd):
        seq = seq_from_counts(counts)
        shuffled = list(seq)
        rnd.shuffle(shuffled)
        m = len(counts)
        expect = sequential_bits(seq, m, alpha)
        assert code_length(counts, "incremental", alpha) == pytest.approx(expect, rel=1e-10, abs=1e-9)
        assert sequential_bits(shuffled, m, alpha) == pytest.approx(expect, rel=1e-12, abs=1e-12)

    @given(counts_st)
    def test_combinatorial_formula(self, counts):
        n, m = sum(counts), len(counts)
        if n == 0:
            return
        multinom = math.factorial(n)
        for c in counts:
            multinom //= math.factorial(c)
        expect = math.log2(multinom) + (m - 1) * math.log2(n)
        assert code_length(counts, "combinatorial") == pytest.approx(expect, rel=1e-10, abs=1e-8)

    @given(st.lists(st.integers(0, 2000), min_size=1, max_size=8))
    def test_combinatorial_close_to_exact(self, counts):
        n, m = sum(counts), len(counts)
        slack = m * math.log2(max(n, 2)) + 16
        assert abs(code_length(counts, "combinatorial") - code_length(counts, "exact")) <= slack

    @given(counts_st)
    def test_sparse_at_most_exact_plus_m(self, counts):
        assert code_length(counts, "sparse") <= code_length(counts, "exact") + len(counts) + 1e-9

    @given(counts_st)
    def test_exact_dominates_entropy_term(self, counts):
        n = sum(counts)
        if n == 0:
            return
        nh = n * entropy(np.asarray(counts) / n)
        assert code_length(counts, "exact") >= nh - 1e-9

    @given(counts_st, st.sampled_from(["exact", "sparse", "combinatorial", "incremental"]))
    def test_non_negative(self, counts, mode):
        assert code_length(counts, mode) >= 0.0


class TestGrouped:
    @given(st.lists(counts_st.filter(lambda c: len(c) == 3), min_size=1, max_size=6),
           st.sampled_from(["exact", "sparse", "combinatorial", "incremental"]))
    def test_matches_one_block_at_a_time(self, blocks, mode):
        rows, cnts = [], []
        for i, b in enumerate(blocks):
            for c in b:
                if c:
                    rows.append(i)
                    cnts.append(c)
        got = grouped_code_lengths(np.asarray(rows, dtype=np.int64), np.asarray(cnts), len(blocks), 3, mode)
        want = [code_length(b, mode) for b in blocks]
        np.testing.assert_allclose(got, want, rtol=1e-12, atol=1e-9)

    def test_sparse_form_agrees(self):
        assert sparse_code_length([3, 1], 4, "exact") == pytest.approx(code_length((3, 0, 1, 0), "exact"))

    def test_large_counts_do_not_overflow(self):
        bits = code_length((10**9, 10**9), "combinatorial")
        assert math.isfinite(bits) and bits > 2 * 10**9 - 100


@given(counts_st, st.integers(1, 10), st.sampled_from(["exact", "sparse", "combinatorial", "incremental"]))
def test_dimension_shift_is_exact(counts, extra, mode):
    m = len(counts)
    nz = [c for c in counts if c]
    before = sparse_code_length(nz, m, mode)
    after = sparse_code_length(nz, m + extra, mode)
    assert dimension_shift(sum(counts), m, m + extra, mode) == pytest.approx(after - before, abs=1e-9)
