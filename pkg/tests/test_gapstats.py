from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import fib_batch
from zeckgap.decomposition import DecompositionBatch, enumerate_batch, greedy_decompose, sample_batch
from zeckgap.gapstats import (
    GapMeasure,
    NoGapsError,
    average_gap_measure,
    count_gaps,
    gap_probability,
    individual_gap_measure,
    ordered_pair_counts,
)
from zeckgap.sequence import DEFAULT_INTERVAL, base, fibonacci, tribonacci

F = Fraction


def literal_one_gap(batch, i, g):
    """Number of z with b_i and b_{i+g} present and nothing strictly between."""
    hits = 0
    for d in batch:
        s = set(d.indices)
        if i in s and i + g in s and not any(i + q in s for q in range(1, g)):
            hits += 1
    return hits


def literal_two_gap(batch, j1, g1, j2, g2):
    hits = 0
    for d in batch:
        s = set(d.indices)
        if {j1, j1 + g1, j2, j2 + g2} <= s and not any(j1 + q in s for q in range(1, g1)) and not any(
            j2 + p in s for p in range(1, g2)
        ):
            hits += 1
    return hits


def test_individual_measures():
    f = fibonacci()
    assert individual_gap_measure(greedy_decompose(f, 12)).masses == {2: F(1)}
    assert individual_gap_measure(greedy_decompose(f, 100)).masses == {2: F(1, 2), 5: F(1, 2)}
    m = individual_gap_measure(greedy_decompose(f, 100))
    assert m.total_gaps == 1 + 1 and m.exact


def test_individual_measure_no_gaps():
    with pytest.raises(NoGapsError):
        individual_gap_measure(greedy_decompose(fibonacci(), 8))


def test_average_measure_n5():
    m = average_gap_measure(fib_batch(5))
    assert m.masses == {2: F(3, 5), 3: F(1, 5), 4: F(1, 5)}
    assert m.total_gaps == 5
    assert gap_probability(m, 2) == F(3, 5)
    assert gap_probability(m, 7) == 0
    assert sum(m.masses.values()) == 1


def test_average_of_single_decomposition_is_individual():
    d = greedy_decompose(fibonacci(), 100)
    assert average_gap_measure([d]) == individual_gap_measure(d)


def test_average_of_singletons_signals_no_gaps():
    with pytest.raises(NoGapsError):
        average_gap_measure(fib_batch(2))
    with pytest.raises(ValueError):
        average_gap_measure([])


def test_gap_probability_rejects_negative():
    with pytest.raises(ValueError):
        gap_probability(average_gap_measure(fib_batch(5)), -1)


@pytest.mark.parametrize("n", range(3, 13))
def test_average_is_weighted_mean_of_individuals(n):
    batch = fib_batch(n)
    total = 0
    acc: dict[int, Fraction] = {}
    for d in batch:
        if d.k < 2:
            continue
        w = d.k - 1
        total += w
        for g, p in individual_gap_measure(d).masses.items():
            acc[g] = acc.get(g, 0) + w * p
    direct = average_gap_measure(batch)
    assert direct.total_gaps == total
    assert direct.masses == {g: v / total for g, v in sorted(acc.items())}


def test_measure_validation():
    with pytest.raises(ValueError):
        GapMeasure({2: F(1, 2)})
    with pytest.raises(ValueError):
        GapMeasure({2: F(3, 2), 3: F(-1, 2)})
    with pytest.raises(ValueError):
        GapMeasure({-1: 1.0})
    m = GapMeasure({2: 0.5, 3: 0.5 + 5e-13})
    assert not m.exact


def test_sampled_measure_is_float():
    m = average_gap_measure(sample_batch(fibonacci(), DEFAULT_INTERVAL, 10, 1000, seed=0))
    assert not m.exact
    assert abs(sum(m.masses.values()) - 1) < 1e-12


def test_count_gaps_n5():
    table = count_gaps(fibonacci(), DEFAULT_INTERVAL, 5)
    assert table.one_gap[(3, 2)] == 2
    assert table.two_gap[(1, 2, 3, 2)] == 1
    assert sum(table.one_gap.values()) == table.n_gaps == 5
    assert table.size == 5


@pytest.mark.parametrize("n", [6, 8, 10])
def test_count_gaps_against_literal_definition(n):
    f = fibonacci()
    batch = fib_batch(n)
    table = count_gaps(f, DEFAULT_INTERVAL, n)
    assert not any(g == 0 for _, g in table.one_gap)
    for i in range(1, n + 1):
        for g in range(1, n + 1):
            assert table.one_gap.get((i, g), 0) == literal_one_gap(batch, i, g)
    for j1 in range(1, n):
        for g1 in range(1, n):
            for j2 in range(j1 + 1, n):
                for g2 in range(1, n - j2 + 1):
                    assert table.two_gap.get((j1, g1, j2, g2), 0) == literal_two_gap(batch, j1, g1, j2, g2)


@pytest.mark.parametrize("n", range(3, 13))
def test_probabilities_from_one_gap_counts(n):
    table = count_gaps(fibonacci(), DEFAULT_INTERVAL, n)
    m = average_gap_measure(fib_batch(n))
    for g in range(0, 2 * n + 1):
        assert gap_probability(m, g) == F(table.one_gap_total(g), table.n_gaps)


@pytest.mark.parametrize("n", range(3, 16))
def test_support_bound(n):
    assert average_gap_measure(fib_batch(n)).support_max <= n


@pytest.mark.parametrize("n", [7, 10, 12])
def test_pair_totals_match_keyed_table(n):
    table = count_gaps(fibonacci(), DEFAULT_INTERVAL, n, g_max=8)
    assert not table.truncated
    summed = np.zeros((9, 9), dtype=np.int64)
    for (_, g1, _, g2), c in table.two_gap.items():
        summed[g1, g2] += c
    assert np.array_equal(summed, table.pair_totals)


def test_pair_counts_by_brute_force_on_base10():
    batch = enumerate_batch(base(10), DEFAULT_INTERVAL, 3)
    expected = np.zeros((4, 4), dtype=np.int64)
    for d in batch:
        gaps = d.gaps
        for r in range(len(gaps)):
            for w in range(r + 1, len(gaps)):
                if gaps[r] <= 3 and gaps[w] <= 3:
                    expected[gaps[r], gaps[w]] += 1
    assert np.array_equal(ordered_pair_counts(batch, 3), expected)


def test_pair_limit_truncates_keyed_table_only():
    full = count_gaps(fibonacci(), DEFAULT_INTERVAL, 12, g_max=8)
    cut = count_gaps(fibonacci(), DEFAULT_INTERVAL, 12, g_max=8, pair_limit=10)
    assert cut.truncated and len(cut.two_gap) == 10
    assert np.array_equal(cut.pair_totals, full.pair_totals)


def test_count_tables_merge_like_a_monoid():
    f = fibonacci()
    batch = fib_batch(11)
    half = len(batch) // 2
    parts = [
        DecompositionBatch.from_decompositions(list(batch)[:half]),
        DecompositionBatch.from_decompositions(list(batch)[half:]),
    ]
    a = count_gaps(f, DEFAULT_INTERVAL, 11, g_max=8, batch=parts[0])
    b = count_gaps(f, DEFAULT_INTERVAL, 11, g_max=8, batch=parts[1])
    whole = count_gaps(f, DEFAULT_INTERVAL, 11, g_max=8)
    for merged in (a + b, b + a):
        assert merged.one_gap == whole.one_gap
        assert merged.two_gap == whole.two_gap
        assert np.array_equal(merged.pair_totals, whole.pair_totals)
        assert merged.n_gaps == whole.n_gaps and merged.size == whole.size


def test_counts_bounded_by_interval_size():
    table = count_gaps(tribonacci(), DEFAULT_INTERVAL, 8)
    assert max(table.one_gap.values()) <= table.size
    assert max(table.two_gap.values()) <= table.size


def test_p2_stabilizes_like_one_over_n():
    ns = np.arange(10, 29)
    p2 = np.array([float(average_gap_measure(fib_batch(int(n)))(2)) for n in ns])
    diffs = np.abs(np.diff(p2))
    slope = np.polyfit(np.log(ns[:-1]), np.log(diffs), 1)[0]
    assert slope <= -0.5


@given(st.lists(st.integers(1, 10**9), min_size=1, max_size=40))
def test_average_masses_sum_to_one(zs):
    ds = [greedy_decompose(fibonacci(), z) for z in zs]
    if all(d.k == 1 for d in ds):
        return
    m = average_gap_measure(ds)
    assert sum(m.masses.values()) == 1
    assert all(p > 0 for p in m.masses.values())
