"""
Gap measures on an interval
===========================

Enumerate I_n = [F_n, F_{n+1}), pool the gaps and look at single-gap and
two-gap counts.
"""

from zeckgap import DEFAULT_INTERVAL, average_gap_measure, count_gaps, enumerate_batch, fibonacci

fib = fibonacci()

batch = enumerate_batch(fib, DEFAULT_INTERVAL, 5)
for d in batch:
    print(d.value, d.indices)

m = average_gap_measure(batch)
print("P_5:", {g: str(p) for g, p in m.masses.items()}, "total gaps:", m.total_gaps)

# counts are exact rationals; the pooled law settles quickly as n grows
for n in (10, 15, 20, 25):
    m = average_gap_measure(enumerate_batch(fib, DEFAULT_INTERVAL, n))
    print(n, " ".join(f"{float(m(g)):.5f}" for g in range(2, 9)))

table = count_gaps(fib, DEFAULT_INTERVAL, 12, g_max=6)
print("gaps in I_12:", table.n_gaps)
print("ordered gap-pair totals for g1, g2 in 2..4:")
print(table.pair_totals[2:5, 2:5])
