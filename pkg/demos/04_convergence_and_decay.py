"""
Distance to the limit law and geometric decay
=============================================

How many individual measures sit far from the pooled law, and how fast
P_n(g) falls off in g.
"""

from zeckgap import DEFAULT_INTERVAL, average_gap_measure, convergence_profile, decay_fit, enumerate_batch, fibonacci
from zeckgap.decomposition import sample_batch
from zeckgap.sequence import dominant_root

fib = fibonacci()
phi = dominant_root(fib)

report = convergence_profile(fib, DEFAULT_INTERVAL, [12, 18, 24, 28], epsilon=0.5)
print(report.reference)
for row in report.rows:
    print(f"n={row.n:>2}  mean L1={row.mean:.4f}  fraction above 0.5={row.fraction_above:.4f}")

fit = decay_fit(average_gap_measure(enumerate_batch(fib, DEFAULT_INTERVAL, 28)), 3, 10, lambda_ref=phi)
print(f"log-linear fit on g in [3, 10]: ratio={fit.ratio:.4f}  R^2={fit.r_squared:.6f}")
print(f"1/phi={1 / phi:.4f}  1/phi^2={1 / phi**2:.4f}")

# far beyond enumeration range the same statistics come from uniform samples
big = sample_batch(fib, DEFAULT_INTERVAL, 200, 20_000, seed=1)
m = average_gap_measure(big)
print("n=200 sampled P(2..5):", [round(m(g), 4) for g in range(2, 6)])
