"""
Convergence diagnostics for the individual gap measures
=======================================================

Summand-count Gaussianity, characteristic-function variance, the two
lemma sums and the two-gap factorization error, tracked as n grows.
"""

from zeckgap import (
    DEFAULT_INTERVAL,
    average_gap_measure,
    enumerate_batch,
    factorization_check,
    fibonacci,
    gaussianity_check,
    lemma1_diagnostic,
    lemma2_diagnostic,
    summand_count_stats,
    variance_char,
)

fib = fibonacci()
ns = [12, 16, 20, 24]
batches = {n: enumerate_batch(fib, DEFAULT_INTERVAL, n) for n in ns}
P_ref = average_gap_measure(enumerate_batch(fib, DEFAULT_INTERVAL, 26))

print(f"{'n':>3} {'mu_n':>8} {'KS':>7} {'Var(1)':>8} {'|L1(1)|':>8} {'|L2(1)|':>8} {'fact.err':>9}")
for n in ns:
    b = batches[n]
    s = summand_count_stats(b, n)
    ks = gaussianity_check(s)
    var = variance_char(b, 1.0).variance_modulus
    l1 = abs(lemma1_diagnostic(b, s, 1.0))
    l2 = abs(lemma2_diagnostic(b, s, 1.0))
    err = factorization_check(fib, DEFAULT_INTERVAL, n, g_max=8, P_ref=P_ref, batch=b).error_total
    print(f"{n:>3} {float(s.mu_n):8.4f} {ks:7.4f} {var:8.4f} {l1:8.4f} {l2:8.4f} {err:9.4f}")

# at t = 0 every individual characteristic function equals 1
print("Var_n(0) at n=24:", variance_char(batches[24], 0.0).variance)
