"""
Greedy decompositions over linear recurrences
=============================================

Terms, greedy digit expansions and the legality check for a few families.
"""

from zeckgap import base, fibonacci, greedy_decompose, recompose, tribonacci, verify_uniqueness
from zeckgap.sequence import dominant_root

fib = fibonacci()
print("Fibonacci terms:", fib.terms(12))
print("dominant root:", dominant_root(fib))

# every integer has exactly one legal decomposition
for z in (12, 100, 2024):
    d = greedy_decompose(fib, z)
    parts = " + ".join(str(fib.term(i)) for i in reversed(d.indices))
    print(f"{z} = {parts}   indices={d.indices}  gaps={d.gaps}")

# the same greedy step works for any positive linear recurrence
for spec in (tribonacci(), base(10)):
    d = greedy_decompose(spec, 3047)
    print(spec.name, d.indices, "->", recompose(spec, d))

report = verify_uniqueness(fib, 5000)
print("uniqueness up to 5000:", "ok" if report.ok else report.violations)
