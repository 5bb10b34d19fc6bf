"""Positive linear recurrences and the study intervals ``[b_{c1 n + d1}, b_{c2 n + d2})``.

A :class:`SequenceSpec` describes

    b_{i+L} = c_1 b_{i+L-1} + ... + c_L b_i

together with its first ``L`` terms. Terms are exact Python integers and are
cached per spec in an append-only table.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import optimize

__all__ = [
    "SequenceSpec",
    "IntervalSpec",
    "DEFAULT_INTERVAL",
    "fibonacci",
    "tribonacci",
    "base",
    "get_family",
    "family_names",
    "load_families",
    "save_families",
    "term",
    "dominant_root",
    "interval",
]


@dataclass(frozen=True)
class SequenceSpec:
    """A positive linear recurrence with nonnegative integer coefficients.

    ``initial_terms`` must start at 1 so that every positive integer has a
    greedy decomposition, and the whole sequence must be strictly increasing.
    """

    name: str
    coefficients: tuple[int, ...]
    initial_terms: tuple[int, ...]
    _terms: list[int] = field(default_factory=list, init=False, repr=False, compare=False, hash=False)

    def __post_init__(self) -> None:
        coeffs = tuple(int(c) for c in self.coefficients)
        init = tuple(int(b) for b in self.initial_terms)
        object.__setattr__(self, "coefficients", coeffs)
        object.__setattr__(self, "initial_terms", init)
        if not self.name:
            raise ValueError("sequence name must be nonempty")
        if not coeffs:
            raise ValueError("recurrence needs at least one coefficient")
        if len(init) != len(coeffs):
            raise ValueError(f"expected {len(coeffs)} initial terms, got {len(init)}")
        if any(c < 0 for c in coeffs):
            raise ValueError("coefficients must be nonnegative")
        if coeffs[0] <= 0:
            raise ValueError("leading coefficient must be positive")
        if init[0] != 1:
            raise ValueError("the first term must be 1 so every positive integer decomposes")
        if any(a >= b for a, b in zip(init, init[1:])):
            raise ValueError("initial terms must be strictly increasing")
        self._terms.extend(init)
        # With c_1 > 0 the increments obey d_{i+1} >= c_1 d_i, so checking the
        # first recurrence-produced step settles monotonicity for good.
        if self.term(len(init) + 1) <= self.term(len(init)):
            raise ValueError(f"{self.name}: terms are not strictly increasing")

    @property
    def order(self) -> int:
        return len(self.coefficients)

    @property
    def is_fibonacci(self) -> bool:
        return self.coefficients == (1, 1) and self.initial_terms == (1, 2)

    def term(self, i: int) -> int:
        """Return ``b_i`` (1-based)."""
        if i < 1:
            raise ValueError(f"term index must be >= 1, got {i}")
        terms = self._terms
        L = self.order
        while len(terms) < i:
            nxt = 0
            for c, b in zip(self.coefficients, reversed(terms[-L:])):
                nxt += c * b
            terms.append(nxt)
        return terms[i - 1]

    def terms(self, upto: int) -> tuple[int, ...]:
        """Return ``(b_1, ..., b_upto)``; warms the cache as a side effect."""
        if upto < 1:
            return ()
        self.term(upto)
        return tuple(self._terms[:upto])

    def largest_index_at_most(self, z: int) -> int:
        """Largest ``i`` with ``b_i <= z`` (``z >= 1``)."""
        if z < 1:
            raise ValueError("z must be positive")
        i = 1
        while self.term(i + 1) <= z:
            i += 1
        return i

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "coefficients": list(self.coefficients),
            "initial_terms": list(self.initial_terms),
        }

    @classmethod
    def from_dict(cls, data: dict) -> SequenceSpec:
        return cls(
            name=str(data["name"]),
            coefficients=tuple(int(c) for c in data["coefficients"]),
            initial_terms=tuple(int(b) for b in data["initial_terms"]),
        )


@dataclass(frozen=True)
class IntervalSpec:
    """Constants fixing ``I_n = [b_{c1 n + d1}, b_{c2 n + d2})``.

    ``n_min`` is the smallest ``n >= 1`` from which the interval is nonempty
    and its lower index is at least 1 for every larger ``n``.
    """

    c1: int = 1
    d1: int = 0
    c2: int = 1
    d2: int = 1
    n_min: int = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "n_min", self._compute_n_min())

    def _compute_n_min(self) -> int:
        c1, d1, c2, d2 = self.c1, self.d1, self.c2, self.d2
        # both constraints are linear in n, so they must eventually hold forever
        if c1 < 0 or (c1 == 0 and d1 < 1):
            raise ValueError(f"lower index c1*n+d1 = {c1}*n+{d1} is not eventually >= 1")
        dc, dd = c2 - c1, d2 - d1
        if dc < 0 or (dc == 0 and dd <= 0):
            raise ValueError(f"interval [b_{{{c1}n+{d1}}}, b_{{{c2}n+{d2}}}) is empty for large n")
        n = 1
        if c1 > 0:
            n = max(n, math.ceil((1 - d1) / c1))
        if dc > 0:
            n = max(n, (-dd) // dc + 1)
        return n

    def lower_index(self, n: int) -> int:
        return self.c1 * n + self.d1

    def upper_index(self, n: int) -> int:
        return self.c2 * n + self.d2


DEFAULT_INTERVAL = IntervalSpec()


def fibonacci() -> SequenceSpec:
    """Fibonacci numbers normalized as F_1 = 1, F_2 = 2."""
    return SequenceSpec("fibonacci", (1, 1), (1, 2))


def tribonacci() -> SequenceSpec:
    return SequenceSpec("tribonacci", (1, 1, 1), (1, 2, 4))


def base(radix: int) -> SequenceSpec:
    """Powers of ``radix``: b_{i+1} = radix * b_i, b_1 = 1."""
    if radix < 2:
        raise ValueError("radix must be at least 2")
    return SequenceSpec(f"base{radix}", (radix,), (1,))


_BUILTIN = {
    "fibonacci": fibonacci,
    "tribonacci": tribonacci,
}


def family_names() -> list[str]:
    return sorted(_BUILTIN) + ["base<B>"]


def get_family(name: str, config: str | os.PathLike | None = None) -> SequenceSpec:
    """Resolve a family by name: builtins, ``base<B>`` / ``base-<B>``, or a config file entry."""
    key = name.strip().lower()
    if config is not None:
        for spec in load_families(config):
            if spec.name.lower() == key:
                return spec
    if key in _BUILTIN:
        return _BUILTIN[key]()
    if key.startswith("base"):
        digits = key[4:].lstrip("-_")
        if digits.isdigit():
            return base(int(digits))
    raise KeyError(f"unknown sequence family {name!r}")


def load_families(path: str | os.PathLike) -> list[SequenceSpec]:
    """Read families from a JSON file ``{"families": [{name, coefficients, initial_terms}, ...]}``."""
    data = json.loads(Path(path).read_text())
    entries = data["families"] if isinstance(data, dict) else data
    return [SequenceSpec.from_dict(e) for e in entries]


def save_families(specs, path: str | os.PathLike) -> None:
    payload = {"families": [s.to_dict() for s in specs]}
    Path(path).write_text(json.dumps(payload, indent=2) + "\n")


def term(spec: SequenceSpec, i: int) -> int:
    return spec.term(i)


def dominant_root(spec: SequenceSpec, maxiter: int = 200) -> float:
    """Largest real root of ``x^L - c_1 x^{L-1} - ... - c_L``.

    Raises ``RuntimeError`` if the bracketed search fails to converge or if
    another root ties it in modulus.
    """
    coeffs = spec.coefficients
    if spec.order == 1:
        return float(coeffs[0])

    # x^L p(x)^{-1} rescaled: q(x) = 1 - sum c_j x^{-j} is increasing on x > 0
    def q(x: float) -> float:
        return 1.0 - sum(c * x ** -(j + 1) for j, c in enumerate(coeffs))

    hi = 1.0 + max(coeffs)
    lo = hi
    while q(lo) > 0:
        lo /= 2.0
    try:
        root = optimize.brentq(q, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=maxiter)
    except (RuntimeError, ValueError) as exc:
        raise RuntimeError(f"dominant root of {spec.name} did not converge: {exc}") from exc

    others = np.roots([1.0] + [-float(c) for c in coeffs])
    close = np.abs(others - root) < 1e-6 * root
    if np.any(np.abs(others[~close]) >= root * (1 - 1e-9)):
        raise RuntimeError(f"{spec.name}: no unique root of maximal modulus")
    return float(root)


def interval(spec: SequenceSpec, ispec: IntervalSpec, n: int) -> tuple[int, int]:
    """Return ``(lo, hi)`` with ``I_n = [lo, hi)``."""
    if n < ispec.n_min:
        raise ValueError(f"n={n} is below n_min={ispec.n_min} for {ispec}")
    lo = spec.term(ispec.lower_index(n))
    hi = spec.term(ispec.upper_index(n))
    return lo, hi
