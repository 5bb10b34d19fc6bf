"""Greedy decompositions, interval enumeration and uniform sampling.

Bulk work goes through :class:`DecompositionBatch`, a CSR-style container
(flat index array plus row offsets) that the statistics modules consume with
numpy. Single decompositions are plain immutable :class:`Decomposition`
records; iterating a batch yields them.
"""

from __future__ import annotations

import random
from collections.abc import Iterable, Iterator
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from zeckgap.sequence import DEFAULT_INTERVAL, IntervalSpec, SequenceSpec, interval

__all__ = [
    "DEFAULT_BUDGET",
    "BudgetExceededError",
    "Decomposition",
    "DecompositionBatch",
    "UniquenessReport",
    "greedy_decompose",
    "recompose",
    "is_legal",
    "enumerate_batch",
    "enumerate_interval",
    "sample_batch",
    "sample_interval",
    "verify_uniqueness",
]

DEFAULT_BUDGET = 10**7
SAMPLE_CHUNK = 1 << 14
_INT64_SAFE = 1 << 62
_ROW_CHUNK = 1 << 18


class BudgetExceededError(RuntimeError):
    """Raised when an interval is too large to enumerate."""


@dataclass(frozen=True)
class Decomposition:
    """``value = sum(b_i for i in indices)`` with ``indices`` nondecreasing."""

    value: int
    indices: tuple[int, ...]

    def __post_init__(self) -> None:
        if not self.indices:
            raise ValueError("a decomposition needs at least one summand")
        if any(a > b for a, b in zip(self.indices, self.indices[1:])):
            raise ValueError("indices must be nondecreasing")
        if self.indices[0] < 1:
            raise ValueError("indices are 1-based")

    @property
    def k(self) -> int:
        return len(self.indices)

    @property
    def gaps(self) -> tuple[int, ...]:
        idx = self.indices
        return tuple(b - a for a, b in zip(idx, idx[1:]))


@dataclass(frozen=True, eq=False)
class DecompositionBatch:
    """Many decompositions stored flat.

    ``indices[offsets[r]:offsets[r + 1]]`` are the summand indices of row ``r``.
    ``exact`` is True when the rows are a full enumeration of an interval
    (statistics are then exact rationals) and False for samples.
    """

    values: np.ndarray
    offsets: np.ndarray
    indices: np.ndarray
    exact: bool = True
    n: int | None = None
    label: str = field(default="", compare=False)

    def __len__(self) -> int:
        return len(self.offsets) - 1

    def __getitem__(self, r: int) -> Decomposition:
        lo, hi = self.offsets[r], self.offsets[r + 1]
        return Decomposition(int(self.values[r]), tuple(int(i) for i in self.indices[lo:hi]))

    def __iter__(self) -> Iterator[Decomposition]:
        offsets = self.offsets.tolist()
        idx = self.indices.tolist()
        for r, v in enumerate(self.values.tolist()):
            yield Decomposition(int(v), tuple(idx[offsets[r] : offsets[r + 1]]))

    @cached_property
    def k(self) -> np.ndarray:
        return np.diff(self.offsets)

    @cached_property
    def owner(self) -> np.ndarray:
        """Row number of every entry of ``indices``."""
        return np.repeat(np.arange(len(self), dtype=np.int64), self.k)

    @cached_property
    def _gap_data(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        idx = self.indices.astype(np.int64)
        same = self.owner[1:] == self.owner[:-1]
        gaps = (idx[1:] - idx[:-1])[same]
        gap_owner = self.owner[1:][same]
        starts = idx[:-1][same]
        return gaps, gap_owner, starts

    @property
    def gaps(self) -> np.ndarray:
        """All gaps ``l_j - l_{j-1}`` in row order."""
        return self._gap_data[0]

    @property
    def gap_owner(self) -> np.ndarray:
        return self._gap_data[1]

    @property
    def gap_start(self) -> np.ndarray:
        """Lower summand index ``l_{j-1}`` of each gap."""
        return self._gap_data[2]

    @property
    def n_gaps(self) -> int:
        return int(len(self.indices) - len(self))

    @classmethod
    def from_decompositions(cls, decomps: Iterable[Decomposition], exact: bool = True, n: int | None = None) -> DecompositionBatch:
        values: list[int] = []
        flat: list[int] = []
        offsets = [0]
        for d in decomps:
            values.append(d.value)
            flat.extend(d.indices)
            offsets.append(len(flat))
        return cls(
            values=_int_array(values),
            offsets=np.asarray(offsets, dtype=np.int64),
            indices=np.asarray(flat, dtype=np.int32),
            exact=exact,
            n=n,
        )

    @classmethod
    def from_digits(cls, values: np.ndarray, digits: np.ndarray, exact: bool = True, n: int | None = None) -> DecompositionBatch:
        """Build from a digit matrix; ``digits[r, i - 1]`` is the multiplicity of ``b_i`` in row ``r``."""
        rows, cols = np.nonzero(digits)
        reps = digits[rows, cols].astype(np.int64)
        indices = np.repeat((cols + 1).astype(np.int32), reps)
        k = digits.sum(axis=1, dtype=np.int64)
        offsets = np.zeros(len(values) + 1, dtype=np.int64)
        np.cumsum(k, out=offsets[1:])
        return cls(values=values, offsets=offsets, indices=indices, exact=exact, n=n)

    @classmethod
    def concat(cls, parts: list[DecompositionBatch], exact: bool | None = None, n: int | None = None) -> DecompositionBatch:
        if not parts:
            return cls(np.zeros(0, np.int64), np.zeros(1, np.int64), np.zeros(0, np.int32), exact=bool(exact), n=n)
        values = np.concatenate([p.values for p in parts])
        if values.dtype == object or any(p.values.dtype == object for p in parts):
            values = np.array([int(v) for p in parts for v in p.values], dtype=object)
        indices = np.concatenate([p.indices for p in parts])
        offsets = [np.zeros(1, np.int64)]
        base_ = 0
        for p in parts:
            offsets.append(p.offsets[1:] + base_)
            base_ += int(p.offsets[-1])
        return cls(
            values=values,
            offsets=np.concatenate(offsets),
            indices=indices,
            exact=all(p.exact for p in parts) if exact is None else exact,
            n=n if n is not None else parts[0].n,
        )


def as_batch(decomps) -> DecompositionBatch:
    if isinstance(decomps, DecompositionBatch):
        return decomps
    return DecompositionBatch.from_decompositions(decomps)


def _int_array(values) -> np.ndarray:
    values = list(values)
    if values and max(values) >= _INT64_SAFE:
        return np.array(values, dtype=object)
    return np.asarray(values, dtype=np.int64)


def greedy_decompose(spec: SequenceSpec, z: int) -> Decomposition:
    """Repeatedly subtract the largest ``b_i`` not exceeding what is left."""
    z = int(z)
    if z < 1:
        raise ValueError(f"only positive integers decompose, got {z}")
    i = spec.largest_index_at_most(z)
    rem = z
    picked: list[int] = []
    while rem:
        b = spec.term(i)
        if b <= rem:
            q, rem = divmod(rem, b)
            picked.extend([i] * q)
        i -= 1
    picked.reverse()
    return Decomposition(z, tuple(picked))


def recompose(spec: SequenceSpec, d: Decomposition | Iterable[int]) -> int:
    indices = d.indices if isinstance(d, Decomposition) else tuple(d)
    if not indices:
        raise ValueError("empty index list")
    return sum(spec.term(i) for i in indices)


def _digit_counts(indices: Iterable[int]) -> dict[int, int]:
    counts: dict[int, int] = {}
    for i in indices:
        counts[i] = counts.get(i, 0) + 1
    return counts


def is_legal(spec: SequenceSpec, d: Decomposition) -> bool:
    """Generalized Zeckendorf legality of the digit string of ``d``.

    Reading digits from the top index down, the string must split into blocks
    ``(c_1, ..., c_{s-1}, a_s)`` with ``a_s < c_s``, optionally ending in a
    proper prefix ``(c_1, ..., c_m)`` with ``m < L``. For Fibonacci this is
    "no two adjacent ones"; for base B it is "every digit below B".
    """
    counts = _digit_counts(d.indices)
    top = max(counts)
    state = 0
    for i in range(top, 0, -1):
        a = counts.get(i, 0)
        state = _advance(spec.coefficients, state, a)
        if state < 0:
            return False
    return True


def _advance(coeffs: tuple[int, ...], state: int, digit: int) -> int:
    """Parser step: ``state`` is how many leading coefficients the current block has matched."""
    c = coeffs[state]
    if digit < c:
        return 0
    if digit == c and state + 1 < len(coeffs):
        return state + 1
    return -1


def _greedy_digits(values: np.ndarray, terms: np.ndarray) -> np.ndarray:
    """Vectorized greedy over int64 values; returns digits of shape (len(values), len(terms))."""
    rem = values.copy()
    digits = np.zeros((len(values), len(terms)), dtype=np.int16)
    for col in range(len(terms) - 1, -1, -1):
        q = rem // terms[col]
        digits[:, col] = q
        rem -= q * terms[col]
    if np.any(rem):
        raise RuntimeError("greedy left a remainder; sequence must start at 1")
    return digits


def _batch_from_values(spec: SequenceSpec, values: np.ndarray, exact: bool, n: int | None) -> DecompositionBatch:
    if len(values) == 0:
        return DecompositionBatch.concat([], exact=exact, n=n)
    vmax = int(max(values))
    if vmax >= _INT64_SAFE:
        return DecompositionBatch.from_decompositions((greedy_decompose(spec, int(v)) for v in values), exact=exact, n=n)
    top = spec.largest_index_at_most(vmax)
    terms = np.asarray(spec.terms(top), dtype=np.int64)
    values = np.asarray(values, dtype=np.int64)
    parts = []
    for start in range(0, len(values), _ROW_CHUNK):
        chunk = values[start : start + _ROW_CHUNK]
        parts.append(DecompositionBatch.from_digits(chunk, _greedy_digits(chunk, terms), exact=exact, n=n))
    return DecompositionBatch.concat(parts, exact=exact, n=n)


# Legal Fibonacci strings on indices 1..m, as bitmasks in ascending value order:
# L(m) = L(m-1) followed by (bit m) | L(m-2).
_FIB_MASKS: dict[int, np.ndarray] = {}


def _fib_masks(m: int) -> np.ndarray:
    if m <= 0:
        return np.zeros(1, dtype=np.int64)
    if m not in _FIB_MASKS:
        if m == 1:
            out = np.array([0, 1], dtype=np.int64)
        else:
            out = np.concatenate([_fib_masks(m - 1), _fib_masks(m - 2) | np.int64(1 << (m - 1))])
        _FIB_MASKS[m] = out
    return _FIB_MASKS[m]


def _fibonacci_walk(spec: SequenceSpec, lo_index: int, hi_index: int, n: int | None) -> DecompositionBatch:
    """Enumerate ``[F_a, F_c)`` block by block: top summand F_m, then any legal string below m-1."""
    parts = []
    terms = np.asarray(spec.terms(max(hi_index, 2)), dtype=np.int64)
    for m in range(lo_index, hi_index):
        tail = _fib_masks(m - 2)
        masks = tail | np.int64(1 << (m - 1))
        for start in range(0, len(masks), _ROW_CHUNK):
            chunk = masks[start : start + _ROW_CHUNK]
            digits = ((chunk[:, None] >> np.arange(m, dtype=np.int64)) & 1).astype(np.int8)
            values = digits.astype(np.int64) @ terms[:m]
            parts.append(DecompositionBatch.from_digits(values, digits, exact=True, n=n))
    return DecompositionBatch.concat(parts, exact=True, n=n)


def enumerate_batch(
    spec: SequenceSpec,
    ispec: IntervalSpec = DEFAULT_INTERVAL,
    n: int = 1,
    budget: int = DEFAULT_BUDGET,
) -> DecompositionBatch:
    """All decompositions of ``I_n`` in ascending ``z`` as one batch."""
    lo, hi = interval(spec, ispec, n)
    size = hi - lo
    if size > budget:
        raise BudgetExceededError(
            f"|I_{n}| = {size} exceeds the enumeration budget {budget}; use sample_interval instead"
        )
    a, c = ispec.lower_index(n), ispec.upper_index(n)
    if spec.is_fibonacci and c <= 62:
        batch = _fibonacci_walk(spec, a, c, n)
    else:
        if hi <= _INT64_SAFE:
            values = np.arange(lo, hi, dtype=np.int64)
        else:
            values = np.array(range(lo, hi), dtype=object)
        batch = _batch_from_values(spec, values, exact=True, n=n)
    return DecompositionBatch(batch.values, batch.offsets, batch.indices, exact=True, n=n, label=spec.name)


def enumerate_interval(
    spec: SequenceSpec,
    ispec: IntervalSpec = DEFAULT_INTERVAL,
    n: int = 1,
    budget: int = DEFAULT_BUDGET,
) -> Iterator[Decomposition]:
    """Yield the decomposition of every ``z`` in ``I_n`` once, in ascending order."""
    return iter(enumerate_batch(spec, ispec, n, budget))


def _chunk_seed(seed: int, chunk: int) -> int:
    state = np.random.SeedSequence(seed % (1 << 64), spawn_key=(chunk,)).generate_state(2, dtype=np.uint64)
    return int(state[0]) << 64 | int(state[1])


def _sample_chunk(args) -> DecompositionBatch:
    spec, lo, span, seed, chunk, size, n = args
    rng = random.Random(_chunk_seed(seed, chunk))
    values = _int_array(lo + rng.randrange(span) for _ in range(size))
    return _batch_from_values(spec, values, exact=False, n=n)


def sample_batch(
    spec: SequenceSpec,
    ispec: IntervalSpec = DEFAULT_INTERVAL,
    n: int = 1,
    count: int = 1,
    seed: int = 0,
    workers: int = 1,
) -> DecompositionBatch:
    """``count`` independent uniform draws from ``I_n``, decomposed.

    The stream is cut into fixed-size chunks, chunk ``c`` drawing from a
    generator seeded by ``(seed, c)``; chunks are concatenated in chunk order,
    so the result does not depend on ``workers``.
    """
    if count < 1:
        raise ValueError("count must be at least 1")
    lo, hi = interval(spec, ispec, n)
    jobs = [
        (spec, lo, hi - lo, seed, c, min(SAMPLE_CHUNK, count - start), n)
        for c, start in enumerate(range(0, count, SAMPLE_CHUNK))
    ]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_sample_chunk, jobs))
    else:
        parts = [_sample_chunk(job) for job in jobs]
    batch = DecompositionBatch.concat(parts, exact=False, n=n)
    return DecompositionBatch(batch.values, batch.offsets, batch.indices, exact=False, n=n, label=spec.name)


def sample_interval(
    spec: SequenceSpec,
    ispec: IntervalSpec = DEFAULT_INTERVAL,
    n: int = 1,
    count: int = 1,
    seed: int = 0,
    workers: int = 1,
) -> Iterator[Decomposition]:
    return iter(sample_batch(spec, ispec, n, count, seed, workers))


@dataclass
class UniquenessReport:
    family: str
    z_max: int
    checked: int
    legal_strings: int
    violations: dict[int, int]
    greedy_mismatches: list[int]

    @property
    def ok(self) -> bool:
        return not self.violations and not self.greedy_mismatches


def verify_uniqueness(spec: SequenceSpec, z_max: int) -> UniquenessReport:
    """Count every legal digit string with value in ``[1, z_max]``.

    The search walks all digit strings accepted by :func:`is_legal` (pruning
    once the running value passes ``z_max``), independent of the greedy rule.
    Any ``z`` hit a number of times other than once is a violation; any ``z``
    whose unique legal string differs from the greedy output is a mismatch.
    """
    if z_max < 1:
        raise ValueError("z_max must be positive")
    top = spec.largest_index_at_most(z_max)
    terms = spec.terms(top)
    coeffs = spec.coefficients
    hits = [0] * (z_max + 1)
    found: dict[int, tuple[int, ...]] = {}
    n_strings = 0
    # each stack entry: (next index to fill, running value, parser state, digits so far)
    stack: list[tuple[int, int, int, tuple[int, ...]]] = [(top, 0, 0, ())]
    while stack:
        i, value, state, digits = stack.pop()
        if i == 0:
            if value >= 1:
                n_strings += 1
                hits[value] += 1
                found[value] = digits
            continue
        b = terms[i - 1]
        c = coeffs[state]
        for a in range(c + 1):
            nxt = value + a * b
            if nxt > z_max:
                break
            new_state = _advance(coeffs, state, a)
            if new_state < 0:
                continue
            stack.append((i - 1, nxt, new_state, digits + (a,)))

    violations = {z: hits[z] for z in range(1, z_max + 1) if hits[z] != 1}
    mismatches = []
    for z, digits in found.items():
        if z in violations:
            continue
        indices: list[int] = []
        for pos, a in enumerate(digits):
            indices.extend([top - pos] * a)
        if tuple(sorted(indices)) != greedy_decompose(spec, z).indices:
            mismatches.append(z)
    return UniquenessReport(spec.name, z_max, z_max, n_strings, violations, sorted(mismatches))
