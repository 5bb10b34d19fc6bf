"""Spacing gap measures and indicator gap counts.

A gap of a decomposition ``z = b_{l_1} + ... + b_{l_k}`` is a difference
``l_j - l_{j-1}`` of consecutive summand indices, so ``z`` has ``k - 1`` gaps.
"""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from zeckgap.decomposition import (
    DEFAULT_BUDGET,
    Decomposition,
    DecompositionBatch,
    as_batch,
    enumerate_batch,
)
from zeckgap.sequence import DEFAULT_INTERVAL, IntervalSpec, SequenceSpec

__all__ = [
    "NoGapsError",
    "GapMeasure",
    "GapCountTable",
    "individual_gap_measure",
    "average_gap_measure",
    "gap_probability",
    "count_gaps",
    "ordered_pair_counts",
]


class NoGapsError(ValueError):
    """A decomposition (or every decomposition of a stream) has a single summand."""


@dataclass(frozen=True)
class GapMeasure:
    """Point masses on gap lengths ``g >= 0``.

    ``masses`` holds Fractions when the measure came from exact counts and
    floats otherwise. ``counts``/``total_gaps`` are kept when known so the
    measure can be re-serialized without loss.
    """

    masses: Mapping[int, Fraction | float]
    total_gaps: int | None = None
    counts: Mapping[int, int] | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        masses = {int(g): m for g, m in sorted(self.masses.items()) if m != 0}
        if not masses:
            raise ValueError("a gap measure needs positive mass somewhere")
        if any(g < 0 for g in masses):
            raise ValueError("gap lengths are nonnegative")
        if any(m < 0 for m in masses.values()):
            raise ValueError("masses must be nonnegative")
        total = sum(masses.values())
        if all(isinstance(m, Fraction) for m in masses.values()):
            if total != 1:
                raise ValueError(f"masses sum to {total}, not 1")
        elif abs(float(total) - 1.0) > 1e-12:
            raise ValueError(f"masses sum to {float(total)!r}, not 1")
        object.__setattr__(self, "masses", masses)

    @classmethod
    def from_counts(cls, counts: Mapping[int, int], exact: bool = True) -> GapMeasure:
        counts = {int(g): int(c) for g, c in sorted(counts.items()) if c}
        total = sum(counts.values())
        if total == 0:
            raise NoGapsError("no gaps to build a measure from")
        if exact:
            masses = {g: Fraction(c, total) for g, c in counts.items()}
        else:
            masses = {g: c / total for g, c in counts.items()}
        return cls(masses, total_gaps=total, counts=counts)

    @property
    def exact(self) -> bool:
        return all(isinstance(m, Fraction) for m in self.masses.values())

    @property
    def support(self) -> list[int]:
        return list(self.masses)

    @property
    def support_max(self) -> int:
        return max(self.masses)

    def __call__(self, g: int) -> Fraction | float:
        return self.masses.get(g, 0)

    def to_array(self, size: int | None = None) -> np.ndarray:
        """Dense float vector ``p[g]``, zero-padded (or truncated) to ``size``."""
        size = self.support_max + 1 if size is None else size
        out = np.zeros(size)
        for g, m in self.masses.items():
            if g < size:
                out[g] = float(m)
        return out


@dataclass
class GapCountTable:
    """Exact indicator counts over ``I_n``.

    ``one_gap[(i, g)]`` counts gaps from ``b_i`` to ``b_{i+g}`` with nothing in
    between; ``two_gap[(j1, g1, j2, g2)]`` (``j1 < j2``) counts ``z`` holding
    two such gaps. ``pair_totals[g1, g2]`` is the sum of ``two_gap`` over
    ``j1 < j2`` and is always complete even when ``two_gap`` was truncated at
    ``pair_limit`` keys.
    """

    n: int
    size: int
    n_gaps: int
    g_max: int
    one_gap: dict[tuple[int, int], int]
    two_gap: dict[tuple[int, int, int, int], int]
    pair_totals: np.ndarray
    truncated: bool = False

    def __add__(self, other: GapCountTable) -> GapCountTable:
        if (self.n, self.g_max) != (other.n, other.g_max):
            raise ValueError("can only merge tables for the same n and g_max")
        return GapCountTable(
            n=self.n,
            size=self.size + other.size,
            n_gaps=self.n_gaps + other.n_gaps,
            g_max=self.g_max,
            one_gap=_merge(self.one_gap, other.one_gap),
            two_gap=_merge(self.two_gap, other.two_gap),
            pair_totals=self.pair_totals + other.pair_totals,
            truncated=self.truncated or other.truncated,
        )

    def one_gap_total(self, g: int) -> int:
        return sum(c for (_, gg), c in self.one_gap.items() if gg == g)


def _merge(a: dict, b: dict) -> dict:
    out = dict(a)
    for key, c in b.items():
        out[key] = out.get(key, 0) + c
    return out


def individual_gap_measure(d: Decomposition) -> GapMeasure:
    if d.k < 2:
        raise NoGapsError(f"z={d.value} has a single summand and no gaps")
    counts: dict[int, int] = {}
    for g in d.gaps:
        counts[g] = counts.get(g, 0) + 1
    return GapMeasure.from_counts(counts)


def average_gap_measure(decomps: DecompositionBatch | list[Decomposition]) -> GapMeasure:
    """Pool all gaps of the stream; exact when the batch is a full enumeration."""
    batch = as_batch(decomps)
    if len(batch) == 0:
        raise ValueError("empty decomposition stream")
    gaps = batch.gaps
    if len(gaps) == 0:
        raise NoGapsError("every decomposition in the stream has a single summand")
    hist = np.bincount(gaps)
    counts = {int(g): int(c) for g, c in enumerate(hist) if c}
    return GapMeasure.from_counts(counts, exact=batch.exact)


def gap_probability(m: GapMeasure, g: int) -> Fraction | float:
    if g < 0:
        raise ValueError("gap length must be nonnegative")
    return m(g)


def ordered_pair_counts(batch: DecompositionBatch, g_max: int) -> np.ndarray:
    """``M[g1, g2]`` = number of (z, r < w) with gap r of length g1 and gap w of length g2.

    Both gaps are between consecutive summands of the same ``z``; ``r`` comes
    first in index order.
    """
    size = g_max + 1
    gaps, owner = batch.gaps, batch.gap_owner
    keep = gaps <= g_max
    onehot = np.zeros((len(gaps), size))
    onehot[np.nonzero(keep)[0], gaps[keep]] = 1.0
    running = np.cumsum(onehot, axis=0)
    # running count at the start of each row, subtracted to restart the tally per z
    row_start = np.ones(len(gaps), dtype=bool)
    row_start[1:] = owner[1:] != owner[:-1]
    first = np.maximum.accumulate(np.where(row_start, np.arange(len(gaps)), 0))
    before = running - onehot - (running[first] - onehot[first])
    return np.rint(before.T @ onehot).astype(np.int64)


def count_gaps(
    spec: SequenceSpec,
    ispec: IntervalSpec = DEFAULT_INTERVAL,
    n: int = 1,
    g_max: int | None = None,
    pair_limit: int = 1_000_000,
    budget: int = DEFAULT_BUDGET,
    batch: DecompositionBatch | None = None,
) -> GapCountTable:
    """One pass over ``I_n`` collecting one-gap and two-gap indicator counts."""
    if batch is None:
        batch = enumerate_batch(spec, ispec, n, budget)
    g_max = 2 * n if g_max is None else g_max
    gaps, owner, start = batch.gaps, batch.gap_owner, batch.gap_start

    keep = gaps <= g_max
    key, cnt = np.unique(np.stack([start[keep], gaps[keep]]), axis=1, return_counts=True)
    one_gap = {(int(i), int(g)): int(c) for (i, g), c in zip(key.T, cnt)}

    two_gap, truncated = _two_gap_table(gaps, owner, start, g_max, pair_limit)
    return GapCountTable(
        n=n,
        size=len(batch),
        n_gaps=batch.n_gaps,
        g_max=g_max,
        one_gap=one_gap,
        two_gap=two_gap,
        pair_totals=ordered_pair_counts(batch, g_max),
        truncated=truncated,
    )


def _two_gap_table(gaps, owner, start, g_max, pair_limit):
    if len(gaps) == 0:
        return {}, False
    per_row = np.bincount(owner)
    row_of_gap = per_row[owner]
    first_gap = np.zeros(len(per_row) + 1, dtype=np.int64)
    np.cumsum(per_row, out=first_gap[1:])
    radix = int(max(start.max() + gaps.max(), g_max)) + 1
    keys = []
    # rows with equal gap count share one triangular pair pattern
    for m in np.unique(row_of_gap):
        if m < 2:
            continue
        rows = np.nonzero(per_row == m)[0]
        base_ = first_gap[rows][:, None] + np.arange(m)
        r, w = np.triu_indices(m, k=1)
        g1, g2 = gaps[base_[:, r]], gaps[base_[:, w]]
        j1, j2 = start[base_[:, r]], start[base_[:, w]]
        ok = (g1 <= g_max) & (g2 <= g_max)
        packed = ((j1[ok] * radix + g1[ok]) * radix + j2[ok]) * radix + g2[ok]
        keys.append(packed.astype(np.int64))
    if not keys:
        return {}, False
    uniq, cnt = np.unique(np.concatenate(keys), return_counts=True)
    truncated = len(uniq) > pair_limit
    table = {}
    for packed, c in zip(uniq[:pair_limit].tolist(), cnt[:pair_limit].tolist()):
        packed, g2 = divmod(packed, radix)
        packed, j2 = divmod(packed, radix)
        j1, g1 = divmod(packed, radix)
        table[(j1, g1, j2, g2)] = c
    return table, truncated
