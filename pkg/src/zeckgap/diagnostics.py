"""Numerical checks of the hypotheses and proof quantities behind individual gap convergence.

Everything here takes a :class:`~zeckgap.decomposition.DecompositionBatch`
(or any iterable of decompositions) and works on whole intervals at once.

Several quantities (the lemma sums, the two-gap factorization, the diagonal
term) are normalized by a centring constant ``mu``. By default it is the mean
number of gaps per ``z``, i.e. ``mean(k) - 1``; see :func:`gap_centre`.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from fractions import Fraction

import numpy as np
from scipy import stats as sps

from zeckgap.decomposition import DEFAULT_BUDGET, DecompositionBatch, as_batch, enumerate_batch
from zeckgap.gapstats import GapMeasure, NoGapsError, average_gap_measure, ordered_pair_counts
from zeckgap.sequence import DEFAULT_INTERVAL, IntervalSpec, SequenceSpec

__all__ = [
    "DegenerateWarning",
    "SummandStats",
    "CharFnEval",
    "ConcentrationBand",
    "FactorizationReport",
    "summand_count_stats",
    "fit_summand_growth",
    "gaussianity_check",
    "char_fn_individual",
    "char_fn_average",
    "variance_char",
    "gap_centre",
    "lemma1_diagnostic",
    "lemma2_diagnostic",
    "diagonal_term",
    "concentration_check",
    "factorization_check",
    "is_decreasing",
]


class DegenerateWarning(RuntimeWarning):
    """The summand count is constant, so no normal fit exists."""


@dataclass(frozen=True)
class SummandStats:
    n: int | None
    size: int
    mu_n: Fraction | float
    sigma2_n: Fraction | float
    histogram: dict[int, int]
    exact: bool = True
    mu_stderr: float = 0.0
    c_mean_fit: float | None = None
    c_var_fit: float | None = None
    residual_max: float | None = None

    @property
    def max_k(self) -> int:
        return max(self.histogram)

    @property
    def sigma_n(self) -> float:
        return math.sqrt(float(self.sigma2_n))


@dataclass
class CharFnEval:
    """Characteristic-function summary at one ``t``.

    ``average_value`` is the mean of the individual values over ``z`` with at
    least two summands; ``pooled_value`` is the characteristic function of the
    pooled gap measure. ``variance`` is the literal complex mean of
    ``(value - average_value)**2``; ``variance_modulus`` uses ``|.|**2``.
    """

    t: float
    individual_values: np.ndarray = field(repr=False)
    average_value: complex
    pooled_value: complex
    variance: complex
    variance_modulus: float
    second_moment: complex


@dataclass(frozen=True)
class ConcentrationBand:
    delta: float
    mu: float
    c_var: float
    n: int
    lower: float
    upper: float
    outside_fraction: float
    reference_bound: float

    def __post_init__(self) -> None:
        if not 0 < self.delta < 0.5:
            raise ValueError("delta must lie in (0, 1/2)")

    def contains(self, k) -> np.ndarray | bool:
        k = np.asarray(k)
        return (k >= self.lower) & (k <= self.upper)


@dataclass
class FactorizationReport:
    n: int | None
    g_max: int
    mu: float
    lhs: np.ndarray
    rhs: np.ndarray

    @property
    def error(self) -> np.ndarray:
        return self.lhs - self.rhs

    @property
    def error_total(self) -> float:
        return float(np.abs(self.error).sum())


def summand_count_stats(decomps, n: int | None = None) -> SummandStats:
    """Mean, variance and histogram of ``k(z)``; exact rationals for enumerations."""
    batch = as_batch(decomps)
    size = len(batch)
    if size == 0:
        raise ValueError("empty decomposition stream")
    k = batch.k
    hist = np.bincount(k)
    histogram = {int(v): int(c) for v, c in enumerate(hist) if c}
    n = batch.n if n is None else n
    if batch.exact:
        s1 = int(k.sum())
        s2 = int((k * k).sum())
        mu = Fraction(s1, size)
        var = Fraction(s2, size) - mu * mu
        return SummandStats(n, size, mu, var, histogram, exact=True)
    kf = k.astype(float)
    mu = float(kf.mean())
    var = float(kf.var())
    stderr = float(kf.std(ddof=1) / math.sqrt(size)) if size > 1 else float("inf")
    return SummandStats(n, size, mu, var, histogram, exact=False, mu_stderr=stderr)


def fit_summand_growth(stats: list[SummandStats]) -> list[SummandStats]:
    """Least-squares lines through ``(n, mu_n)`` and ``(n, sigma_n^2)``.

    Returns copies of ``stats`` carrying the fitted slopes and the largest
    absolute residual of the mean fit.
    """
    if len(stats) < 2:
        raise ValueError("need at least two n values to fit growth constants")
    ns = np.array([s.n for s in stats], dtype=float)
    mus = np.array([float(s.mu_n) for s in stats])
    vars_ = np.array([float(s.sigma2_n) for s in stats])
    c_mean, b_mean = np.polyfit(ns, mus, 1)
    c_var, _ = np.polyfit(ns, vars_, 1)
    resid = float(np.abs(mus - (c_mean * ns + b_mean)).max())
    return [replace(s, c_mean_fit=float(c_mean), c_var_fit=float(c_var), residual_max=resid) for s in stats]


def gaussianity_check(stats: SummandStats) -> float:
    """Sup distance between the empirical CDF of ``k(z)`` and the fitted normal CDF.

    Both one-sided limits at every jump are compared, so the result is the
    Kolmogorov-Smirnov statistic of the discrete sample. A constant ``k``
    returns 1.0 with a :class:`DegenerateWarning`.
    """
    if not stats.histogram:
        raise ValueError("empty histogram")
    if float(stats.sigma2_n) <= 0:
        warnings.warn("summand count has zero variance", DegenerateWarning, stacklevel=2)
        return 1.0
    ks = np.array(sorted(stats.histogram), dtype=float)
    counts = np.array([stats.histogram[int(k)] for k in ks], dtype=float)
    cdf = np.cumsum(counts) / counts.sum()
    left = cdf - counts / counts.sum()
    normal = sps.norm.cdf(ks, loc=float(stats.mu_n), scale=stats.sigma_n)
    return float(max(np.abs(cdf - normal).max(), np.abs(left - normal).max()))


def char_fn_individual(d, t: float) -> complex:
    """``(1/(k-1)) * sum_j exp(i t (l_j - l_{j-1}))`` for one decomposition."""
    if d.k < 2:
        raise NoGapsError(f"z={d.value} has no gaps")
    gaps = np.asarray(d.gaps, dtype=float)
    return complex(np.exp(1j * t * gaps).mean())


def char_fn_average(m: GapMeasure, t: float) -> complex:
    return complex(sum(float(p) * np.exp(1j * t * g) for g, p in m.masses.items()))


def _phase_sums(batch: DecompositionBatch, t: float) -> np.ndarray:
    """Per-row ``sum_j exp(i t g_j)``; zero for single-summand rows."""
    gaps = batch.gaps.astype(float)
    re = np.bincount(batch.gap_owner, weights=np.cos(t * gaps), minlength=len(batch))
    im = np.bincount(batch.gap_owner, weights=np.sin(t * gaps), minlength=len(batch))
    return re + 1j * im


def variance_char(decomps, t: float) -> CharFnEval:
    batch = as_batch(decomps)
    gaps_per_row = batch.k - 1
    ok = gaps_per_row > 0
    if ok.sum() < 1:
        raise NoGapsError("no decomposition with two or more summands")
    sums = _phase_sums(batch, t)
    values = sums[ok] / gaps_per_row[ok]
    mean = _cmean(values)
    dev = values - mean
    pooled = _cmean(sums, int(gaps_per_row.sum()))
    return CharFnEval(
        t=t,
        individual_values=values,
        average_value=mean,
        pooled_value=pooled,
        variance=_cmean(dev * dev),
        variance_modulus=float((dev.real**2 + dev.imag**2).sum() / len(dev)),
        second_moment=_cmean(values * values),
    )


def _cmean(values: np.ndarray, count: int | None = None) -> complex:
    # numpy's complex-by-real division is not exact, so split the parts;
    # this keeps Var_n(0) at exactly zero
    count = len(values) if count is None else count
    return complex(values.real.sum() / count, values.imag.sum() / count)


def gap_centre(stats: SummandStats) -> Fraction | float:
    """Mean number of gaps per ``z``: ``mu_n - 1``.

    The summand mean is only pinned down up to an additive constant; centring
    on the gap count makes the lemma sums vanish identically when every ``z``
    has the same number of summands.
    """
    return stats.mu_n - 1


def _lemma_terms(decomps, stats: SummandStats, t: float, mu, power: int) -> complex:
    batch = as_batch(decomps)
    mu = float(gap_centre(stats) if mu is None else mu)
    gaps_per_row = (batch.k - 1).astype(float)
    ok = gaps_per_row > 0
    sums = _phase_sums(batch, t)[ok]
    kk = gaps_per_row[ok] ** power
    weight = (kk - mu**power) / (kk * mu**power)
    return complex((weight * sums**power).sum() / len(batch))


def lemma1_diagnostic(decomps, stats: SummandStats, t: float, mu=None) -> complex:
    """``(1/|I_n|) sum_z ((k-1) - mu) / ((k-1) mu) * S_z(t)`` with ``S_z(t) = sum_j e^{i t g_j}``."""
    return _lemma_terms(decomps, stats, t, mu, 1)


def lemma2_diagnostic(decomps, stats: SummandStats, t: float, mu=None) -> complex:
    """Squared analogue of :func:`lemma1_diagnostic`."""
    return _lemma_terms(decomps, stats, t, mu, 2)


def diagonal_term(decomps, stats: SummandStats, t: float, mu=None) -> tuple[complex, float]:
    """``(1/(|I_n| mu^2)) sum_{j,g} X_{j,j+g}(n) e^{2itg}`` and its bound ``N_gaps/(|I_n| mu^2)``."""
    batch = as_batch(decomps)
    mu = float(gap_centre(stats) if mu is None else mu)
    scale = len(batch) * mu * mu
    gaps = batch.gaps.astype(float)
    value = complex(np.exp(2j * t * gaps).sum() / scale)
    return value, batch.n_gaps / scale


def concentration_check(stats: SummandStats, delta: float, mu: float | None = None, c_var: float | None = None) -> ConcentrationBand:
    """Fraction of ``z`` with ``|k(z) - mu| > (c_var n)^{1/2 + delta}``.

    ``reference_bound`` is ``exp(-n^{2 delta} / 2)``, the tail size the
    typical/rare split predicts.
    """
    if not 0 < delta < 0.5:
        raise ValueError("delta must lie in (0, 1/2)")
    n = stats.n
    if n is None:
        raise ValueError("stats must carry n")
    mu = float(stats.mu_n) if mu is None else float(mu)
    if c_var is None:
        c_var = stats.c_var_fit if stats.c_var_fit is not None else float(stats.sigma2_n) / n
    c_var = max(float(c_var), 0.0)
    half = (c_var * n) ** (0.5 + delta)
    lower, upper = mu - half, mu + half
    outside = sum(c for k, c in stats.histogram.items() if k < lower or k > upper)
    return ConcentrationBand(
        delta=delta,
        mu=mu,
        c_var=c_var,
        n=n,
        lower=lower,
        upper=upper,
        outside_fraction=outside / stats.size,
        reference_bound=math.exp(-(n ** (2 * delta)) / 2),
    )


def factorization_check(
    spec: SequenceSpec,
    ispec: IntervalSpec = DEFAULT_INTERVAL,
    n: int = 1,
    g_max: int = 8,
    P_ref: GapMeasure | None = None,
    batch: DecompositionBatch | None = None,
    mu=None,
    budget: int = DEFAULT_BUDGET,
) -> FactorizationReport:
    """Compare ``2/(|I_n| mu^2) sum_{j1<j2} X_{j1,j1+g1,j2,j2+g2}(n)`` with ``P(g1) P(g2)``.

    ``P_ref`` stands in for the limiting gap probabilities; without one the
    interval's own average measure is used.
    """
    if batch is None:
        batch = enumerate_batch(spec, ispec, n, budget)
    size = g_max + 1
    stats = summand_count_stats(batch, n)
    mu = float(gap_centre(stats) if mu is None else mu)
    if batch.n_gaps == 0:
        lhs = np.zeros((size, size))
        rhs = np.zeros((size, size)) if P_ref is None else np.outer(P_ref.to_array(size), P_ref.to_array(size))
        return FactorizationReport(n, g_max, mu, lhs, rhs)
    if P_ref is None:
        P_ref = average_gap_measure(batch)
    pairs = ordered_pair_counts(batch, g_max)
    lhs = 2.0 * pairs / (len(batch) * mu * mu)
    p = P_ref.to_array(size)
    return FactorizationReport(n, g_max, mu, lhs, np.outer(p, p))


def is_decreasing(values, allowed_violations: int = 0, factor: float = 1.0) -> bool:
    """True if each value is below ``previous / factor``, up to ``allowed_violations`` misses."""
    values = [abs(v) for v in values]
    misses = sum(1 for a, b in zip(values, values[1:]) if not b < a / factor)
    return misses <= allowed_violations
