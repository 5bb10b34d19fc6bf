"""Distances between gap measures, per-interval convergence profiles and geometric decay fits."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from zeckgap.decomposition import DEFAULT_BUDGET, DecompositionBatch, enumerate_batch, sample_batch
from zeckgap.gapstats import GapMeasure, average_gap_measure
from zeckgap.sequence import DEFAULT_INTERVAL, IntervalSpec, SequenceSpec

__all__ = [
    "METRICS",
    "DistanceSummary",
    "ConvergenceReport",
    "DecayFit",
    "measure_distance",
    "individual_distances",
    "convergence_profile",
    "decay_fit",
]

METRICS = ("l1", "sup_cdf")


def _check_metric(metric: str) -> str:
    metric = metric.lower().replace("-", "_")
    if metric not in METRICS:
        raise ValueError(f"unknown metric {metric!r}; expected one of {METRICS}")
    return metric


def measure_distance(a: GapMeasure, b: GapMeasure, metric: str = "l1") -> float:
    """L1 distance ``sum_g |a(g) - b(g)|`` or the sup distance between CDFs."""
    metric = _check_metric(metric)
    size = max(a.support_max, b.support_max) + 1
    diff = a.to_array(size) - b.to_array(size)
    if metric == "l1":
        return float(np.abs(diff).sum())
    return float(np.abs(np.cumsum(diff)).max())


def individual_distances(batch: DecompositionBatch, ref: GapMeasure, metric: str = "l1") -> np.ndarray:
    """Distance from each ``z``'s own gap measure to ``ref``; rows with one summand are skipped."""
    metric = _check_metric(metric)
    gaps_per_row = batch.k - 1
    rows = np.nonzero(gaps_per_row > 0)[0]
    if len(rows) == 0:
        return np.zeros(0)
    size = max(int(batch.gaps.max()), ref.support_max) + 1
    # dense row-by-gap-length count matrix, restricted to rows with gaps
    counts = np.bincount(batch.gap_owner * size + batch.gaps, minlength=len(batch) * size)
    counts = counts.reshape(len(batch), size)[rows]
    diff = counts / gaps_per_row[rows, None] - ref.to_array(size)
    if metric == "l1":
        return np.abs(diff).sum(axis=1)
    return np.abs(np.cumsum(diff, axis=1)).max(axis=1)


@dataclass
class DistanceSummary:
    n: int
    count: int
    mean: float
    median: float
    max: float
    fraction_above: float
    distances: np.ndarray = field(repr=False)

    def fraction_above_at(self, epsilon: float) -> float:
        return float(np.mean(self.distances > epsilon)) if len(self.distances) else 0.0


@dataclass
class ConvergenceReport:
    n_values: list[int]
    rows: list[DistanceSummary]
    epsilon: float
    metric: str
    reference: str

    @property
    def fractions(self) -> list[float]:
        return [r.fraction_above for r in self.rows]


def convergence_profile(
    spec: SequenceSpec,
    ispec: IntervalSpec = DEFAULT_INTERVAL,
    n_values=(10,),
    epsilon: float = 0.25,
    metric: str = "l1",
    mode: str = "enumerate",
    P_ref: GapMeasure | None = None,
    sample_count: int = 10**5,
    seed: int = 0,
    workers: int = 1,
    budget: int = DEFAULT_BUDGET,
) -> ConvergenceReport:
    """Per-``n`` distances of individual gap measures from a reference measure.

    Without ``P_ref`` the reference is the average measure at the largest
    ``n`` requested, computed in the same mode.
    """
    metric = _check_metric(metric)
    if mode not in ("enumerate", "sample"):
        raise ValueError("mode must be 'enumerate' or 'sample'")
    n_values = list(n_values)

    def load(n: int) -> DecompositionBatch:
        if mode == "enumerate":
            return enumerate_batch(spec, ispec, n, budget)
        return sample_batch(spec, ispec, n, sample_count, seed, workers)

    batches = {n: load(n) for n in n_values}
    reference = "supplied"
    if P_ref is None:
        top = max(n_values)
        P_ref = average_gap_measure(batches[top])
        reference = f"average gap measure at n={top} ({mode})"

    rows = []
    for n in n_values:
        d = individual_distances(batches[n], P_ref, metric)
        rows.append(
            DistanceSummary(
                n=n,
                count=len(d),
                mean=float(d.mean()) if len(d) else 0.0,
                median=float(np.median(d)) if len(d) else 0.0,
                max=float(d.max()) if len(d) else 0.0,
                fraction_above=float(np.mean(d > epsilon)) if len(d) else 0.0,
                distances=d,
            )
        )
    return ConvergenceReport(n_values, rows, epsilon, metric, reference)


@dataclass
class DecayFit:
    g_range: tuple[int, int]
    ratio: float
    intercept: float
    r_squared: float
    lambda_ref: float | None
    g: np.ndarray = field(repr=False)
    log_p: np.ndarray = field(repr=False)

    @property
    def residuals(self) -> np.ndarray:
        return self.log_p - (self.intercept + math.log(self.ratio) * self.g)

    @property
    def inverse_lambda(self) -> float | None:
        return None if self.lambda_ref is None else 1.0 / self.lambda_ref

    @property
    def inverse_lambda_squared(self) -> float | None:
        return None if self.lambda_ref is None else 1.0 / self.lambda_ref**2

    def relative_error(self, target: float) -> float:
        return abs(self.ratio - target) / target


def decay_fit(m: GapMeasure, g_min: int = 3, g_max: int = 10, lambda_ref: float | None = None) -> DecayFit:
    """Least-squares line through ``(g, log P(g))`` on ``[g_min, g_max]``.

    Gaps with zero mass inside the window are dropped with a warning; fewer
    than three usable points is an error.
    """
    gs = np.arange(g_min, g_max + 1)
    p = np.array([float(m(int(g))) for g in gs])
    positive = p > 0
    if not positive.all():
        warnings.warn(f"zero mass at g={gs[~positive].tolist()}; fitting the remaining points", RuntimeWarning, stacklevel=2)
    gs, p = gs[positive], p[positive]
    if len(gs) < 3:
        raise ValueError(f"need at least 3 positive masses in [{g_min}, {g_max}], found {len(gs)}")
    logp = np.log(p)
    slope, intercept = np.polyfit(gs, logp, 1)
    fitted = intercept + slope * gs
    ss_res = float(((logp - fitted) ** 2).sum())
    ss_tot = float(((logp - logp.mean()) ** 2).sum())
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return DecayFit((int(gs[0]), int(gs[-1])), float(np.exp(slope)), float(intercept), r2, lambda_ref, gs, logp)
