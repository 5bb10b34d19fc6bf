"""Generalized Zeckendorf decompositions and the statistics of their gaps."""

__version__ = "0.1.0"

from zeckgap.convergence import (
    ConvergenceReport,
    DecayFit,
    convergence_profile,
    decay_fit,
    measure_distance,
)
from zeckgap.decomposition import (
    BudgetExceededError,
    Decomposition,
    DecompositionBatch,
    enumerate_batch,
    enumerate_interval,
    greedy_decompose,
    is_legal,
    recompose,
    sample_batch,
    sample_interval,
    verify_uniqueness,
)
from zeckgap.diagnostics import (
    CharFnEval,
    ConcentrationBand,
    FactorizationReport,
    SummandStats,
    char_fn_average,
    char_fn_individual,
    concentration_check,
    factorization_check,
    gaussianity_check,
    lemma1_diagnostic,
    lemma2_diagnostic,
    summand_count_stats,
    variance_char,
)
from zeckgap.gapstats import (
    GapCountTable,
    GapMeasure,
    NoGapsError,
    average_gap_measure,
    count_gaps,
    gap_probability,
    individual_gap_measure,
)
from zeckgap.sequence import (
    DEFAULT_INTERVAL,
    IntervalSpec,
    SequenceSpec,
    base,
    dominant_root,
    fibonacci,
    get_family,
    interval,
    term,
    tribonacci,
)
