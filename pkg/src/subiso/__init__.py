"""Quasi-isometry certificates for random column submatrices.

The package answers one question: given a matrix with unit-norm columns,
how large a random subset of columns can be taken while keeping the
submatrix a near isometry?  ``certificate`` holds the closed-form
sufficient conditions, ``montecarlo`` and ``oracles`` provide the
empirical machinery that stress-tests each inequality in the chain, and
``cli`` wraps everything in a reproducible command line.
"""

from .certificate import (
    CANDES_PLAN_CS_CAP,
    CANDES_PLAN_CS_CHOICE,
    DECOUPLING_FACTOR,
    FAILURE_BOUND_CONSTANT,
    POISSONIZATION_FACTOR,
    UNION_BOUND_TERMS,
    CoherenceStats,
    ConstantsComparison,
    ConstraintRow,
    DecouplingConstants,
    EnvelopeDomainError,
    HypothesisReport,
    TheoremParams,
    TuningParams,
    candes_plan_cmu_for_cs,
    candes_plan_cs_max,
    chernoff_envelope,
    chernoff_envelope_log,
    check_hypotheses,
    coherence,
    constants_comparison,
    decoupling_constants,
    tune_parameters,
)
from .ensembles import (
    EnsembleSpec,
    SelectorSample,
    dct_ii_matrix,
    gaussian_unit,
    gen_matrix,
    mask_bilateral,
    parse_gen_spec,
    sample_bernoulli,
    sample_uniform_subset,
    spikes_sines,
)
from .matrix_core import (
    NormReport,
    SpectralNormError,
    column_norms,
    extract_principal,
    gram,
    hollow_gram,
    max_abs,
    max_col_l2,
    normalize_columns,
    norms,
    read_matrix_csv,
    spectral_norm,
    warn_if_rank_deficient,
    write_matrix_csv,
)
from .montecarlo import (
    DEFAULT_GAMMA,
    IntermediateTails,
    TailComparison,
    TailEstimate,
    Verdict,
    binomial_upper_bound,
    collect_samples,
    decoupling_experiment,
    estimate_tail,
    failure_probability_experiment,
    intermediate_tails,
    poissonization_experiment,
    resolution_floor,
    tail_estimates,
)
from .oracles import (
    ChaosInstance,
    ChaosMoments,
    ChernoffDomainError,
    ChernoffEmpiricalResult,
    ChernoffInstance,
    SummandInvariantError,
    chaos_moments_exact,
    chaos_moments_formula,
    chernoff_bound,
    chernoff_empirical,
    diagonal_bernoulli_instance,
    random_chaos_instance,
    read_chaos_csv,
)

__version__ = "0.1.0"

__all__ = [
    "CANDES_PLAN_CS_CAP",
    "CANDES_PLAN_CS_CHOICE",
    "DECOUPLING_FACTOR",
    "DEFAULT_GAMMA",
    "FAILURE_BOUND_CONSTANT",
    "POISSONIZATION_FACTOR",
    "UNION_BOUND_TERMS",
    "ChaosInstance",
    "ChaosMoments",
    "ChernoffDomainError",
    "ChernoffEmpiricalResult",
    "ChernoffInstance",
    "CoherenceStats",
    "ConstantsComparison",
    "ConstraintRow",
    "DecouplingConstants",
    "EnsembleSpec",
    "EnvelopeDomainError",
    "HypothesisReport",
    "IntermediateTails",
    "NormReport",
    "SelectorSample",
    "SpectralNormError",
    "SummandInvariantError",
    "TailComparison",
    "TailEstimate",
    "TheoremParams",
    "TuningParams",
    "Verdict",
    "binomial_upper_bound",
    "candes_plan_cmu_for_cs",
    "candes_plan_cs_max",
    "chaos_moments_exact",
    "chaos_moments_formula",
    "chernoff_bound",
    "chernoff_empirical",
    "chernoff_envelope",
    "chernoff_envelope_log",
    "check_hypotheses",
    "coherence",
    "collect_samples",
    "column_norms",
    "constants_comparison",
    "dct_ii_matrix",
    "decoupling_constants",
    "decoupling_experiment",
    "diagonal_bernoulli_instance",
    "estimate_tail",
    "extract_principal",
    "failure_probability_experiment",
    "gaussian_unit",
    "gen_matrix",
    "gram",
    "hollow_gram",
    "intermediate_tails",
    "mask_bilateral",
    "max_abs",
    "max_col_l2",
    "normalize_columns",
    "norms",
    "parse_gen_spec",
    "poissonization_experiment",
    "random_chaos_instance",
    "read_chaos_csv",
    "read_matrix_csv",
    "resolution_floor",
    "sample_bernoulli",
    "sample_uniform_subset",
    "spectral_norm",
    "spikes_sines",
    "tail_estimates",
    "tune_parameters",
    "warn_if_rank_deficient",
    "write_matrix_csv",
]
