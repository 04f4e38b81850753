"""Distance in variations between distributions, and estimators built on it."""
from .distributions import (
    FAMILIES,
    NaturalForm,
    ParametricModel,
    cdf,
    density,
    log_density,
    natural_form,
    parse_model,
    sample,
)
from .errors import *  # noqa: F401,F403
from .estimators import (
    EstimationResult,
    Method,
    PerturbationSweep,
    Status,
    classical_mle,
    classical_truncated_mle,
    estimate,
    exp_rate_classical_two_point,
    exp_rate_two_point,
    min_dv,
    new_mle,
    new_moments,
    normal_mean_two_point,
    normal_sigma_two_point,
    perturbation_sweep,
    weighted_pairwise,
)
from .selection import SelectionReport, select
from .tables import AuxiliaryTable, FrequencyTable, Interval, Region, auxiliary_of, from_samples, truncate
from .vdist import PairwiseDelta, convexity_witness, dv_model, dv_tables, pairwise_terms

__version__ = "0.1.0"
