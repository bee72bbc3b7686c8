"""Kirk-type multistep fixed-point iterations and their stability laboratory."""

from .analysis import (
    RateEstimate,
    SigmaBreakdown,
    estimate_rate,
    lemma1_oracle,
    ostrowski_bound,
    sigma,
    verify_sigma_bound,
)
from .corpus import CORPUS, corpus_table, get_operator
from .operators import (
    Condition,
    ConditionReport,
    NormKind,
    Operator,
    PhiFunction,
    UniformSampler,
    apply_power,
    check_condition,
    lemma2_bound,
    verify_lemma2,
)
from .schemes import (
    ConfigError,
    Family,
    IterationTrace,
    SchemeConfig,
    WeightRow,
    WeightSchedule,
    run,
    specialize,
    step,
)
from .stability import (
    PerturbationModel,
    StabilityReport,
    Verdict,
    measure_residuals,
    perturbed_run,
    stability_verdict,
)

__version__ = "0.1.0"
