"""Adaptive interferometric phase estimation as a learned decision process.

Simulates single-shot Mach-Zehnder phase estimation with photon-by-photon
feedback on permutation-symmetric states, trains feedback policies by
differential evolution, and quantifies imprecision (Holevo variance)
against Fisher-information bounds for entangled and non-entangled inputs.
"""

from .estimator import AdaptivePhaseEstimator
from .inference import (
    EstimateDistribution,
    FisherResult,
    ImprecisionReport,
    UnsharpSignalError,
    crlb,
    error_resultant,
    estimate_distribution,
    fisher_information,
    outcome_distribution,
    plain_variance,
    resultants_imprecision,
    sharpness_and_holevo,
)
from .interferometer import (
    DegenerateBranchError,
    MeasurementRecord,
    PhasePair,
    kraus_apply,
    measure_one,
    simulate_batch,
    simulate_single_shot,
    single_photon_matrix,
)
from .optimize import DEConfig, DEResult, TrainingSet, de_optimize, objective
from .policy import (
    OutcomeHistory,
    Policy,
    TreeTooLargeError,
    enumerate_histories,
    feedback_update,
    load_policy,
    policy_tree_size,
    save_policy,
)
from .scaling import (
    PowerLawFit,
    ScalingResult,
    TrainingOutcome,
    evaluate_policy,
    evaluate_policy_exact,
    fit_power_law,
    run_scaling,
    run_training,
)
from .states import (
    SymmetricState,
    WignerDTable,
    product_state,
    sine_state,
    wigner_d_half_pi,
)

__version__ = "0.1.0"

__all__ = [
    "AdaptivePhaseEstimator",
    "DEConfig",
    "DEResult",
    "DegenerateBranchError",
    "EstimateDistribution",
    "FisherResult",
    "ImprecisionReport",
    "MeasurementRecord",
    "OutcomeHistory",
    "PhasePair",
    "Policy",
    "PowerLawFit",
    "ScalingResult",
    "SymmetricState",
    "TrainingOutcome",
    "TrainingSet",
    "TreeTooLargeError",
    "UnsharpSignalError",
    "WignerDTable",
    "crlb",
    "de_optimize",
    "enumerate_histories",
    "error_resultant",
    "estimate_distribution",
    "evaluate_policy",
    "evaluate_policy_exact",
    "feedback_update",
    "fisher_information",
    "fit_power_law",
    "kraus_apply",
    "load_policy",
    "measure_one",
    "objective",
    "outcome_distribution",
    "plain_variance",
    "policy_tree_size",
    "product_state",
    "resultants_imprecision",
    "run_scaling",
    "run_training",
    "save_policy",
    "sharpness_and_holevo",
    "simulate_batch",
    "simulate_single_shot",
    "sine_state",
    "single_photon_matrix",
    "wigner_d_half_pi",
]
