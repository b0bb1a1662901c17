"""Round-limited adaptive algorithms for stochastic and scenario submodular cover."""
from .core import (
    FilterEval,
    FixedRealization,
    IndependentInstance,
    InfeasibleError,
    InputError,
    InvariantViolation,
    Item,
    PolicyTranscript,
    ScenarioInstance,
    ScenarioRealization,
    TruncatedAdditive,
    TruncatedCoverage,
    WeightedTruncatedCoverage,
    evaluate,
    load_instance,
    make_independent_item,
    make_scenario_instance,
    marginal,
    residual,
    sampled_source,
    save_instance,
    verify_monotone_submodular,
)
from .harness import ExperimentSpec, run_experiment
from .oracles import entropy_lower_bound, offline_optimal, optimal_adaptive_independent, optimal_adaptive_scenario
from .parca import ParcaConfig, parca_run, score_exact, score_sampled, ssc_solve
from .setbased import SetRoundPolicy, run_set_based
from .sparca import SparcaConfig, nsc2r_solve, nsc_solve, scenario_score, sparca_run

__version__ = "0.1.0"

__all__ = [
    "ExperimentSpec",
    "FilterEval",
    "FixedRealization",
    "IndependentInstance",
    "InfeasibleError",
    "InputError",
    "InvariantViolation",
    "Item",
    "ParcaConfig",
    "PolicyTranscript",
    "ScenarioInstance",
    "ScenarioRealization",
    "SetRoundPolicy",
    "SparcaConfig",
    "TruncatedAdditive",
    "TruncatedCoverage",
    "WeightedTruncatedCoverage",
    "entropy_lower_bound",
    "evaluate",
    "load_instance",
    "make_independent_item",
    "make_scenario_instance",
    "marginal",
    "nsc2r_solve",
    "nsc_solve",
    "offline_optimal",
    "optimal_adaptive_independent",
    "optimal_adaptive_scenario",
    "parca_run",
    "residual",
    "run_experiment",
    "run_set_based",
    "sampled_source",
    "save_instance",
    "scenario_score",
    "score_exact",
    "score_sampled",
    "sparca_run",
    "ssc_solve",
    "verify_monotone_submodular",
]
