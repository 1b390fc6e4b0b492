"""Exact diagnostic inference with numeric probabilities and kappa rankings."""

from .algebra import MIN_PLUS, SUM_PRODUCT, Algebra
from .car import CarModel, build_reference_model, generate_cases, scale_priors
from .errors import (
    ContradictoryEvidenceError,
    DomainError,
    RankbenchError,
    StateSpaceTooLarge,
    ValidationError,
)
from .harness import aggregate, run_grid
from .inference import elimination_order, enumerate_oracle, posterior_marginals
from .kappa import (
    ConversionPolicy,
    PlausibleSet,
    convert_network,
    kappa_as_probability,
    kappa_map,
    plausible_set,
    probability_score,
)
from .model import (
    ExplicitTable,
    Network,
    NoisyMax,
    NoisyOr,
    Prior,
    RankNetwork,
    Variable,
    compile_noisy_max,
    compile_noisy_or,
    validate,
)
from .netio import load_network, save_network

__version__ = "0.1.0"

__all__ = [
    "MIN_PLUS", "SUM_PRODUCT", "Algebra",
    "CarModel", "build_reference_model", "generate_cases", "scale_priors",
    "ContradictoryEvidenceError", "DomainError", "RankbenchError", "StateSpaceTooLarge", "ValidationError",
    "aggregate", "run_grid",
    "elimination_order", "enumerate_oracle", "posterior_marginals",
    "ConversionPolicy", "PlausibleSet", "convert_network", "kappa_as_probability", "kappa_map", "plausible_set",
    "probability_score",
    "ExplicitTable", "Network", "NoisyMax", "NoisyOr", "Prior", "RankNetwork", "Variable",
    "compile_noisy_max", "compile_noisy_or", "validate",
    "load_network", "save_network",
]
