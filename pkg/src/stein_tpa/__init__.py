"""Translated Poisson approximation for integer random variables through
exchangeable pairs: exact laws, Stein solutions, error bounds and checks."""

__version__ = "0.1.0"

from .dist import (
    IntegerPmf,
    TranslatedPoissonParams,
    d_loc,
    d_tv,
    make_tp,
    moments,
    tp_pmf,
    tp_sample,
    tp_window,
)
from .errors import InputError, SteinTPAError, VerificationError
from .models import (
    PairModel,
    build_binomial,
    build_hypergeometric,
    build_parity,
    build_poisson_binomial,
)
from .stein import SteinSolution, solve_stein
from .antivoter import (
    Graph,
    StationarySummary,
    complete_graph,
    exact_stationary,
    load_graph,
    mcmc_estimate,
    pair_model_from_stationary,
    petersen_graph,
)
from .bounds import BoundIngredients, BoundReport, full_report

__all__ = [
    "BoundIngredients",
    "BoundReport",
    "Graph",
    "InputError",
    "IntegerPmf",
    "PairModel",
    "StationarySummary",
    "SteinSolution",
    "SteinTPAError",
    "TranslatedPoissonParams",
    "VerificationError",
    "build_binomial",
    "build_hypergeometric",
    "build_parity",
    "build_poisson_binomial",
    "complete_graph",
    "d_loc",
    "d_tv",
    "exact_stationary",
    "full_report",
    "load_graph",
    "make_tp",
    "mcmc_estimate",
    "moments",
    "pair_model_from_stationary",
    "petersen_graph",
    "solve_stein",
    "tp_pmf",
    "tp_sample",
    "tp_window",
]
