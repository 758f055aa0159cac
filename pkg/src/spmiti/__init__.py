"""Optimal software-protection selection as a defender/attacker mini-max game."""
from .errors import (
    ConfigError,
    DegenerateVanillaWarning,
    EmptySolutionSpace,
    GuardrailExceeded,
    ParseError,
    SpaceTooLarge,
    SplitError,
    SpmitiError,
    TooLarge,
    UnknownMetric,
    UnknownOverheadType,
    UnknownStep,
    ValidationError,
)
from .explorer import SearchConfig, SearchResult, SpaceOptions, explore, optimize_monolithic, optimize_per_ccs
from .index import IndexConfig, State, sp_index
from .kb import KnowledgeBase, Relation, load_kb
from .model import ApplicationModel, load_model
from .prep import CodeCorrelationSet, compatible_dsps, compute_ccs, split_solution
from .solspace import SolutionIterator, enumerate_all, is_valid_sequence, valid_orderings
from .solution import VANILLA, DeployedProtection, Solution

__version__ = "0.1.0"

__all__ = [
    "ApplicationModel",
    "CodeCorrelationSet",
    "ConfigError",
    "DegenerateVanillaWarning",
    "DeployedProtection",
    "EmptySolutionSpace",
    "GuardrailExceeded",
    "IndexConfig",
    "KnowledgeBase",
    "ParseError",
    "Relation",
    "SearchConfig",
    "SearchResult",
    "Solution",
    "SolutionIterator",
    "SpaceOptions",
    "SpaceTooLarge",
    "SplitError",
    "SpmitiError",
    "State",
    "TooLarge",
    "UnknownMetric",
    "UnknownOverheadType",
    "UnknownStep",
    "VANILLA",
    "ValidationError",
    "compatible_dsps",
    "compute_ccs",
    "enumerate_all",
    "explore",
    "is_valid_sequence",
    "load_kb",
    "load_model",
    "optimize_monolithic",
    "optimize_per_ccs",
    "sp_index",
    "split_solution",
    "valid_orderings",
]
