"""Informative path planning under co-safe temporal logic constraints."""

from .belief import Belief, SensorModel, bayes_update, belief_entropy, uniform_belief
from .graph import InfeasibleSpecification, TransitionSystem, build_product
from .planners import PlanConfig, expected_conditional_entropy, plan_exhaustive, run_rhc
from .scltl import Fsa, parse_formula, translate, word_satisfies

__version__ = "0.1.0"

__all__ = [
    "Belief", "SensorModel", "bayes_update", "belief_entropy", "uniform_belief",
    "InfeasibleSpecification", "TransitionSystem", "build_product",
    "PlanConfig", "expected_conditional_entropy", "plan_exhaustive", "run_rhc",
    "Fsa", "parse_formula", "translate", "word_satisfies",
]
