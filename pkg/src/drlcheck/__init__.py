"""Verification of ReLU policy networks over sliding-window transition systems."""

__version__ = "0.1.0"

from .network import Network, Relu, WeightedSum, evaluate, load_network, save_network  # noqa: E402
from .query import LinearConstraint, Query, VarRef, eq, ge, inp, le, out  # noqa: E402
from .solver import SAT, UNKNOWN, UNSAT, SolverConfig, Verdict, solve  # noqa: E402
from .transition import StatePredicate, TransitionSpec, unroll  # noqa: E402
from .checker import CheckConfig, Property, bmc, k_induction_liveness, k_induction_safety, portfolio  # noqa: E402
from .invariants import InputBoundSearch, OutputBoundSearch, find_input_invariant, find_output_invariant  # noqa: E402
from .abstraction import AbstractionMask, abstract_query, parse_mask, solve_with_abstraction  # noqa: E402

__all__ = [
    "AbstractionMask", "CheckConfig", "InputBoundSearch", "LinearConstraint", "Network",
    "OutputBoundSearch", "Property", "Query", "Relu", "SAT", "SolverConfig", "StatePredicate",
    "TransitionSpec", "UNKNOWN", "UNSAT", "VarRef", "Verdict", "WeightedSum", "abstract_query", "bmc",
    "eq", "evaluate", "find_input_invariant", "find_output_invariant", "ge", "inp",
    "k_induction_liveness", "k_induction_safety", "le", "load_network", "out", "parse_mask",
    "portfolio", "save_network", "solve", "solve_with_abstraction", "unroll",
]
