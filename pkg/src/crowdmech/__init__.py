"""Incentive mechanisms for microtask crowdsourcing.

``basic``      reward-consensus and reward-accuracy mechanisms
``training``   the two-state quality-aware training mechanism
``simulation`` Monte Carlo population runs
``cli``        CSV-emitting command line front end
"""
from .cost import QuadraticCost, check_assumptions
from .errors import ConvergenceError, DomainError, PreconditionError

__version__ = "0.1.0"

__all__ = ["QuadraticCost", "check_assumptions", "DomainError", "PreconditionError", "ConvergenceError"]
