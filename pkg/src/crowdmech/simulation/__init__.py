"""Population simulator used as an empirical check on the analytic results."""
from .engine import (BACKENDS, DEFAULT_BACKEND, Estimate, SimConfig, SimResult,
                     replicate, simulate)

__all__ = ["BACKENDS", "DEFAULT_BACKEND", "Estimate", "SimConfig", "SimResult", "replicate", "simulate"]
