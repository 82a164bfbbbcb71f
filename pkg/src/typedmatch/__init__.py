"""Solvers for NP-hard stable matching problems on type-structured
instances, cross-validated against brute-force oracles."""

__version__ = "0.1.0"

from .core import (AgentMatching, InstanceError, TypedInstance,
                   TypePreference, parse_instance, format_instance)
from .typed import NoStableError

__all__ = [
    "AgentMatching", "InstanceError", "TypedInstance", "TypePreference",
    "parse_instance", "format_instance", "NoStableError",
]
