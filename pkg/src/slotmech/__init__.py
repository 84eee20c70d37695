"""Truthful slot-scheduling mechanisms with time-delay payments."""

from .core import (
    Allocation,
    DivisibleInstance,
    InvalidInput,
    MultiSlotInstance,
    Outcome,
    SingleSlotInstance,
    UnsupportedConfiguration,
    check_feasible,
    utility,
    validate_instance,
    welfare,
)
from .mia import approx_bound, run_maa
from .vcgt import run_vcgt

__all__ = [
    "Allocation",
    "DivisibleInstance",
    "InvalidInput",
    "MultiSlotInstance",
    "Outcome",
    "SingleSlotInstance",
    "UnsupportedConfiguration",
    "approx_bound",
    "check_feasible",
    "run_maa",
    "run_vcgt",
    "utility",
    "validate_instance",
    "welfare",
]
