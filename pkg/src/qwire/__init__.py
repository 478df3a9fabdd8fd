"""Simulator and compiler for globally controlled Ising-coupled quantum wires."""
from .core import (ChainConfig, FrameLedger, PauliString, PulseLayer, PulseSchedule,
                   parse_schedule, serialize_schedule, validate_schedule)
from .kernels import BACKEND_NAME

__all__ = [
    "BACKEND_NAME", "ChainConfig", "FrameLedger", "PauliString", "PulseLayer",
    "PulseSchedule", "parse_schedule", "serialize_schedule", "validate_schedule",
]
__version__ = "0.1.0"
